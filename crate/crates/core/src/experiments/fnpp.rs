//! funNyström++ over a grid of probe counts, with the Nyström++ baseline
//! on Lanczos products at a matched budget of products with `A`.

use super::config::{positive_list, require, ExperimentConfig};
use super::output::{percentile, ExperimentOutput, Table};
use super::{fmt_f64, par_map, repetition_seed, DenseReference};
use crate::error::Result;
use crate::lanczos::LanczosParams;
use crate::linalg::{oracle_from_dense, MatVecOracle};
use crate::trace::{fun_nystrom_pp, nystrom_pp_baseline};

struct Record {
    method: &'static str,
    q: usize,
    /// Probe count `ℓ` of the funNyström++ point this row belongs to.
    point: usize,
    probes: usize,
    rank: usize,
    budget: usize,
    rep: usize,
    seed: u64,
    mvps: usize,
    estimate: f64,
    rel_error: f64,
}

/// Even Nyström++ budget closest to `mvps / depth`, at least 2.
fn matched_budget(mvps: usize, depth: usize) -> usize {
    let m = 2.0 * (mvps as f64 / depth as f64 / 2.0).round();
    (m as usize).max(2)
}

pub fn run_fnpp_sweep(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let spec = cfg.matrix_spec("alg:n=1000,s=100,c=2")?;
    require(
        spec.n <= 2000,
        "matrix",
        "fnpp-sweep needs a dense reference, n <= 2000",
    )?;
    let f = cfg.function("log1p")?;
    let n = spec.n;
    let probes = positive_list(
        "trace.probes",
        cfg.trace.probes.as_deref().unwrap_or(&[12, 24, 48, 96]),
        Some(n),
    )?;
    let factor = cfg.trace.rank_factor.unwrap_or(1);
    require(factor >= 1, "trace.rank_factor", "must be positive")?;
    let qs = cfg.q_list(&[1])?;
    let depth = cfg.lanczos.depth.unwrap_or(10);
    require(
        depth >= 1 && depth <= n,
        "lanczos.depth",
        format!("must lie in [1, {n}]"),
    )?;
    let mut params = LanczosParams::new(depth)?;
    if !cfg.lanczos.reorthogonalize.unwrap_or(true) {
        params = params.without_reorthogonalization();
    }
    let baseline = cfg.trace.baseline.unwrap_or(true);
    let reps = cfg.repetitions(50)?;
    let base_seed = cfg.seed();
    for &l in &probes {
        require(
            factor * l <= n,
            "trace.probes",
            format!("rank {} exceeds the matrix dimension", factor * l),
        )?;
    }

    let reference = DenseReference::new(&spec, f)?;
    let exact = reference.trace_of_fa();
    let rel = |est: f64| {
        if exact != 0.0 {
            (est - exact).abs() / exact.abs()
        } else {
            est.abs()
        }
    };
    let a = &reference.test_matrix.matrix;

    let mut jobs = Vec::new();
    for rep in 0..reps {
        for &q in &qs {
            for &l in &probes {
                jobs.push((rep, q, l));
            }
        }
    }
    let results = par_map(jobs.len(), |j| -> Result<Vec<Record>> {
        let (rep, q, l) = jobs[j];
        let seed = repetition_seed(base_seed, rep);
        let r = factor * l;
        let oracle = oracle_from_dense(a);
        let est = fun_nystrom_pp(&oracle, &f, r, l, q, params, seed)?;
        let mvps = oracle.mvp_count();
        let mut out = vec![Record {
            method: "funnystrom++",
            q,
            point: l,
            probes: l,
            rank: r,
            budget: mvps,
            rep,
            seed,
            mvps,
            estimate: est.value,
            rel_error: rel(est.value),
        }];
        if baseline {
            let m = matched_budget(q * r + l * depth, depth);
            let oracle = oracle_from_dense(a);
            let b = nystrom_pp_baseline(&oracle, &f, m, params, seed)?;
            out.push(Record {
                method: "nystrom++",
                q,
                point: l,
                probes: m / 2,
                rank: m / 2,
                budget: mvps,
                rep,
                seed,
                mvps: oracle.mvp_count(),
                estimate: b.value,
                rel_error: rel(b.value),
            });
        }
        Ok(out)
    });
    let mut records = Vec::new();
    for r in results {
        records.extend(r?);
    }

    let mut raw = Table::new(
        "fnpp_sweep",
        &[
            "method",
            "q",
            "probes",
            "rank",
            "depth",
            "matched_mvps",
            "repetition",
            "seed",
            "mvps",
            "estimate",
            "exact",
            "rel_error",
        ],
    );
    for r in &records {
        raw.push(vec![
            r.method.into(),
            r.q.to_string(),
            r.probes.to_string(),
            r.rank.to_string(),
            depth.to_string(),
            r.budget.to_string(),
            r.rep.to_string(),
            r.seed.to_string(),
            r.mvps.to_string(),
            fmt_f64(r.estimate),
            fmt_f64(exact),
            fmt_f64(r.rel_error),
        ]);
    }

    let mut summary = Table::new(
        "fnpp_sweep_summary",
        &[
            "method",
            "q",
            "sweep_probes",
            "rank",
            "mvps_median",
            "err_p5",
            "err_p50",
            "err_p90",
            "err_p95",
            "count",
        ],
    );
    let methods: &[&str] = if baseline {
        &["funnystrom++", "nystrom++"]
    } else {
        &["funnystrom++"]
    };
    for &method in methods {
        for &q in &qs {
            for &l in &probes {
                let sel: Vec<&Record> = records
                    .iter()
                    .filter(|r| r.method == method && r.q == q && r.point == l)
                    .collect();
                let errs: Vec<f64> = sel.iter().map(|r| r.rel_error).collect();
                let mvps: Vec<f64> = sel.iter().map(|r| r.mvps as f64).collect();
                summary.push(vec![
                    method.into(),
                    q.to_string(),
                    l.to_string(),
                    sel[0].rank.to_string(),
                    fmt_f64(percentile(&mvps, 50.0)),
                    fmt_f64(percentile(&errs, 5.0)),
                    fmt_f64(percentile(&errs, 50.0)),
                    fmt_f64(percentile(&errs, 90.0)),
                    fmt_f64(percentile(&errs, 95.0)),
                    sel.len().to_string(),
                ]);
            }
        }
    }

    Ok(ExperimentOutput {
        tables: vec![raw, summary],
        metadata: vec![
            ("matrix".into(), spec.to_string()),
            ("function".into(), f.to_string()),
            ("depth".into(), depth.to_string()),
            ("rank_factor".into(), factor.to_string()),
            ("repetitions".into(), reps.to_string()),
            ("seed".into(), base_seed.to_string()),
            ("exact_trace".into(), fmt_f64(exact)),
        ],
        plot_script: PLOT.into(),
        violations: Vec::new(),
    })
}

const PLOT: &str = r#"# gnuplot script: relative trace error against mvps with A, 5th to 95th percentile bands.
set datafile separator ','
set logscale xy
set xlabel 'mvps with A'
set ylabel 'relative error'
set key top right
plot 'fnpp_sweep_summary.csv' using 5:(strcol(1) eq 'funnystrom++' ? $6 : 1/0):(strcol(1) eq 'funnystrom++' ? $9 : 1/0) with filledcurves fs transparent solid 0.2 title 'funNystrom++ 5-95%', \
     '' using 5:(strcol(1) eq 'funnystrom++' ? $7 : 1/0) with linespoints title 'funNystrom++ median', \
     '' using 5:(strcol(1) eq 'nystrom++' ? $6 : 1/0):(strcol(1) eq 'nystrom++' ? $9 : 1/0) with filledcurves fs transparent solid 0.2 title 'Nystrom++ 5-95%', \
     '' using 5:(strcol(1) eq 'nystrom++' ? $7 : 1/0) with linespoints title 'Nystrom++ median'
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matched_budget_is_even() {
        assert_eq!(matched_budget(132, 10), 14);
        assert_eq!(matched_budget(1, 10), 2);
        assert_eq!(matched_budget(200, 10), 20);
    }
}
