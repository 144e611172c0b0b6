//! Products with `A` against attained accuracy: funNyström versus Nyström
//! applied to `f(A)` through Lanczos, with the depth chosen adaptively.

use super::config::{require, ExperimentConfig};
use super::output::{percentile, ExperimentOutput, Table};
use super::{fmt_f64, par_map, repetition_seed, DenseReference};
use crate::error::Result;
use crate::lanczos::{adaptive_depth, DepthSearch};
use crate::linalg::{oracle_from_dense, MatVecOracle, Norm};
use crate::nystrom::{fun_nystrom, Sketch};

const METHODS: [&str; 2] = ["funnystrom", "lanczos-nystrom"];

struct Record {
    method: &'static str,
    q: usize,
    rank: usize,
    rep: usize,
    seed: u64,
    depth: Option<usize>,
    saturated: bool,
    mvps: usize,
    rel_error: f64,
}

pub fn run_budget_curve(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let spec = cfg.matrix_spec("alg:n=500,s=1,c=3")?;
    require(
        spec.n <= 1000,
        "matrix",
        "budget-curve needs a dense reference, n <= 1000",
    )?;
    let f = cfg.function("sqrt")?;
    let norm = cfg.norm(Norm::Frobenius)?;
    let ranks = cfg.ranks(&[5, 10, 20, 40, 80], spec.n)?;
    let qs = cfg.q_list(&[1])?;
    let reps = cfg.repetitions(10)?;
    let base_seed = cfg.seed();
    let search = DepthSearch {
        factor: cfg.lanczos.factor.unwrap_or(1.1),
        step: cfg.lanczos.step.unwrap_or(5),
        reorthogonalize: cfg.lanczos.reorthogonalize.unwrap_or(true),
    };
    require(search.factor >= 1.0, "lanczos.factor", "must be at least 1")?;
    require(search.step >= 1, "lanczos.step", "must be positive")?;

    let reference = DenseReference::new(&spec, f)?;
    let scale = reference.norm_of_fa(norm);
    let relative = |e: f64| if scale > 0.0 { e / scale } else { e };

    let mut jobs = Vec::new();
    for rep in 0..reps {
        for &q in &qs {
            for &k in &ranks {
                jobs.push((rep, q, k));
            }
        }
    }
    let results = par_map(jobs.len(), |j| -> Result<[Record; 2]> {
        let (rep, q, k) = jobs[j];
        let seed = repetition_seed(base_seed, rep);
        let oracle = oracle_from_dense(&reference.test_matrix.matrix);
        let fac = fun_nystrom(&oracle, &f, k, q, &Sketch::gaussian(seed))?;
        let fun_err = reference.error(&fac.to_dense(), norm)?;
        let sel = adaptive_depth(
            &reference.test_matrix.matrix,
            &reference.f_of_a,
            &f,
            k,
            q,
            seed,
            norm,
            search,
        )?;
        Ok([
            Record {
                method: METHODS[0],
                q,
                rank: k,
                rep,
                seed,
                depth: None,
                saturated: false,
                mvps: oracle.mvp_count(),
                rel_error: relative(fun_err),
            },
            Record {
                method: METHODS[1],
                q,
                rank: k,
                rep,
                seed,
                depth: Some(sel.depth),
                saturated: sel.saturated,
                mvps: sel.mvps,
                rel_error: relative(sel.lanczos_error),
            },
        ])
    });
    let mut records = Vec::with_capacity(2 * jobs.len());
    for r in results {
        records.extend(r?);
    }

    let mut raw = Table::new(
        "budget_curve",
        &[
            "method",
            "q",
            "rank",
            "repetition",
            "seed",
            "depth",
            "saturated",
            "mvps",
            "rel_error",
        ],
    );
    for r in &records {
        raw.push(vec![
            r.method.into(),
            r.q.to_string(),
            r.rank.to_string(),
            r.rep.to_string(),
            r.seed.to_string(),
            r.depth.map(|d| d.to_string()).unwrap_or_default(),
            r.saturated.to_string(),
            r.mvps.to_string(),
            fmt_f64(r.rel_error),
        ]);
    }

    let mut summary = Table::new(
        "budget_curve_summary",
        &[
            "method",
            "q",
            "rank",
            "mvps_median",
            "err_p5",
            "err_p50",
            "err_p95",
            "count",
        ],
    );
    for method in METHODS {
        for &q in &qs {
            for &k in &ranks {
                let sel: Vec<&Record> = records
                    .iter()
                    .filter(|r| r.method == method && r.q == q && r.rank == k)
                    .collect();
                let errs: Vec<f64> = sel.iter().map(|r| r.rel_error).collect();
                let mvps: Vec<f64> = sel.iter().map(|r| r.mvps as f64).collect();
                summary.push(vec![
                    method.into(),
                    q.to_string(),
                    k.to_string(),
                    fmt_f64(percentile(&mvps, 50.0)),
                    fmt_f64(percentile(&errs, 5.0)),
                    fmt_f64(percentile(&errs, 50.0)),
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
            ("norm".into(), norm.to_string()),
            ("repetitions".into(), reps.to_string()),
            ("seed".into(), base_seed.to_string()),
            ("depth_factor".into(), search.factor.to_string()),
            ("depth_step".into(), search.step.to_string()),
        ],
        plot_script: PLOT.into(),
        violations: Vec::new(),
    })
}

const PLOT: &str = r#"# gnuplot script: mvps with A against median relative error.
set datafile separator ','
set logscale xy
set xlabel 'mvps with A'
set ylabel 'relative error'
set key top right
plot 'budget_curve_summary.csv' using ($4):(strcol(1) eq 'funnystrom' ? $6 : 1/0) with linespoints title 'funNystrom', \
     '' using ($4):(strcol(1) eq 'lanczos-nystrom' ? $6 : 1/0) with linespoints title 'Nystrom of f(A), Lanczos'
"#;
