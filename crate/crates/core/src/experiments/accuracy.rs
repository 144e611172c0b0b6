//! Error against rank for funNyström and for Nyström applied to the dense
//! `f(A)`, with the expectation bound minimized over splits `r = k + p`.

use super::config::{require, ExperimentConfig};
use super::output::{mean, percentile, rms, ExperimentOutput, Table};
use super::{fmt_f64, fmt_opt, par_map, repetition_seed, DenseReference};
use crate::bounds::{
    best_split, frob_expectation_bound, nuclear_expectation_bound, operator_expectation_bound, sqrt_improved_bounds,
    BestSplit,
};
use crate::error::Result;
use crate::funcs::{FunctionKind, ScalarFunction};
use crate::linalg::{oracle_from_dense, DenseOracle, MatVecOracle, Norm};
use crate::nystrom::{fun_nystrom, nystrom_approx, Sketch};

/// Expectation bound on the (unsquared) error of a rank-`r` funNyström
/// approximation in `norm`, minimized over admissible splits. For the
/// Frobenius norm this is the square root of the bound on the mean squared
/// error, which by Jensen's inequality also bounds the mean error.
/// The square-root specific bounds are used when `f = sqrt`.
pub fn expectation_bound_for(norm: Norm, f: ScalarFunction, lambda: &[f64], r: usize, q: usize) -> Option<BestSplit> {
    let is_sqrt = f.kind() == FunctionKind::Sqrt;
    let best = match (norm, is_sqrt) {
        (Norm::Frobenius, true) => best_split(lambda, r, q, f, |b| Ok(sqrt_improved_bounds(b)?.frobenius_sq)),
        (Norm::Frobenius, false) => best_split(lambda, r, q, f, frob_expectation_bound),
        (Norm::Nuclear, true) => best_split(lambda, r, q, f, |b| Ok(sqrt_improved_bounds(b)?.nuclear)),
        (Norm::Nuclear, false) => best_split(lambda, r, q, f, nuclear_expectation_bound),
        (Norm::Operator, true) => best_split(lambda, r, q, f, |b| Ok(sqrt_improved_bounds(b)?.operator)),
        (Norm::Operator, false) => best_split(lambda, r, q, f, operator_expectation_bound),
    }?;
    Some(match norm {
        Norm::Frobenius => BestSplit {
            value: best.value.sqrt(),
            ..best
        },
        _ => best,
    })
}

struct Record {
    method: &'static str,
    q: usize,
    rank: usize,
    rep: usize,
    seed: u64,
    mvps: usize,
    rel_error: f64,
}

pub fn run_accuracy_curve(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let spec = cfg.matrix_spec("alg:n=500,s=1,c=3")?;
    require(
        spec.n <= 1000,
        "matrix",
        "accuracy-curve needs a dense reference, n <= 1000",
    )?;
    let f = cfg.function("sqrt")?;
    let default_norm = if f.kind() == FunctionKind::Sqrt {
        Norm::Frobenius
    } else {
        Norm::Nuclear
    };
    let norm = cfg.norm(default_norm)?;
    let ranks = cfg.ranks(&[10, 20, 40, 60, 80, 100], spec.n)?;
    let qs = cfg.q_list(&[1, 2])?;
    let reps = cfg.repetitions(10)?;
    let base_seed = cfg.seed();

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
        let sketch = Sketch::gaussian(seed);
        let a = oracle_from_dense(&reference.test_matrix.matrix);
        let fac = fun_nystrom(&a, &f, k, q, &sketch)?;
        let fa = DenseOracle::from_ref(&reference.f_of_a);
        let direct = nystrom_approx(&fa, k, q, &sketch)?;
        Ok([
            Record {
                method: "funnystrom",
                q,
                rank: k,
                rep,
                seed,
                mvps: a.mvp_count(),
                rel_error: relative(reference.error(&fac.to_dense(), norm)?),
            },
            Record {
                method: "nystrom-fa",
                q,
                rank: k,
                rep,
                seed,
                mvps: fa.mvp_count(),
                rel_error: relative(reference.error(&direct.to_dense(), norm)?),
            },
        ])
    });
    let mut records = Vec::with_capacity(2 * jobs.len());
    for r in results {
        records.extend(r?);
    }

    let mut bounds = Vec::new();
    for &q in &qs {
        for &k in &ranks {
            let b = expectation_bound_for(norm, f, &reference.lambda, k, q);
            bounds.push(((q, k), b.map(|s| (relative(s.value), s.k, s.p))));
        }
    }
    let bound_of = |q: usize, k: usize| bounds.iter().find(|(key, _)| *key == (q, k)).and_then(|(_, b)| *b);

    let mut raw = Table::new(
        "accuracy_curve",
        &[
            "method",
            "q",
            "rank",
            "repetition",
            "seed",
            "mvps",
            "rel_error",
            "rel_bound",
        ],
    );
    for r in &records {
        let bound = if r.method == "funnystrom" {
            bound_of(r.q, r.rank).map(|b| b.0)
        } else {
            None
        };
        raw.push(vec![
            r.method.into(),
            r.q.to_string(),
            r.rank.to_string(),
            r.rep.to_string(),
            r.seed.to_string(),
            r.mvps.to_string(),
            fmt_f64(r.rel_error),
            fmt_opt(bound),
        ]);
    }

    let mut summary = Table::new(
        "accuracy_curve_summary",
        &[
            "method",
            "q",
            "rank",
            "err_mean",
            "err_rms",
            "err_p50",
            "rel_bound",
            "bound_k",
            "bound_p",
            "bound_ratio",
        ],
    );
    for method in ["funnystrom", "nystrom-fa"] {
        for &q in &qs {
            for &k in &ranks {
                let errs: Vec<f64> = records
                    .iter()
                    .filter(|r| r.method == method && r.q == q && r.rank == k)
                    .map(|r| r.rel_error)
                    .collect();
                let (m, s) = (mean(&errs), rms(&errs));
                let b = if method == "funnystrom" { bound_of(q, k) } else { None };
                let reference_err = if norm == Norm::Frobenius { s } else { m };
                let ratio = b.and_then(|b| (reference_err > 0.0).then(|| b.0 / reference_err));
                summary.push(vec![
                    method.into(),
                    q.to_string(),
                    k.to_string(),
                    fmt_f64(m),
                    fmt_f64(s),
                    fmt_f64(percentile(&errs, 50.0)),
                    fmt_opt(b.map(|b| b.0)),
                    b.map(|b| b.1.to_string()).unwrap_or_default(),
                    b.map(|b| b.2.to_string()).unwrap_or_default(),
                    fmt_opt(ratio),
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
        ],
        plot_script: PLOT.into(),
        violations: Vec::new(),
    })
}

const PLOT: &str = r#"# gnuplot script: relative error against rank, with the bound overlay.
set datafile separator ','
set logscale y
set xlabel 'rank'
set ylabel 'relative error'
set key top right
plot 'accuracy_curve_summary.csv' using 3:(strcol(1) eq 'funnystrom' && $2 == 1 ? $4 : 1/0) with linespoints title 'funNystrom q=1', \
     '' using 3:(strcol(1) eq 'nystrom-fa' && $2 == 1 ? $4 : 1/0) with linespoints title 'Nystrom of f(A) q=1', \
     '' using 3:(strcol(1) eq 'funnystrom' && $2 == 1 ? $7 : 1/0) with lines dashtype 2 title 'bound q=1', \
     '' using 3:(strcol(1) eq 'funnystrom' && $2 == 2 ? $4 : 1/0) with linespoints title 'funNystrom q=2', \
     '' using 3:(strcol(1) eq 'nystrom-fa' && $2 == 2 ? $4 : 1/0) with linespoints title 'Nystrom of f(A) q=2', \
     '' using 3:(strcol(1) eq 'funnystrom' && $2 == 2 ? $7 : 1/0) with lines dashtype 2 title 'bound q=2'
"#;
