//! `tr(log(I + A))` at matched budgets: the funNyström plug-in estimate
//! against the projected log-determinant estimator.

use super::config::{positive_list, require, ExperimentConfig};
use super::output::{percentile, ExperimentOutput, Table};
use super::{fmt_f64, par_map, repetition_seed, DenseReference};
use crate::error::Result;
use crate::funcs::FunctionKind;
use crate::linalg::{oracle_from_dense, MatVecOracle};
use crate::nystrom::{fun_nystrom, Sketch};
use crate::trace::{projected_logdet_baseline, sketch_seed, trace_lowrank};

const METHODS: [&str; 2] = ["funnystrom", "projected-logdet"];

struct Record {
    method: &'static str,
    budget: usize,
    rep: usize,
    seed: u64,
    rank: usize,
    mvps: usize,
    estimate: f64,
    rel_error: f64,
}

pub fn run_trace_duel(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let spec = cfg.matrix_spec("alg:n=1000,s=100,c=2")?;
    require(
        spec.n <= 2000,
        "matrix",
        "trace-duel needs a dense reference, n <= 2000",
    )?;
    let f = cfg.function("log1p")?;
    require(
        f.kind() == FunctionKind::Log1p,
        "function",
        "the trace duel compares log-determinants, use log1p",
    )?;
    let budgets = positive_list(
        "trace.budgets",
        cfg.trace
            .budgets
            .as_deref()
            .unwrap_or(&[20, 40, 60, 80, 100, 120, 140, 160, 180, 200]),
        None,
    )?;
    let q = *cfg.q_list(&[1])?.first().expect("nonempty");
    let qb = cfg.trace.baseline_q.unwrap_or(1);
    require(qb >= 1, "trace.baseline_q", "must be positive")?;
    for &m in &budgets {
        require(
            m / q >= 1 && m / (qb + 1) >= 1,
            "trace.budgets",
            format!("budget {m} is too small for q = {q}, baseline q = {qb}"),
        )?;
        require(
            m / q <= spec.n,
            "trace.budgets",
            format!("budget {m} exceeds the matrix dimension"),
        )?;
    }
    let reps = cfg.repetitions(50)?;
    let base_seed = cfg.seed();

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
        for &m in &budgets {
            jobs.push((rep, m));
        }
    }
    let results = par_map(jobs.len(), |j| -> Result<[Record; 2]> {
        let (rep, m) = jobs[j];
        let seed = repetition_seed(base_seed, rep);
        let oracle = oracle_from_dense(a);
        let k = m / q;
        let fac = fun_nystrom(&oracle, &f, k, q, &Sketch::gaussian(sketch_seed(seed)))?;
        let fun = trace_lowrank(&fac).value;
        let fun_mvps = oracle.mvp_count();
        let oracle = oracle_from_dense(a);
        let kb = m / (qb + 1);
        let base = projected_logdet_baseline(&oracle, kb, qb, seed)?;
        Ok([
            Record {
                method: METHODS[0],
                budget: m,
                rep,
                seed,
                rank: k,
                mvps: fun_mvps,
                estimate: fun,
                rel_error: rel(fun),
            },
            Record {
                method: METHODS[1],
                budget: m,
                rep,
                seed,
                rank: kb,
                mvps: oracle.mvp_count(),
                estimate: base.value,
                rel_error: rel(base.value),
            },
        ])
    });
    let mut records = Vec::with_capacity(2 * jobs.len());
    for r in results {
        records.extend(r?);
    }

    let mut raw = Table::new(
        "trace_duel",
        &[
            "method",
            "budget",
            "repetition",
            "seed",
            "rank",
            "mvps",
            "estimate",
            "exact",
            "rel_error",
        ],
    );
    for r in &records {
        raw.push(vec![
            r.method.into(),
            r.budget.to_string(),
            r.rep.to_string(),
            r.seed.to_string(),
            r.rank.to_string(),
            r.mvps.to_string(),
            fmt_f64(r.estimate),
            fmt_f64(exact),
            fmt_f64(r.rel_error),
        ]);
    }
    let mut summary = Table::new(
        "trace_duel_summary",
        &["method", "budget", "rank", "err_p5", "err_p50", "err_p95", "count"],
    );
    for method in METHODS {
        for &m in &budgets {
            let sel: Vec<&Record> = records.iter().filter(|r| r.method == method && r.budget == m).collect();
            let errs: Vec<f64> = sel.iter().map(|r| r.rel_error).collect();
            summary.push(vec![
                method.into(),
                m.to_string(),
                sel[0].rank.to_string(),
                fmt_f64(percentile(&errs, 5.0)),
                fmt_f64(percentile(&errs, 50.0)),
                fmt_f64(percentile(&errs, 95.0)),
                sel.len().to_string(),
            ]);
        }
    }

    Ok(ExperimentOutput {
        tables: vec![raw, summary],
        metadata: vec![
            ("matrix".into(), spec.to_string()),
            ("function".into(), f.to_string()),
            ("q".into(), q.to_string()),
            ("baseline_q".into(), qb.to_string()),
            ("repetitions".into(), reps.to_string()),
            ("seed".into(), base_seed.to_string()),
            ("exact_trace".into(), fmt_f64(exact)),
        ],
        plot_script: PLOT.into(),
        violations: Vec::new(),
    })
}

const PLOT: &str = r#"# gnuplot script: median relative trace error against the budget.
set datafile separator ','
set logscale y
set xlabel 'mvps with A'
set ylabel 'relative error'
set key top right
plot 'trace_duel_summary.csv' using 2:(strcol(1) eq 'funnystrom' ? $5 : 1/0) with linespoints title 'funNystrom', \
     '' using 2:(strcol(1) eq 'funnystrom' ? $4 : 1/0):(strcol(1) eq 'funnystrom' ? $6 : 1/0) with filledcurves fs transparent solid 0.2 notitle, \
     '' using 2:(strcol(1) eq 'projected-logdet' ? $5 : 1/0) with linespoints title 'projected log-det'
"#;
