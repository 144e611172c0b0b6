//! Empirical check of the error bounds on seeded Gaussian sketches.

use nalgebra::DMatrix;

use super::config::{parse_function, parse_matrix, require, ExperimentConfig};
use super::output::{mean, ExperimentOutput, Table};
use super::{fmt_f64, par_map, repetition_seed, DenseReference};
use crate::bounds::{
    frob_expectation_bound, frob_structural_bound, frob_tail_probability_bound, nuclear_expectation_bound,
    nuclear_probability_bound, nuclear_structural_bound, operator_expectation_bound, operator_structural_bound,
    schatten_structural_bound, sqrt_improved_bounds, sqrt_structural_bounds, structural_diagnostics, BoundInput,
};
use crate::error::Result;
use crate::funcs::FunctionKind;
use crate::linalg::{oracle_from_dense, symmetric_eigenvalues, MatVecOracle};
use crate::nystrom::{fun_nystrom, randomized_svd_fun, Sketch};
use crate::rng::gaussian_matrix;

/// Absolute slack of the per-draw checks, scaled by `max(1, ‖f(A)‖₂)`.
pub const DRAW_TOL: f64 = 1e-8;

/// One sketch size and power for a fixed dense reference.
pub struct TrialSetup<'a> {
    pub reference: &'a DenseReference,
    pub k: usize,
    pub p: usize,
    pub q: usize,
    /// `None` when the split is inadmissible for the bounds (`λ_k = 0`).
    pub input: Option<BoundInput>,
    /// Also compare funNyström with `q + 1` passes against the randomized
    /// SVD with `q` passes on the same sketch.
    pub chain: bool,
}

impl<'a> TrialSetup<'a> {
    pub fn new(reference: &'a DenseReference, k: usize, p: usize, q: usize) -> Self {
        let input = BoundInput::new(&reference.lambda, k, p, q, reference.f).ok();
        Self {
            reference,
            k,
            p,
            q,
            input,
            chain: true,
        }
    }
}

/// A per-draw inequality `measured ≤ bound + tol`.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub bound: f64,
    pub tol: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.measured <= self.bound + self.tol
    }
}

#[derive(Clone, Debug)]
pub struct BoundTrial {
    pub seed: u64,
    pub mvps: usize,
    pub err_frobenius: f64,
    pub err_nuclear: f64,
    pub err_operator: f64,
    /// Smallest eigenvalue of `f(A) − f(Â)`.
    pub min_eigenvalue: f64,
    /// `‖Λ₂ Ω₂ Ω₁†‖_F²`, `None` for an inadmissible split.
    pub gaussian_sample: Option<f64>,
    pub checks: Vec<Check>,
}

impl BoundTrial {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Runs funNyström on the explicit Gaussian sketch drawn from `seed` and
/// evaluates every per-draw bound that applies.
pub fn bound_trial(setup: &TrialSetup<'_>, seed: u64) -> Result<BoundTrial> {
    let r = setup.reference;
    let n = r.dim();
    let f = r.f;
    let a = &r.test_matrix.matrix;
    let omega = gaussian_matrix(n, setup.k + setup.p, seed);
    let sketch = Sketch::Explicit(omega.clone());

    let oracle = oracle_from_dense(a);
    let fac = fun_nystrom(&oracle, &f, setup.k + setup.p, setup.q, &sketch)?;
    let err: DMatrix<f64> = &r.f_of_a - fac.to_dense();
    let eig = symmetric_eigenvalues(&err, "error matrix")?;
    let err_frobenius = err.norm();
    let err_nuclear: f64 = eig.iter().map(|v| v.abs()).sum();
    let err_operator = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min_eigenvalue = eig.iter().copied().fold(f64::INFINITY, f64::min);

    let fa_op = r.f_lambda.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale = fa_op.max(1.0);
    let tol1 = DRAW_TOL * scale;
    let tol2 = DRAW_TOL * scale * scale;

    let mut checks = vec![Check {
        name: "psd-ordering",
        measured: -min_eigenvalue,
        bound: 0.0,
        tol: DRAW_TOL * fa_op,
    }];

    let mut gaussian_sample = None;
    if let Some(b) = &setup.input {
        let d = structural_diagnostics(&r.decomposition, &omega, setup.k)?;
        gaussian_sample = Some(d.lam2_g_frob.powi(2));
        let mut push = |name, measured, bound: Result<f64>, tol| {
            if let Ok(bound) = bound {
                checks.push(Check {
                    name,
                    measured,
                    bound,
                    tol,
                });
            }
        };
        push(
            "frobenius-structural",
            err_frobenius.powi(2),
            frob_structural_bound(b, &d),
            tol2,
        );
        push("nuclear-structural", err_nuclear, nuclear_structural_bound(b, &d), tol1);
        push(
            "operator-structural",
            err_operator,
            operator_structural_bound(b, &d),
            tol1,
        );
        push(
            "schatten-structural-s1",
            err_nuclear,
            schatten_structural_bound(b, 1.0, &d),
            tol1,
        );
        push(
            "schatten-structural-s2",
            err_frobenius,
            schatten_structural_bound(b, 2.0, &d),
            tol1,
        );
        if f.kind() == FunctionKind::Sqrt {
            if let Ok(s) = sqrt_structural_bounds(b, &d) {
                push(
                    "sqrt-frobenius-structural",
                    err_frobenius.powi(2),
                    Ok(s.frobenius_sq),
                    tol2,
                );
                push("sqrt-nuclear-structural", err_nuclear, Ok(s.nuclear), tol1);
                push("sqrt-operator-structural", err_operator, Ok(s.operator), tol1);
            }
        }
    }

    if setup.chain {
        let deeper = fun_nystrom(&oracle_from_dense(a), &f, setup.k + setup.p, setup.q + 1, &sketch)?;
        let rsvd = randomized_svd_fun(&oracle_from_dense(a), &f, setup.k + setup.p, setup.q, &sketch)?;
        checks.push(Check {
            name: "rsvd-chain",
            measured: (&r.f_of_a - deeper.to_dense()).norm(),
            bound: (&r.f_of_a - rsvd.to_dense()).norm(),
            tol: tol1,
        });
    }

    Ok(BoundTrial {
        seed,
        mvps: oracle.mvp_count(),
        err_frobenius,
        err_nuclear,
        err_operator,
        min_eigenvalue,
        gaussian_sample,
        checks,
    })
}

const DRAW_CHECKS: [&str; 10] = [
    "psd-ordering",
    "frobenius-structural",
    "nuclear-structural",
    "operator-structural",
    "schatten-structural-s1",
    "schatten-structural-s2",
    "sqrt-frobenius-structural",
    "sqrt-nuclear-structural",
    "sqrt-operator-structural",
    "rsvd-chain",
];

struct SummaryRow {
    check: String,
    kind: &'static str,
    trials: usize,
    failures: usize,
    measured: f64,
    bound: f64,
    passed: bool,
}

/// Aggregates the trials of one setup into summary rows.
fn summarize(setup: &TrialSetup<'_>, trials: &[BoundTrial], u: f64, t: f64) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    let n = trials.len();
    for name in DRAW_CHECKS {
        let checks: Vec<&Check> = trials.iter().filter_map(|tr| tr.check(name)).collect();
        if checks.is_empty() {
            continue;
        }
        let worst = checks
            .iter()
            .max_by(|a, b| (a.measured - a.bound).total_cmp(&(b.measured - b.bound)))
            .expect("nonempty");
        let failures = checks.iter().filter(|c| !c.passed()).count();
        rows.push(SummaryRow {
            check: name.into(),
            kind: if name == "psd-ordering" || name == "rsvd-chain" {
                name
            } else {
                "structural"
            },
            trials: checks.len(),
            failures,
            measured: worst.measured,
            bound: worst.bound,
            passed: failures == 0,
        });
    }

    let Some(b) = &setup.input else {
        return rows;
    };
    let frob_sq: Vec<f64> = trials.iter().map(|t| t.err_frobenius.powi(2)).collect();
    let nuc: Vec<f64> = trials.iter().map(|t| t.err_nuclear).collect();
    let opn: Vec<f64> = trials.iter().map(|t| t.err_operator).collect();
    let mut expect = |check: &str, values: &[f64], bound: Result<f64>| {
        if let Ok(bound) = bound {
            let m = mean(values);
            rows.push(SummaryRow {
                check: check.into(),
                kind: "expectation",
                trials: n,
                failures: usize::from(m > bound),
                measured: m,
                bound,
                passed: m <= bound,
            });
        }
    };
    expect("frobenius-expectation", &frob_sq, frob_expectation_bound(b));
    expect("nuclear-expectation", &nuc, nuclear_expectation_bound(b));
    expect("operator-expectation", &opn, operator_expectation_bound(b));
    if b.f().kind() == FunctionKind::Sqrt {
        if let Ok(s) = sqrt_improved_bounds(b) {
            expect("sqrt-frobenius-expectation", &frob_sq, Ok(s.frobenius_sq));
            expect("sqrt-nuclear-expectation", &nuc, Ok(s.nuclear));
            expect("sqrt-operator-expectation", &opn, Ok(s.operator));
        }
    }

    let mut deviation = |check: &str, values: &[f64], bound: Result<(f64, f64)>| {
        if let Ok((value, prob)) = bound {
            let failures = values.iter().filter(|&&v| v > value).count();
            let freq = failures as f64 / n as f64;
            let allowed = prob + 3.0 * (prob * (1.0 - prob) / n as f64).sqrt();
            rows.push(SummaryRow {
                check: check.into(),
                kind: "deviation",
                trials: n,
                failures,
                measured: freq,
                bound: allowed,
                passed: freq <= allowed,
            });
        }
    };
    let frob: Vec<f64> = trials.iter().map(|t| t.err_frobenius).collect();
    deviation("frobenius-deviation", &frob, frob_tail_probability_bound(b, u, t));
    deviation("nuclear-deviation", &nuc, nuclear_probability_bound(b, u, t));

    let samples: Vec<f64> = trials.iter().filter_map(|t| t.gaussian_sample).collect();
    if samples.len() >= 2 && setup.p >= 2 {
        let expected = setup.k as f64 / (setup.p as f64 - 1.0) * b.tail().iter().map(|v| v * v).sum::<f64>();
        let m = mean(&samples);
        let var = samples.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
        let stderr = (var / samples.len() as f64).sqrt();
        rows.push(SummaryRow {
            check: "gaussian-identity".into(),
            kind: "identity",
            trials: samples.len(),
            failures: 0,
            measured: m,
            bound: expected,
            passed: (m - expected).abs() <= 4.0 * stderr,
        });
    }
    rows
}

pub fn run_verify_bounds(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let default_matrices = ["exp:n=300,s=1,gamma=0.9048374180359595", "alg:n=300,s=1,c=2"];
    let matrices: Vec<String> = match &cfg.bounds.matrices {
        Some(m) => m.clone(),
        None => match &cfg.matrix {
            Some(m) => vec![m.clone()],
            None => default_matrices.iter().map(|s| s.to_string()).collect(),
        },
    };
    let functions: Vec<String> = match &cfg.bounds.functions {
        Some(f) => f.clone(),
        None => match &cfg.function {
            Some(f) => vec![f.clone()],
            None => ["sqrt", "log1p", "ratio:mu=0.01"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        },
    };
    require(!matrices.is_empty(), "bounds.matrices", "list must not be empty")?;
    require(!functions.is_empty(), "bounds.functions", "list must not be empty")?;
    let specs = matrices
        .iter()
        .map(|m| parse_matrix(m, "bounds.matrices"))
        .collect::<Result<Vec<_>>>()?;
    let funcs = functions
        .iter()
        .map(|f| parse_function(f, "bounds.functions"))
        .collect::<Result<Vec<_>>>()?;
    let k = cfg.bounds.k.unwrap_or(10);
    let p = cfg.bounds.p.unwrap_or(10);
    require(k >= 1, "bounds.k", "must be positive")?;
    for s in &specs {
        require(
            s.n <= 1000,
            "bounds.matrices",
            "verify-bounds needs a dense reference, n <= 1000",
        )?;
        require(k + p <= s.n, "bounds.p", format!("k + p exceeds the dimension {}", s.n))?;
    }
    let t = cfg.bounds.t.unwrap_or(std::f64::consts::E);
    let u = cfg.bounds.u.unwrap_or((2.0 * k as f64).sqrt());
    require(t >= 1.0, "bounds.t", "must be at least 1")?;
    require(u >= 1.0, "bounds.u", "must be at least 1")?;
    let qs = cfg.q_list(&[1, 2])?;
    let reps = cfg.repetitions(200)?;
    let base_seed = cfg.seed();

    let mut raw = Table::new(
        "verify_bounds_trials",
        &[
            "matrix",
            "function",
            "q",
            "k",
            "p",
            "repetition",
            "seed",
            "mvps",
            "err_frobenius",
            "err_nuclear",
            "err_operator",
            "min_eigenvalue",
        ],
    );
    let mut summary = Table::new(
        "verify_bounds",
        &[
            "matrix",
            "function",
            "operator_monotone",
            "q",
            "k",
            "p",
            "check",
            "kind",
            "trials",
            "failures",
            "measured",
            "bound",
            "passed",
        ],
    );
    let mut violations = Vec::new();

    for spec in &specs {
        for &f in &funcs {
            let reference = DenseReference::new(spec, f)?;
            for &q in &qs {
                let setup = TrialSetup::new(&reference, k, p, q);
                let trials = par_map(reps, |rep| bound_trial(&setup, repetition_seed(base_seed, rep)))
                    .into_iter()
                    .collect::<Result<Vec<_>>>()?;
                for (rep, tr) in trials.iter().enumerate() {
                    raw.push(vec![
                        spec.to_string(),
                        f.to_string(),
                        q.to_string(),
                        k.to_string(),
                        p.to_string(),
                        rep.to_string(),
                        tr.seed.to_string(),
                        tr.mvps.to_string(),
                        fmt_f64(tr.err_frobenius),
                        fmt_f64(tr.err_nuclear),
                        fmt_f64(tr.err_operator),
                        fmt_f64(tr.min_eigenvalue),
                    ]);
                }
                let monotone = f.is_operator_monotone();
                for row in summarize(&setup, &trials, u, t) {
                    if monotone && !row.passed && row.kind != "identity" {
                        violations.push(format!(
                            "{} on {spec}, f={f}, q={q}: {} of {} trials fail (measured {:e}, bound {:e})",
                            row.check, row.failures, row.trials, row.measured, row.bound
                        ));
                    }
                    summary.push(vec![
                        spec.to_string(),
                        f.to_string(),
                        monotone.to_string(),
                        q.to_string(),
                        k.to_string(),
                        p.to_string(),
                        row.check,
                        row.kind.into(),
                        row.trials.to_string(),
                        row.failures.to_string(),
                        fmt_f64(row.measured),
                        fmt_f64(row.bound),
                        row.passed.to_string(),
                    ]);
                }
            }
        }
    }

    Ok(ExperimentOutput {
        tables: vec![raw, summary],
        metadata: vec![
            ("repetitions".into(), reps.to_string()),
            ("seed".into(), base_seed.to_string()),
            ("t".into(), fmt_f64(t)),
            ("u".into(), fmt_f64(u)),
            ("draw_tolerance".into(), fmt_f64(DRAW_TOL)),
            ("violations".into(), violations.len().to_string()),
        ],
        plot_script: PLOT.into(),
        violations,
    })
}

const PLOT: &str = r#"# gnuplot script: measured value over bound for every check (below 1 passes).
set datafile separator ','
set style data histograms
set style fill solid 0.5
set xtics rotate by -60
set ylabel 'measured / bound'
set key off
plot 'verify_bounds.csv' using ($12 > 0 ? $11/$12 : 0):xtic(7)
"#;
