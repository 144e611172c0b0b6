//! Experiment harness behind the `funnystrom` command-line tool.
//!
//! Every experiment reads an [`ExperimentConfig`] (TOML: flat keys plus
//! `[lanczos]`, `[trace]`, `[bounds]` and `[speedup]` sections), runs
//! seeded repetitions, and produces CSV tables, a metadata table and a
//! gnuplot script. See `docs/config.md` in the repository for the keys.

mod accuracy;
mod budget;
mod config;
mod fnpp;
mod output;
mod speedup;
mod trace_duel;
mod verify;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

pub use accuracy::{expectation_bound_for, run_accuracy_curve};
pub use budget::run_budget_curve;
pub use config::{BoundsSection, ExperimentConfig, LanczosSection, SpeedupSection, TraceSection};
pub use fnpp::run_fnpp_sweep;
pub use output::{percentile, write_output, ExperimentOutput, Table};
pub use speedup::{run_speedup, spearman};
pub use trace_duel::run_trace_duel;
pub use verify::{bound_trial, run_verify_bounds, BoundTrial, Check, TrialSetup, DRAW_TOL};

use crate::error::{Error, Result};
use crate::funcs::ScalarFunction;
use crate::linalg::{symmetric_eigenvalues, Norm, SpectralDecomposition};
use crate::rng::derive_seed;
use crate::testmat::{generate, MatrixSpec, TestMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    BudgetCurve,
    AccuracyCurve,
    Speedup,
    TraceDuel,
    FnppSweep,
    VerifyBounds,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::BudgetCurve,
        Experiment::AccuracyCurve,
        Experiment::Speedup,
        Experiment::TraceDuel,
        Experiment::FnppSweep,
        Experiment::VerifyBounds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::BudgetCurve => "budget-curve",
            Experiment::AccuracyCurve => "accuracy-curve",
            Experiment::Speedup => "speedup",
            Experiment::TraceDuel => "trace-duel",
            Experiment::FnppSweep => "fnpp-sweep",
            Experiment::VerifyBounds => "verify-bounds",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown experiment '{s}'")))
    }
}

/// Runs `experiment` with `cfg`. A `experiment = "..."` key in the config,
/// when present, must name the same experiment.
pub fn run(experiment: Experiment, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    if let Some(name) = &cfg.experiment {
        let declared: Experiment = name
            .parse()
            .map_err(|_| Error::Parse(format!("field 'experiment': unknown experiment '{name}'")))?;
        if declared != experiment {
            return Err(Error::Parse(format!(
                "field 'experiment': config is for '{declared}' but '{experiment}' was requested"
            )));
        }
    }
    let mut out = match experiment {
        Experiment::BudgetCurve => run_budget_curve(cfg),
        Experiment::AccuracyCurve => run_accuracy_curve(cfg),
        Experiment::Speedup => run_speedup(cfg),
        Experiment::TraceDuel => run_trace_duel(cfg),
        Experiment::FnppSweep => run_fnpp_sweep(cfg),
        Experiment::VerifyBounds => run_verify_bounds(cfg),
    }?;
    out.metadata.insert(0, ("experiment".into(), experiment.name().into()));
    out.metadata.push(("workers".into(), worker_count().to_string()));
    out.metadata
        .push(("crate_version".into(), env!("CARGO_PKG_VERSION").into()));
    Ok(out)
}

/// Number of worker threads used for repetitions.
pub fn worker_count() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// `(0..n).map(f)`, in parallel when the `parallel` feature is enabled.
/// Output order is the index order either way.
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Seed of repetition `rep`, derived from the base seed.
pub fn repetition_seed(base: u64, rep: usize) -> u64 {
    derive_seed(base, 1_000 + rep as u64)
}

/// Dense `f(A)` and its norms, for measuring errors of approximations.
pub struct DenseReference {
    pub test_matrix: TestMatrix,
    pub decomposition: SpectralDecomposition,
    pub f: ScalarFunction,
    /// Eigenvalues of `A`, descending.
    pub lambda: Vec<f64>,
    pub f_of_a: DMatrix<f64>,
    /// `f(λ_i)`, descending.
    pub f_lambda: Vec<f64>,
}

impl DenseReference {
    pub fn new(spec: &MatrixSpec, f: ScalarFunction) -> Result<Self> {
        let test_matrix = generate(spec)?;
        let decomposition = test_matrix.decomposition()?;
        let f_of_a = decomposition.map(&f)?;
        let lambda: Vec<f64> = decomposition.values.iter().copied().collect();
        let f_lambda = f.apply_to_spectrum(&lambda)?;
        Ok(Self {
            test_matrix,
            decomposition,
            f,
            lambda,
            f_of_a,
            f_lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.test_matrix.dim()
    }

    pub fn norm_of_fa(&self, norm: Norm) -> f64 {
        norm.of_values(&self.f_lambda)
    }

    pub fn trace_of_fa(&self) -> f64 {
        self.f_lambda.iter().sum()
    }

    /// `‖f(A) − approx‖` in `norm`.
    pub fn error(&self, approx: &DMatrix<f64>, norm: Norm) -> Result<f64> {
        let diff = &self.f_of_a - approx;
        match norm {
            Norm::Frobenius => Ok(diff.norm()),
            _ => Ok(norm.of_values(&symmetric_eigenvalues(&diff, "error matrix")?)),
        }
    }

    /// Error relative to `‖f(A)‖` (absolute when `f(A) = 0`).
    pub fn relative_error(&self, approx: &DMatrix<f64>, norm: Norm) -> Result<f64> {
        let scale = self.norm_of_fa(norm);
        let err = self.error(approx, norm)?;
        Ok(if scale > 0.0 { err / scale } else { err })
    }
}

/// `{:e}` formatting for CSV cells.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

pub(crate) fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}
