use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::funcs::ScalarFunction;
use crate::linalg::Norm;
use crate::testmat::MatrixSpec;

/// Parsed experiment configuration. Every field is optional; each
/// experiment fills in its own defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,
    pub matrix: Option<String>,
    pub function: Option<String>,
    pub ranks: Option<Vec<usize>>,
    pub q: Option<Vec<usize>>,
    pub repetitions: Option<usize>,
    pub seed: Option<u64>,
    pub norm: Option<String>,
    #[serde(default)]
    pub lanczos: LanczosSection,
    #[serde(default)]
    pub trace: TraceSection,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub speedup: SpeedupSection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanczosSection {
    pub depth: Option<usize>,
    pub step: Option<usize>,
    pub factor: Option<f64>,
    pub reorthogonalize: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSection {
    /// Total budgets `m` for the trace duel.
    pub budgets: Option<Vec<usize>>,
    /// Probe counts `ℓ` for the funNyström++ sweep.
    pub probes: Option<Vec<usize>>,
    /// `r = rank_factor · ℓ` in the funNyström++ sweep.
    pub rank_factor: Option<usize>,
    /// Include the Nyström++ baseline in the sweep.
    pub baseline: Option<bool>,
    /// Power `q` of the projected log-det baseline.
    pub baseline_q: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub matrices: Option<Vec<String>>,
    pub functions: Option<Vec<String>>,
    pub k: Option<usize>,
    pub p: Option<usize>,
    pub t: Option<f64>,
    pub u: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedupSection {
    /// Numbers `N` of identity columns to multiply.
    pub columns: Option<Vec<usize>>,
    /// Relative error both methods are tuned to.
    pub target: Option<f64>,
    pub k: Option<usize>,
    pub depth: Option<usize>,
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("field '{field}': {msg}"))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read config '{}': {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub(crate) fn matrix_spec(&self, default: &str) -> Result<MatrixSpec> {
        parse_matrix(self.matrix.as_deref().unwrap_or(default), "matrix")
    }

    pub(crate) fn function(&self, default: &str) -> Result<ScalarFunction> {
        parse_function(self.function.as_deref().unwrap_or(default), "function")
    }

    pub(crate) fn norm(&self, default: Norm) -> Result<Norm> {
        match &self.norm {
            None => Ok(default),
            Some(s) => s.parse().map_err(|e| field_error("norm", e)),
        }
    }

    pub(crate) fn repetitions(&self, default: usize) -> Result<usize> {
        let r = self.repetitions.unwrap_or(default);
        if r == 0 {
            return Err(field_error("repetitions", "must be at least 1"));
        }
        Ok(r)
    }

    pub(crate) fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub(crate) fn ranks(&self, default: &[usize], n: usize) -> Result<Vec<usize>> {
        positive_list("ranks", self.ranks.as_deref().unwrap_or(default), Some(n))
    }

    pub(crate) fn q_list(&self, default: &[usize]) -> Result<Vec<usize>> {
        positive_list("q", self.q.as_deref().unwrap_or(default), None)
    }
}

pub(crate) fn parse_matrix(text: &str, field: &str) -> Result<MatrixSpec> {
    text.parse::<MatrixSpec>().map_err(|e| field_error(field, e))
}

pub(crate) fn parse_function(text: &str, field: &str) -> Result<ScalarFunction> {
    text.parse::<ScalarFunction>().map_err(|e| field_error(field, e))
}

/// Validates a nonempty list of positive integers, optionally `<= max`.
pub(crate) fn positive_list(field: &str, values: &[usize], max: Option<usize>) -> Result<Vec<usize>> {
    if values.is_empty() {
        return Err(field_error(field, "list must not be empty"));
    }
    for &v in values {
        if v == 0 {
            return Err(field_error(field, "values must be positive"));
        }
        if let Some(m) = max {
            if v > m {
                return Err(field_error(
                    field,
                    format!("value {v} exceeds the matrix dimension {m}"),
                ));
            }
        }
    }
    Ok(values.to_vec())
}

pub(crate) fn require(ok: bool, field: &str, msg: impl std::fmt::Display) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(field_error(field, msg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            experiment = "fnpp-sweep"
            matrix = "alg:n=100,s=100,c=2"
            function = "log1p"
            repetitions = 3
            [lanczos]
            depth = 10
            [trace]
            probes = [6, 12]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.trace.probes.as_deref(), Some(&[6, 12][..]));
        assert_eq!(cfg.lanczos.depth, Some(10));
        assert_eq!(cfg.matrix_spec("").unwrap().n, 100);
    }

    #[test]
    fn reports_line_of_unknown_key() {
        let err = ExperimentConfig::from_toml_str("seed = 1\nbogus = 2\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn reports_field_for_bad_values() {
        let cfg = ExperimentConfig::from_toml_str("function = \"cube\"\nranks = [0]").unwrap();
        assert!(cfg.function("sqrt").unwrap_err().to_string().contains("'function'"));
        assert!(cfg.ranks(&[1], 10).unwrap_err().to_string().contains("'ranks'"));
        let cfg = ExperimentConfig::from_toml_str("repetitions = 0").unwrap();
        assert!(cfg.repetitions(5).is_err());
        assert!(ExperimentConfig::from_toml_str("seed = \"x\"").is_err());
    }
}
