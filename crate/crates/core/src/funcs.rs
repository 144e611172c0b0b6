//! Scalar functions `f: [0, ∞) → [0, ∞)` with `f(0) = 0`, applied to spectra.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Relative tolerance for slightly negative eigenvalues in
/// [`ScalarFunction::apply_to_spectrum`].
pub const SPECTRUM_NOISE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FunctionKind {
    Identity,
    Sqrt,
    Log1p,
    /// `x / (x + mu)`.
    Ratio {
        mu: f64,
    },
    /// Monotone on `[0, ∞)` but not operator monotone.
    Square,
    /// Monotone on `[0, ∞)` but not operator monotone.
    Expm1,
}

/// A named scalar function together with the properties the algorithms and
/// bounds rely on. Operator monotonicity is declared, not verified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarFunction {
    kind: FunctionKind,
}

impl ScalarFunction {
    pub const IDENTITY: Self = Self {
        kind: FunctionKind::Identity,
    };
    pub const SQRT: Self = Self {
        kind: FunctionKind::Sqrt,
    };
    pub const LOG1P: Self = Self {
        kind: FunctionKind::Log1p,
    };
    pub const SQUARE: Self = Self {
        kind: FunctionKind::Square,
    };
    pub const EXPM1: Self = Self {
        kind: FunctionKind::Expm1,
    };

    /// `x / (x + mu)`, requires `mu > 0`.
    pub fn ratio(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("ratio function needs mu > 0, got {mu}")));
        }
        Ok(Self {
            kind: FunctionKind::Ratio { mu },
        })
    }

    /// Looks up a builtin by name. `ratio` reads `mu` from `params`.
    pub fn builtin(name: &str, params: &[(&str, f64)]) -> Result<Self> {
        let param = |key: &str| params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let f = match name {
            "identity" | "id" => Self::IDENTITY,
            "sqrt" => Self::SQRT,
            "log1p" => Self::LOG1P,
            "square" => Self::SQUARE,
            "expm1" => Self::EXPM1,
            "ratio" => {
                let mu =
                    param("mu").ok_or_else(|| Error::InvalidArgument("ratio function needs parameter mu".into()))?;
                return Self::ratio(mu);
            }
            other => return Err(Error::InvalidArgument(format!("unknown function `{other}`"))),
        };
        if let Some((key, _)) = params.first() {
            return Err(Error::InvalidArgument(format!(
                "function `{name}` takes no parameter `{key}`"
            )));
        }
        Ok(f)
    }

    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FunctionKind::Identity => "identity",
            FunctionKind::Sqrt => "sqrt",
            FunctionKind::Log1p => "log1p",
            FunctionKind::Ratio { .. } => "ratio",
            FunctionKind::Square => "square",
            FunctionKind::Expm1 => "expm1",
        }
    }

    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match self.kind {
            FunctionKind::Ratio { mu } => vec![("mu", mu)],
            _ => Vec::new(),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            FunctionKind::Identity => x,
            FunctionKind::Sqrt => x.sqrt(),
            FunctionKind::Log1p => x.ln_1p(),
            FunctionKind::Ratio { mu } => x / (x + mu),
            FunctionKind::Square => x * x,
            FunctionKind::Expm1 => x.exp_m1(),
        }
    }

    pub fn is_monotone(&self) -> bool {
        true
    }

    pub fn is_operator_monotone(&self) -> bool {
        !matches!(self.kind, FunctionKind::Square | FunctionKind::Expm1)
    }

    /// `f'₊(0)`, infinite for the square root.
    pub fn right_derivative_at_zero(&self) -> f64 {
        match self.kind {
            FunctionKind::Identity | FunctionKind::Log1p | FunctionKind::Expm1 => 1.0,
            FunctionKind::Sqrt => f64::INFINITY,
            FunctionKind::Ratio { mu } => 1.0 / mu,
            FunctionKind::Square => 0.0,
        }
    }

    /// `f(max(λᵢ, 0))` elementwise, order preserved.
    ///
    /// Eigenvalues below `-1e-12 · max(λ)` are rejected as a violation of
    /// positive semi-definiteness.
    pub fn apply_to_spectrum(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        let top = lambda.iter().fold(0.0_f64, |a, &v| a.max(v));
        let floor = -SPECTRUM_NOISE_TOL * top;
        if let Some(&bad) = lambda.iter().find(|&&v| v < floor || v.is_nan()) {
            return Err(Error::NotPositiveSemidefinite {
                what: "spectrum passed to a matrix function".into(),
                min_eigenvalue: bad,
                tolerance: floor,
            });
        }
        Ok(lambda.iter().map(|&v| self.eval(v.max(0.0))).collect())
    }
}

impl fmt::Display for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FunctionKind::Ratio { mu } => write!(f, "ratio:mu={mu}"),
            _ => f.write_str(self.name()),
        }
    }
}

/// Parses `sqrt`, `log1p`, `ratio:mu=0.01`, ...
impl FromStr for ScalarFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n.trim(), r),
            None => (s, ""),
        };
        let mut params = Vec::new();
        for item in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value in `{item}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("invalid number `{}` for `{}`", value.trim(), key.trim())))?;
            params.push((key.trim(), value));
        }
        Self::builtin(name, &params).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::Parse(m),
            other => other,
        })
    }
}
