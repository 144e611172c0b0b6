//! Test matrices: synthetic spectra in a fixed sine basis, and squared
//! exponential / Matérn kernel matrices on Gaussian data points.
//!
//! Spec strings look like `alg:n=500,s=1,c=3`, `exp:n=500,s=10,gamma=0.9`,
//! `se:n=500,sigma2=0.1,seed=7` or `matern:n=500,alpha=1,nu=1.5,seed=7`.
//! Synthetic kinds additionally accept `rank=r`, which zeroes every
//! eigenvalue past the `r`-th.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{scaled_outer, spectral_decompose, SpectralDecomposition, SymmetricMatrix};
use crate::rng;

/// Supported Matérn smoothness values (half-integers with closed-form `K_ν`).
pub const MATERN_NUS: [f64; 3] = [0.5, 1.5, 2.5];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatrixKind {
    /// `λ_i = s i^{-c}`.
    Alg {
        s: f64,
        c: f64,
    },
    /// `λ_i = s γ^i`.
    Exp {
        s: f64,
        gamma: f64,
    },
    SeKernel {
        sigma2: f64,
    },
    MaternKernel {
        alpha: f64,
        nu: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSpec {
    pub n: usize,
    pub kind: MatrixKind,
    /// Seed of the kernel data points; unused by synthetic kinds.
    pub seed: u64,
    /// Synthetic kinds only: number of nonzero eigenvalues.
    pub rank: Option<usize>,
}

impl MatrixSpec {
    pub fn alg(n: usize, s: f64, c: f64) -> Self {
        Self::new(n, MatrixKind::Alg { s, c })
    }

    pub fn exp(n: usize, s: f64, gamma: f64) -> Self {
        Self::new(n, MatrixKind::Exp { s, gamma })
    }

    pub fn se(n: usize, sigma2: f64, seed: u64) -> Self {
        Self {
            seed,
            ..Self::new(n, MatrixKind::SeKernel { sigma2 })
        }
    }

    pub fn matern(n: usize, alpha: f64, nu: f64, seed: u64) -> Self {
        Self {
            seed,
            ..Self::new(n, MatrixKind::MaternKernel { alpha, nu })
        }
    }

    fn new(n: usize, kind: MatrixKind) -> Self {
        Self {
            n,
            kind,
            seed: 0,
            rank: None,
        }
    }

    pub fn with_rank(mut self, rank: usize) -> Self {
        self.rank = Some(rank);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn is_synthetic(&self) -> bool {
        matches!(self.kind, MatrixKind::Alg { .. } | MatrixKind::Exp { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n == 0 {
            return bad("matrix dimension n must be positive".into());
        }
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        match self.kind {
            MatrixKind::Alg { s, c } => {
                if !(s.is_finite() && s >= 0.0) || !finite_pos(c) {
                    return bad(format!("alg needs s >= 0 and c > 0, got s={s}, c={c}"));
                }
            }
            MatrixKind::Exp { s, gamma } => {
                if !(s.is_finite() && s >= 0.0) || !finite_pos(gamma) {
                    return bad(format!("exp needs s >= 0 and gamma > 0, got s={s}, gamma={gamma}"));
                }
            }
            MatrixKind::SeKernel { sigma2 } => {
                if !finite_pos(sigma2) {
                    return bad(format!("se needs sigma2 > 0, got {sigma2}"));
                }
            }
            MatrixKind::MaternKernel { alpha, nu } => {
                if !finite_pos(alpha) {
                    return bad(format!("matern needs alpha > 0, got {alpha}"));
                }
                if !MATERN_NUS.contains(&nu) {
                    return bad(format!(
                        "matern supports only the closed-form half-integer cases nu in {{0.5, 1.5, 2.5}}, got {nu}"
                    ));
                }
            }
        }
        if self.rank.is_some() && !self.is_synthetic() {
            return bad("rank= applies to alg and exp matrices only".into());
        }
        Ok(())
    }

    /// Prescribed spectrum of a synthetic matrix in the order `i = 1..n`.
    pub fn prescribed_spectrum(&self) -> Option<Vec<f64>> {
        let keep = self.rank.unwrap_or(self.n);
        let value = |i: usize| match self.kind {
            MatrixKind::Alg { s, c } => s * (i as f64).powf(-c),
            MatrixKind::Exp { s, gamma } => s * gamma.powi(i as i32),
            _ => unreachable!(),
        };
        self.is_synthetic()
            .then(|| (1..=self.n).map(|i| if i <= keep { value(i) } else { 0.0 }).collect())
    }
}

impl fmt::Display for MatrixSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            MatrixKind::Alg { s, c } => write!(f, "alg:n={},s={s},c={c}", self.n)?,
            MatrixKind::Exp { s, gamma } => write!(f, "exp:n={},s={s},gamma={gamma}", self.n)?,
            MatrixKind::SeKernel { sigma2 } => write!(f, "se:n={},sigma2={sigma2},seed={}", self.n, self.seed)?,
            MatrixKind::MaternKernel { alpha, nu } => {
                write!(f, "matern:n={},alpha={alpha},nu={nu},seed={}", self.n, self.seed)?
            }
        }
        if let Some(r) = self.rank {
            write!(f, ",rank={r}")?;
        }
        Ok(())
    }
}

impl FromStr for MatrixSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let parse_err = |msg: String| Error::Parse(format!("matrix spec '{text}': {msg}"));
        let (kind, rest) = text
            .trim()
            .split_once(':')
            .ok_or_else(|| parse_err("expected '<kind>:key=value,...'".into()))?;
        let mut fields: Vec<(String, String)> = Vec::new();
        for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| parse_err(format!("'{item}' is not key=value")))?;
            let key = k.trim().to_ascii_lowercase();
            if fields.iter().any(|(seen, _)| *seen == key) {
                return Err(parse_err(format!("duplicate key '{key}'")));
            }
            fields.push((key, v.trim().to_string()));
        }
        let mut take =
            |key: &str| -> Option<String> { fields.iter().position(|(k, _)| k == key).map(|i| fields.remove(i).1) };
        let mut num = |key: &str| -> Result<f64> {
            let v = take(key).ok_or_else(|| parse_err(format!("missing '{key}'")))?;
            v.parse::<f64>()
                .map_err(|_| parse_err(format!("'{key}={v}' is not a number")))
        };
        let n_raw = num("n")?;
        if n_raw < 1.0 || n_raw.fract() != 0.0 {
            return Err(parse_err(format!("n must be a positive integer, got {n_raw}")));
        }
        let n = n_raw as usize;
        let kind_val = match kind.trim().to_ascii_lowercase().as_str() {
            "alg" => MatrixKind::Alg {
                s: num("s")?,
                c: num("c")?,
            },
            "exp" => MatrixKind::Exp {
                s: num("s")?,
                gamma: num("gamma")?,
            },
            "se" => MatrixKind::SeKernel { sigma2: num("sigma2")? },
            "matern" => MatrixKind::MaternKernel {
                alpha: num("alpha")?,
                nu: num("nu")?,
            },
            "pde" => {
                return Err(parse_err(
                    "the PDE matrix is not provided; use alg, exp, se or matern".into(),
                ))
            }
            other => return Err(parse_err(format!("unknown kind '{other}'"))),
        };
        let mut spec = MatrixSpec::new(n, kind_val);
        let mut int = |key: &str| -> Result<Option<u64>> {
            take(key)
                .map(|v| {
                    v.parse::<u64>()
                        .map_err(|_| parse_err(format!("'{key}={v}' is not a nonnegative integer")))
                })
                .transpose()
        };
        if let Some(seed) = int("seed")? {
            spec.seed = seed;
        }
        if let Some(rank) = int("rank")? {
            spec.rank = Some(rank as usize);
        }
        if let Some((k, _)) = fields.first() {
            return Err(parse_err(format!("unexpected key '{k}'")));
        }
        spec.validate().map_err(|e| parse_err(e.to_string()))?;
        Ok(spec)
    }
}

/// A generated matrix, with its exact spectral decomposition when known.
#[derive(Clone, Debug)]
pub struct TestMatrix {
    pub spec: MatrixSpec,
    pub matrix: SymmetricMatrix,
    pub spectrum: Option<SpectralDecomposition>,
}

impl TestMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// The attached decomposition, or a freshly computed one.
    pub fn decomposition(&self) -> Result<SpectralDecomposition> {
        match &self.spectrum {
            Some(s) => Ok(s.clone()),
            None => spectral_decompose(&self.matrix),
        }
    }

    /// Replaces the matrix by its nearest SPSD matrix (negative eigenvalues
    /// set to zero) and attaches the decomposition.
    pub fn project_psd(self) -> Result<Self> {
        let sd = self.decomposition()?;
        let clamped: Vec<f64> = sd.values.iter().map(|v| v.max(0.0)).collect();
        let matrix = SymmetricMatrix::new(scaled_outer(&sd.vectors, &clamped))?;
        let spectrum = SpectralDecomposition::new(sd.vectors, DVector::from_vec(clamped))?;
        Ok(Self {
            spec: self.spec,
            matrix,
            spectrum: Some(spectrum),
        })
    }
}

/// Builds the matrix described by `spec`.
pub fn generate(spec: &MatrixSpec) -> Result<TestMatrix> {
    spec.validate()?;
    match spec.kind {
        MatrixKind::Alg { .. } | MatrixKind::Exp { .. } => make_synthetic(spec),
        MatrixKind::SeKernel { sigma2 } => Ok(TestMatrix {
            spec: spec.clone(),
            matrix: make_se_kernel(spec.n, sigma2, spec.seed)?,
            spectrum: None,
        }),
        MatrixKind::MaternKernel { alpha, nu } => Ok(TestMatrix {
            spec: spec.clone(),
            matrix: make_matern_kernel(spec.n, alpha, nu, spec.seed)?,
            spectrum: None,
        }),
    }
}

/// Orthogonal sine matrix `U_ij = √(2/(n+1)) sin(i j π / (n+1))`, 1-based.
pub fn sine_basis(n: usize) -> DMatrix<f64> {
    let scale = (2.0 / (n as f64 + 1.0)).sqrt();
    let h = std::f64::consts::PI / (n as f64 + 1.0);
    DMatrix::from_fn(n, n, |i, j| scale * (((i + 1) * (j + 1)) as f64 * h).sin())
}

/// `A = U Λ Uᵀ` with the sine basis and the prescribed spectrum attached.
pub fn make_synthetic(spec: &MatrixSpec) -> Result<TestMatrix> {
    spec.validate()?;
    let lambda = spec
        .prescribed_spectrum()
        .ok_or_else(|| Error::InvalidArgument(format!("'{spec}' is not a synthetic matrix kind")))?;
    let u = sine_basis(spec.n);
    let matrix = SymmetricMatrix::new(scaled_outer(&u, &lambda))?;
    let spectrum = SpectralDecomposition::new(u, DVector::from_vec(lambda))?;
    Ok(TestMatrix {
        spec: spec.clone(),
        matrix,
        spectrum: Some(spectrum),
    })
}

fn kernel_points(n: usize, seed: u64) -> DVector<f64> {
    rng::gaussian_vector(n, seed)
}

/// `A_ij = exp(-|x_i - x_j|² / (2 σ²))` with `x ~ N(0, 1)` seeded.
pub fn make_se_kernel(n: usize, sigma2: f64, seed: u64) -> Result<SymmetricMatrix> {
    MatrixSpec::se(n, sigma2, seed).validate()?;
    let x = kernel_points(n, seed);
    SymmetricMatrix::from_fn(n, |i, j| (-(x[i] - x[j]).powi(2) / (2.0 * sigma2)).exp())
}

/// Matérn entry as a function of the distance `r`.
///
/// Uses `z^ν K_ν(z) = √(π/2) e^{-z} Σ_{j=0}^{m} (m+j)!/(j!(m-j)!) 2^{-j} z^{m-j}`
/// for `ν = m + 1/2`, which is finite at `z = 0`.
pub fn matern_entry(r: f64, alpha: f64, nu: f64) -> Result<f64> {
    if !MATERN_NUS.contains(&nu) {
        return Err(Error::InvalidArgument(format!(
            "matern supports only the closed-form half-integer cases nu in {{0.5, 1.5, 2.5}}, got {nu}"
        )));
    }
    let m = (nu - 0.5).round() as i32;
    let z = alpha * r.abs();
    let fact = |k: i32| (1..=k).map(f64::from).product::<f64>();
    let poly: f64 = (0..=m)
        .map(|j| fact(m + j) / (fact(j) * fact(m - j)) * 0.5f64.powi(j) * z.powi(m - j))
        .sum();
    let pi = std::f64::consts::PI;
    // √π · √(π/2) / (2^{ν-1} Γ(ν + 1/2)) with Γ(m + 1) = m!.
    let constant = pi / (2f64.powf(nu - 0.5) * fact(m));
    Ok(constant * (-z).exp() * poly / alpha.powf(2.0 * nu))
}

pub fn make_matern_kernel(n: usize, alpha: f64, nu: f64, seed: u64) -> Result<SymmetricMatrix> {
    MatrixSpec::matern(n, alpha, nu, seed).validate()?;
    let x = kernel_points(n, seed);
    let diag = matern_entry(0.0, alpha, nu)?;
    SymmetricMatrix::from_fn(n, |i, j| {
        if i == j {
            diag
        } else {
            matern_entry(x[i] - x[j], alpha, nu).expect("nu validated")
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{check_symmetry, oracle_from_dense, symmetric_eigenvalues};

    #[test]
    fn sine_basis_n2_and_orthogonality() {
        let u = sine_basis(2);
        let c = (2.0f64 / 3.0).sqrt();
        let pi3 = std::f64::consts::PI / 3.0;
        assert!((u[(0, 0)] - c * pi3.sin()).abs() < 1e-15);
        assert!((u[(1, 1)] - c * (4.0 * pi3).sin()).abs() < 1e-15);
        for n in [2, 7, 64] {
            let u = sine_basis(n);
            let err = (u.transpose() * &u - DMatrix::identity(n, n)).norm();
            assert!(err < 1e-13, "n={n}: {err}");
        }
    }

    #[test]
    fn prescribed_spectra() {
        let alg = make_synthetic(&MatrixSpec::alg(10, 1.0, 3.0)).unwrap();
        assert!((alg.spectrum.unwrap().values[4] - 1.0 / 125.0).abs() < 1e-16);
        let exp = make_synthetic(&MatrixSpec::exp(10, 10.0, (-0.1f64).exp())).unwrap();
        assert!((exp.spectrum.unwrap().values[0] - 10.0 * (-0.1f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn attached_spectrum_matches_eigensolver() {
        let tm = make_synthetic(&MatrixSpec::exp(50, 1.0, (-1.0f64).exp())).unwrap();
        let computed = symmetric_eigenvalues(tm.matrix.as_matrix(), "test").unwrap();
        for (i, v) in computed.iter().take(20).enumerate() {
            let want = (-(i as f64 + 1.0)).exp();
            assert!((v - want).abs() <= 1e-10 * want.max(1e-6), "{i}: {v} vs {want}");
        }
    }

    #[test]
    fn rank_truncation() {
        let tm = make_synthetic(&MatrixSpec::alg(30, 1.0, 1.0).with_rank(4)).unwrap();
        let ev = symmetric_eigenvalues(tm.matrix.as_matrix(), "test").unwrap();
        assert!(ev[4].abs() < 1e-14 && ev[3] > 0.2);
    }

    #[test]
    fn se_kernel_properties() {
        let a = make_se_kernel(200, 0.1, 3).unwrap();
        for i in 0..200 {
            assert_eq!(a.as_matrix()[(i, i)], 1.0);
        }
        let ev = symmetric_eigenvalues(a.as_matrix(), "se").unwrap();
        assert!(*ev.last().unwrap() >= -1e-10 * ev[0]);
        check_symmetry(&oracle_from_dense(&a), 1).unwrap();
    }

    #[test]
    fn matern_closed_forms() {
        let pi = std::f64::consts::PI;
        for &z in &[0.0_f64, 0.3, 1.7, 5.0] {
            let e = (-z).exp();
            assert!((matern_entry(z, 1.0, 0.5).unwrap() - pi * e).abs() < 1e-14);
            assert!((matern_entry(z, 1.0, 1.5).unwrap() - pi / 2.0 * e * (1.0 + z)).abs() < 1e-14);
            let v52 = pi * e * (z * z + 3.0 * z + 3.0) / 8.0;
            assert!((matern_entry(z, 1.0, 2.5).unwrap() - v52).abs() < 1e-14);
        }
        let alpha = 2.5;
        let ratio = matern_entry(0.8, alpha, 0.5).unwrap() / matern_entry(0.0, alpha, 0.5).unwrap();
        assert!((ratio - (-alpha * 0.8f64).exp()).abs() < 1e-12);
        assert!(matern_entry(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn matern_kernel_diagonal_constant_and_positive() {
        let a = make_matern_kernel(60, 1.0, 1.5, 4).unwrap();
        let m = a.as_matrix();
        assert!(m.iter().all(|&v| v > 0.0));
        assert!((0..60).all(|i| m[(i, i)] == m[(0, 0)]));
        check_symmetry(&oracle_from_dense(&a), 2).unwrap();
    }

    #[test]
    fn spec_round_trip_and_errors() {
        for text in [
            "alg:n=500,s=1,c=3",
            "exp:n=500,s=10,gamma=0.9048374",
            "se:n=500,sigma2=0.1,seed=7",
            "matern:n=500,alpha=1,nu=1.5,seed=7",
            "alg:n=20,s=1,c=2,rank=3",
        ] {
            let spec: MatrixSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
            assert_eq!(spec.to_string().parse::<MatrixSpec>().unwrap(), spec);
        }
        for bad in [
            "alg:n=5,s=1",
            "matern:n=5,alpha=1,nu=1",
            "se:n=5,sigma2=-1",
            "pde:n=5",
            "alg:n=5,s=1,c=2,foo=1",
            "alg:n=0,s=1,c=2",
            "se:n=5,sigma2=1,rank=2",
        ] {
            assert!(bad.parse::<MatrixSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let s = MatrixSpec::se(40, 0.5, 11);
        assert_eq!(generate(&s).unwrap().matrix, generate(&s).unwrap().matrix);
        let m = MatrixSpec::matern(40, 1.0, 2.5, 11);
        assert_eq!(generate(&m).unwrap().matrix, generate(&m).unwrap().matrix);
    }
}
