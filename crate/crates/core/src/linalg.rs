//! Dense symmetric linear algebra used throughout the crate.
//!
//! Everything is built on `nalgebra` dense matrices. Eigenvalues are always
//! reported in descending order, matching the `λ₁ ≥ λ₂ ≥ … ≥ λₙ` convention
//! used by the error bounds.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::funcs::ScalarFunction;
use crate::rng;

/// Default relative threshold below which eigenvalues of the small core
/// matrix are treated as zero by [`truncated_sqrt_pinv`].
pub const DEFAULT_PINV_TOL: f64 = 5e-16;

/// Relative threshold on `|R_ii|` that marks a thin QR factorization as
/// rank deficient.
pub const QR_RANK_TOL: f64 = 1e-14;

fn max_iterations(n: usize) -> usize {
    1_000 + 100 * n
}

/// A square matrix whose entries satisfy `a[(i, j)] == a[(j, i)]` exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    data: DMatrix<f64>,
}

impl SymmetricMatrix {
    /// Wraps `m`, mirroring the upper triangle onto the lower one.
    ///
    /// Rejects non-square or empty input, and input whose asymmetry exceeds
    /// `1e-10` relative to its largest entry.
    pub fn new(mut m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "symmetric matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        for j in 0..n {
            for i in (j + 1)..n {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not symmetric at ({i}, {j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
                m[(i, j)] = m[(j, i)];
            }
        }
        Ok(Self { data: m })
    }

    /// Builds the matrix by evaluating `entry(i, j)` for `i <= j` only.
    pub fn from_fn(n: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = entry(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(Self { data: m })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        Ok(Self {
            data: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }
}

/// Orthonormal eigenvectors (columns of `vectors`) with eigenvalues sorted in
/// descending order.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub vectors: DMatrix<f64>,
    pub values: DVector<f64>,
}

impl SpectralDecomposition {
    /// Builds a decomposition, reordering the pairs so that values descend.
    pub fn new(vectors: DMatrix<f64>, values: DVector<f64>) -> Result<Self> {
        if vectors.ncols() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} eigenvectors but {} eigenvalues",
                vectors.ncols(),
                values.len()
            )));
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let sorted_values = DVector::from_iterator(values.len(), order.iter().map(|&i| values[i]));
        let sorted_vectors = vectors.select_columns(order.iter());
        Ok(Self {
            vectors: sorted_vectors,
            values: sorted_values,
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `U diag(λ) Uᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        scaled_outer(&self.vectors, self.values.as_slice())
    }

    /// Dense `f(A) = U f(Λ) Uᵀ`.
    pub fn map(&self, f: &ScalarFunction) -> Result<DMatrix<f64>> {
        let fvals = f.apply_to_spectrum(self.values.as_slice())?;
        Ok(scaled_outer(&self.vectors, &fvals))
    }

    /// `f(λ)` for every eigenvalue, descending order preserved for monotone `f`.
    pub fn map_values(&self, f: &ScalarFunction) -> Result<Vec<f64>> {
        f.apply_to_spectrum(self.values.as_slice())
    }
}

/// `U diag(w) Uᵀ` for a tall `U`.
pub fn scaled_outer(u: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let mut scaled = u.clone();
    for (j, &w) in weights.iter().enumerate() {
        scaled.column_mut(j).scale_mut(w);
    }
    let mut out = &scaled * u.transpose();
    symmetrize_in_place(&mut out);
    out
}

/// Replaces `m` with `(m + mᵀ)/2`.
pub fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
pub fn spectral_decompose(a: &SymmetricMatrix) -> Result<SpectralDecomposition> {
    symmetric_eigen(a.as_matrix(), "symmetric input matrix")
}

/// Eigendecomposition of a nominally symmetric dense matrix. Only the lower
/// triangle is read. `what` names the matrix in error messages.
pub fn symmetric_eigen(m: &DMatrix<f64>, what: &str) -> Result<SpectralDecomposition> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, max_iterations(n))
        .ok_or_else(|| Error::NoConvergence(format!("{what} ({n}x{n})")))?;
    SpectralDecomposition::new(eig.eigenvectors, eig.eigenvalues)
}

/// Eigenvalues only, descending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>, what: &str) -> Result<Vec<f64>> {
    let n = m.nrows();
    let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence(format!("{what} ({n}x{n})")));
    }
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Result of [`thin_qr`].
#[derive(Clone, Debug)]
pub struct ThinQr {
    /// `n x k` with orthonormal columns.
    pub q: DMatrix<f64>,
    /// `k x k` upper triangular.
    pub r: DMatrix<f64>,
    /// Set when some `|R_ii| <= 1e-14 ‖X‖_F`. `q` is still orthonormal.
    pub rank_deficient: bool,
}

/// Householder thin QR of an `n x k` matrix with `n >= k`.
pub fn thin_qr(x: &DMatrix<f64>) -> Result<ThinQr> {
    let (n, k) = x.shape();
    if n < k {
        return Err(Error::InvalidArgument(format!(
            "thin QR needs at least as many rows as columns, got {n}x{k}"
        )));
    }
    let scale = x.norm();
    let qr = x.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let rank_deficient = (0..k).any(|i| r[(i, i)].abs() <= QR_RANK_TOL * scale);
    Ok(ThinQr { q, r, rank_deficient })
}

/// `(D^{1/2})†` for a vector of eigenvalues: `1/√dᵢ` when `dᵢ` exceeds
/// `tol_rel · max|D|`, zero otherwise (negative values included).
pub fn truncated_sqrt_pinv(d: &[f64], tol_rel: f64) -> Vec<f64> {
    let scale = d.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let threshold = tol_rel * scale;
    d.iter()
        .map(|&v| if v > threshold && v > 0.0 { 1.0 / v.sqrt() } else { 0.0 })
        .collect()
}

/// Thin SVD of a tall matrix returning the left singular vectors and the
/// singular values in descending order. Computed as a QR factorization
/// followed by the SVD of the square triangular factor.
pub fn thin_svd_left(b: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let k = b.ncols();
    let qr = thin_qr(b)?;
    let svd = SVD::try_new(qr.r, true, false, f64::EPSILON, max_iterations(k))
        .ok_or_else(|| Error::NoConvergence(format!("SVD of {k}x{k} triangular factor")))?;
    let u_r = svd.u.expect("left singular vectors requested");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let u_sorted = u_r.select_columns(order.iter());
    let values = order.iter().map(|&i| sv[i]).collect();
    Ok((qr.q * u_sorted, values))
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    let dim = m.nrows().min(m.ncols());
    let svd = SVD::try_new(m.clone(), false, false, f64::EPSILON, max_iterations(dim))
        .ok_or_else(|| Error::NoConvergence(format!("SVD of {}x{}", m.nrows(), m.ncols())))?;
    let mut values: Vec<f64> = svd.singular_values.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Moore–Penrose pseudo-inverse, discarding singular values below
/// `rtol · σ_max`.
pub fn pinv(m: &DMatrix<f64>, rtol: f64) -> Result<DMatrix<f64>> {
    let dim = m.nrows().min(m.ncols());
    let svd = SVD::try_new(m.clone(), true, true, f64::EPSILON, max_iterations(dim))
        .ok_or_else(|| Error::NoConvergence(format!("SVD of {}x{}", m.nrows(), m.ncols())))?;
    let smax = svd.singular_values.max();
    svd.pseudo_inverse(rtol * smax)
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Schatten-`s` norm from singular values; `s = ∞` is the largest one.
pub fn schatten_from_singular_values(sv: &[f64], s: f64) -> f64 {
    if s.is_infinite() {
        sv.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    } else {
        sv.iter().map(|v| v.abs().powf(s)).sum::<f64>().powf(1.0 / s)
    }
}

/// Schatten-`s` norm of an arbitrary dense matrix.
pub fn schatten_norm(m: &DMatrix<f64>, s: f64) -> Result<f64> {
    if s == 2.0 {
        return Ok(m.norm());
    }
    Ok(schatten_from_singular_values(&singular_values(m)?, s))
}

/// Norms used to measure approximation errors of symmetric matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Norm {
    Frobenius,
    Nuclear,
    Operator,
}

impl Norm {
    /// The Schatten index of this norm.
    pub fn schatten_index(self) -> f64 {
        match self {
            Norm::Frobenius => 2.0,
            Norm::Nuclear => 1.0,
            Norm::Operator => f64::INFINITY,
        }
    }

    /// Norm of a diagonal matrix given its diagonal.
    pub fn of_values(self, values: &[f64]) -> f64 {
        schatten_from_singular_values(values, self.schatten_index())
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::Frobenius => "frobenius",
            Norm::Nuclear => "nuclear",
            Norm::Operator => "operator",
        })
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "frobenius" | "fro" | "f" => Ok(Norm::Frobenius),
            "nuclear" | "nuc" | "trace" => Ok(Norm::Nuclear),
            "operator" | "spectral" | "op" | "2" => Ok(Norm::Operator),
            other => Err(Error::Parse(format!("unknown norm `{other}`"))),
        }
    }
}

/// Norm of a symmetric matrix; nuclear and operator norms go through its
/// eigenvalues.
pub fn symmetric_norm(m: &DMatrix<f64>, norm: Norm) -> Result<f64> {
    match norm {
        Norm::Frobenius => Ok(m.norm()),
        _ => {
            let values = symmetric_eigenvalues(m, "error matrix")?;
            Ok(norm.of_values(&values))
        }
    }
}

/// A symmetric linear operator accessed through block products.
///
/// `mvp_count` counts columns, so applying the operator to an `n x b`
/// block adds `b`.
pub trait MatVecOracle: Sync {
    fn dim(&self) -> usize;

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64>;

    fn mvp_count(&self) -> usize;
}

/// A [`MatVecOracle`] backed by an explicit dense matrix.
#[derive(Debug)]
pub struct DenseOracle<'a> {
    matrix: Cow<'a, DMatrix<f64>>,
    count: AtomicUsize,
}

impl<'a> DenseOracle<'a> {
    pub fn new(a: &'a SymmetricMatrix) -> Self {
        Self {
            matrix: Cow::Borrowed(a.as_matrix()),
            count: AtomicUsize::new(0),
        }
    }

    /// Takes ownership of a matrix the caller guarantees to be symmetric,
    /// e.g. a dense `f(A)` built from a spectral decomposition.
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        Self {
            matrix: Cow::Owned(m),
            count: AtomicUsize::new(0),
        }
    }

    /// Borrowing counterpart of [`DenseOracle::from_matrix`].
    pub fn from_ref(m: &'a DMatrix<f64>) -> Self {
        Self {
            matrix: Cow::Borrowed(m),
            count: AtomicUsize::new(0),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Wraps a dense symmetric matrix as a counting oracle.
pub fn oracle_from_dense(a: &SymmetricMatrix) -> DenseOracle<'_> {
    DenseOracle::new(a)
}

impl MatVecOracle for DenseOracle<'_> {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.count.fetch_add(x.ncols(), Ordering::Relaxed);
        self.matrix.as_ref() * x
    }

    fn mvp_count(&self) -> usize {
        self.count.load(Ordering::Relaxed)
    }
}

/// Largest relative asymmetry `|xᵀ(Ay) − yᵀ(Ax)| / (‖x‖‖Ay‖ + ‖y‖‖Ax‖)` over
/// `pairs` Gaussian probe pairs. The probes are counted as mvps.
pub fn symmetry_defect(oracle: &dyn MatVecOracle, pairs: usize, seed: u64) -> f64 {
    let n = oracle.dim();
    let x = rng::gaussian_matrix(n, pairs, rng::derive_seed(seed, 0));
    let y = rng::gaussian_matrix(n, pairs, rng::derive_seed(seed, 1));
    let ax = oracle.apply(&x);
    let ay = oracle.apply(&y);
    (0..pairs)
        .map(|j| {
            let xay = x.column(j).dot(&ay.column(j));
            let yax = y.column(j).dot(&ax.column(j));
            let scale = x.column(j).norm() * ay.column(j).norm() + y.column(j).norm() * ax.column(j).norm();
            if scale == 0.0 {
                0.0
            } else {
                (xay - yax).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

/// Fails unless [`symmetry_defect`] stays below `1e-8` on ten probe pairs.
pub fn check_symmetry(oracle: &dyn MatVecOracle, seed: u64) -> Result<()> {
    let defect = symmetry_defect(oracle, 10, seed);
    if defect > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "operator failed the symmetry probe (relative defect {defect:e})"
        )));
    }
    Ok(())
}
