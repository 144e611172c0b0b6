//! Lanczos approximation of `f(A) X` for symmetric `A`.
//!
//! Each column `x` of the block runs its own symmetric Lanczos recurrence,
//! but all columns advance in lockstep so every step costs one block product
//! with `A`. After `d` steps, `f(A) x ≈ ‖x‖ V_d f(T_d) e₁`, with `f(T_d)`
//! evaluated through the eigendecomposition of the tridiagonal `T_d` and
//! negative Ritz values clamped to zero.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::funcs::ScalarFunction;
use crate::linalg::{symmetric_norm, DenseOracle, MatVecOracle, Norm, SymmetricMatrix};
use crate::nystrom::{nystrom_approx, nystrom_approx_with, NystromOptions, Sketch};

/// Relative size of `β_j` (against a running estimate of `‖A‖₂`) at which
/// the recurrence is considered to have found an invariant subspace.
pub const BREAKDOWN_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LanczosParams {
    pub depth: usize,
    /// Full reorthogonalization against all previous basis vectors.
    pub reorthogonalize: bool,
}

impl LanczosParams {
    pub fn new(depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidArgument("Lanczos depth must be at least 1".into()));
        }
        Ok(Self {
            depth,
            reorthogonalize: true,
        })
    }

    pub fn without_reorthogonalization(mut self) -> Self {
        self.reorthogonalize = false;
        self
    }
}

/// Result of [`lanczos_fun_apply`].
#[derive(Clone, Debug)]
pub struct LanczosOutput {
    /// Approximation of `f(A) X`.
    pub result: DMatrix<f64>,
    /// Lanczos steps (= products with `A`) spent on each column.
    pub steps: Vec<usize>,
    /// Columns whose recurrence terminated early at an invariant subspace.
    pub breakdown: Vec<bool>,
}

impl LanczosOutput {
    pub fn total_steps(&self) -> usize {
        self.steps.iter().sum()
    }
}

struct ColumnState {
    norm: f64,
    basis: Vec<DVector<f64>>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    norm_estimate: f64,
    done: bool,
    breakdown: bool,
}

/// Approximates `f(A) X` with `params.depth` Lanczos steps per column.
///
/// A zero column maps to a zero column without spending products.
pub fn lanczos_fun_apply(
    a: &dyn MatVecOracle,
    f: &ScalarFunction,
    x: &DMatrix<f64>,
    params: &LanczosParams,
) -> Result<LanczosOutput> {
    let (n, b) = x.shape();
    if n != a.dim() {
        return Err(Error::InvalidArgument(format!(
            "block has {n} rows but the operator has dimension {}",
            a.dim()
        )));
    }
    if params.depth == 0 || params.depth > n {
        return Err(Error::InvalidArgument(format!(
            "Lanczos depth must satisfy 1 <= d <= n = {n}, got {}",
            params.depth
        )));
    }

    let mut cols: Vec<ColumnState> = (0..b)
        .map(|j| {
            let norm = x.column(j).norm();
            let mut basis = Vec::with_capacity(params.depth);
            if norm > 0.0 {
                basis.push(x.column(j) / norm);
            }
            ColumnState {
                norm,
                basis,
                alphas: Vec::with_capacity(params.depth),
                betas: Vec::with_capacity(params.depth),
                norm_estimate: 0.0,
                done: norm == 0.0,
                breakdown: norm == 0.0,
            }
        })
        .collect();

    for step in 0..params.depth {
        let active: Vec<usize> = (0..b).filter(|&j| !cols[j].done).collect();
        if active.is_empty() {
            break;
        }
        let mut block = DMatrix::zeros(n, active.len());
        for (pos, &j) in active.iter().enumerate() {
            block.set_column(pos, &cols[j].basis[step]);
        }
        let w_block = a.apply(&block);

        for (pos, &j) in active.iter().enumerate() {
            let col = &mut cols[j];
            let mut w = w_block.column(pos).into_owned();
            let alpha = col.basis[step].dot(&w);
            w.axpy(-alpha, &col.basis[step], 1.0);
            let beta_prev = if step > 0 { col.betas[step - 1] } else { 0.0 };
            if step > 0 {
                w.axpy(-beta_prev, &col.basis[step - 1], 1.0);
            }
            if params.reorthogonalize {
                for _ in 0..2 {
                    for v in &col.basis {
                        let c = v.dot(&w);
                        w.axpy(-c, v, 1.0);
                    }
                }
            }
            let beta = w.norm();
            col.alphas.push(alpha);
            col.norm_estimate = col.norm_estimate.max(alpha.abs() + beta + beta_prev);

            if step + 1 == params.depth {
                col.done = true;
            } else if beta <= BREAKDOWN_TOL * col.norm_estimate {
                col.done = true;
                col.breakdown = true;
            } else {
                col.betas.push(beta);
                col.basis.push(w / beta);
            }
        }
    }

    let mut result = DMatrix::zeros(n, b);
    let mut steps = Vec::with_capacity(b);
    let mut breakdown = Vec::with_capacity(b);
    for (j, col) in cols.iter().enumerate() {
        let m = col.alphas.len();
        steps.push(m);
        breakdown.push(col.breakdown && m < params.depth);
        if m == 0 {
            continue;
        }
        let coeffs = tridiagonal_function_e1(&col.alphas, &col.betas[..m - 1], f);
        let mut out = result.column_mut(j);
        for (i, c) in coeffs.iter().enumerate() {
            out.axpy(col.norm * c, &col.basis[i], 1.0);
        }
    }
    Ok(LanczosOutput {
        result,
        steps,
        breakdown,
    })
}

/// `f(T) e₁` for the symmetric tridiagonal `T` with diagonal `alphas` and
/// off-diagonal `betas`.
fn tridiagonal_function_e1(alphas: &[f64], betas: &[f64], f: &ScalarFunction) -> Vec<f64> {
    let m = alphas.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let s = &eig.eigenvectors;
    (0..m)
        .map(|i| {
            (0..m)
                .map(|l| s[(i, l)] * f.eval(eig.eigenvalues[l].max(0.0)) * s[(0, l)])
                .sum()
        })
        .collect()
}

/// `f(A)` exposed as an operator through Lanczos. `mvp_count` counts
/// products with `f(A)`; the wrapped operator keeps counting products with
/// `A`.
pub struct LanczosFunOracle<'a> {
    inner: &'a dyn MatVecOracle,
    f: ScalarFunction,
    params: LanczosParams,
    count: AtomicUsize,
}

impl<'a> LanczosFunOracle<'a> {
    pub fn new(inner: &'a dyn MatVecOracle, f: ScalarFunction, params: LanczosParams) -> Result<Self> {
        if params.depth == 0 || params.depth > inner.dim() {
            return Err(Error::InvalidArgument(format!(
                "Lanczos depth must satisfy 1 <= d <= n = {}, got {}",
                inner.dim(),
                params.depth
            )));
        }
        Ok(Self {
            inner,
            f,
            params,
            count: AtomicUsize::new(0),
        })
    }

    pub fn inner_mvp_count(&self) -> usize {
        self.inner.mvp_count()
    }
}

impl MatVecOracle for LanczosFunOracle<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.count.fetch_add(x.ncols(), Ordering::Relaxed);
        lanczos_fun_apply(self.inner, &self.f, x, &self.params)
            .expect("dimensions and depth validated at construction")
            .result
    }

    fn mvp_count(&self) -> usize {
        self.count.load(Ordering::Relaxed)
    }
}

/// Search settings of [`adaptive_depth`].
#[derive(Clone, Copy, Debug)]
pub struct DepthSearch {
    /// Accepted ratio between the Lanczos-based and the exact error.
    pub factor: f64,
    /// Depth increment; the search tries `step, 2 step, ...`.
    pub step: usize,
    pub reorthogonalize: bool,
}

impl Default for DepthSearch {
    fn default() -> Self {
        Self {
            factor: 1.1,
            step: 5,
            reorthogonalize: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DepthSelection {
    pub depth: usize,
    /// The condition never held for `d < n`; `depth` was capped at `n`.
    pub saturated: bool,
    /// `‖f(A) − B̂_{q,k}‖` with exact products with `f(A)`.
    pub exact_error: f64,
    /// `‖f(A) − B̂^{(d)}_{q,k}‖` at the returned depth.
    pub lanczos_error: f64,
    /// Products with `A` spent by `B̂^{(d)}_{q,k}` at the returned depth.
    pub mvps: usize,
}

/// Smallest depth `d ∈ {step, 2 step, ...}` such that the Nyström
/// approximation of `f(A)` built with `d`-step Lanczos products,
/// `B̂^{(d)}_{q,k}`, satisfies `‖f(A) − B̂^{(d)}‖ ≤ factor · ‖f(A) − B̂‖`,
/// where `B̂` uses exact products with the dense `f_of_a`. Both use the same
/// Gaussian sketch. An absolute slack of `64 ε ‖f(A)‖_F` absorbs rounding
/// when the exact error vanishes.
#[allow(clippy::too_many_arguments)]
pub fn adaptive_depth(
    a: &SymmetricMatrix,
    f_of_a: &DMatrix<f64>,
    f: &ScalarFunction,
    k: usize,
    q: usize,
    seed: u64,
    norm: Norm,
    search: DepthSearch,
) -> Result<DepthSelection> {
    let n = a.dim();
    if search.step == 0 {
        return Err(Error::InvalidArgument("depth step must be positive".into()));
    }
    let sketch = Sketch::gaussian(seed);
    let exact = nystrom_approx(&DenseOracle::from_ref(f_of_a), k, q, &sketch)?;
    let exact_error = symmetric_norm(&(f_of_a - exact.to_dense()), norm)?;
    let slack = 64.0 * f64::EPSILON * f_of_a.norm();

    let mut depth = search.step.min(n);
    loop {
        let base = DenseOracle::new(a);
        let params = LanczosParams {
            depth,
            reorthogonalize: search.reorthogonalize,
        };
        let op = LanczosFunOracle::new(&base, *f, params)?;
        let approx = nystrom_approx_with(&op, k, q, &sketch, NystromOptions::approximate_operator())?;
        let lanczos_error = symmetric_norm(&(f_of_a - approx.to_dense()), norm)?;
        let ok = lanczos_error <= search.factor * exact_error + slack;
        if ok || depth >= n {
            return Ok(DepthSelection {
                depth,
                saturated: !ok,
                exact_error,
                lanczos_error,
                mvps: base.mvp_count(),
            });
        }
        depth = (depth + search.step).min(n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{oracle_from_dense, spectral_decompose};
    use crate::rng;

    fn random_spsd(n: usize, seed: u64) -> SymmetricMatrix {
        let g = rng::gaussian_matrix(n, n, seed);
        SymmetricMatrix::new(&g * g.transpose() / n as f64).unwrap()
    }

    #[test]
    fn full_depth_is_exact() {
        let n = 50;
        let a = random_spsd(n, 1);
        let sd = spectral_decompose(&a).unwrap();
        let x = rng::gaussian_matrix(n, 3, 2);
        for f in [ScalarFunction::SQRT, ScalarFunction::LOG1P] {
            let exact = sd.map(&f).unwrap() * &x;
            let out = lanczos_fun_apply(&oracle_from_dense(&a), &f, &x, &LanczosParams::new(n).unwrap()).unwrap();
            let rel = (&out.result - &exact).norm() / exact.norm();
            assert!(rel < 1e-8, "{f}: {rel}");
        }
    }

    #[test]
    fn identity_is_exact_from_two_steps() {
        let a = random_spsd(40, 3);
        let x = rng::gaussian_matrix(40, 2, 4);
        let out = lanczos_fun_apply(
            &oracle_from_dense(&a),
            &ScalarFunction::IDENTITY,
            &x,
            &LanczosParams::new(2).unwrap(),
        )
        .unwrap();
        let exact = a.as_matrix() * &x;
        assert!((&out.result - &exact).norm() <= 1e-10 * exact.norm());
    }

    #[test]
    fn eigenvector_start_breaks_down_exactly() {
        let a = SymmetricMatrix::from_diagonal(&[3.0, 2.0, 1.0, 0.5]).unwrap();
        let x = DMatrix::from_column_slice(4, 1, &[0.0, 2.0, 0.0, 0.0]);
        let oracle = oracle_from_dense(&a);
        let out = lanczos_fun_apply(&oracle, &ScalarFunction::SQRT, &x, &LanczosParams::new(3).unwrap()).unwrap();
        assert!(out.breakdown[0]);
        assert_eq!(out.steps[0], 1);
        assert_eq!(oracle.mvp_count(), 1);
        assert!((out.result[(1, 0)] - 2.0 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn counts_depth_times_columns() {
        let a = random_spsd(30, 5);
        let oracle = oracle_from_dense(&a);
        let x = rng::gaussian_matrix(30, 4, 6);
        let out = lanczos_fun_apply(&oracle, &ScalarFunction::LOG1P, &x, &LanczosParams::new(7).unwrap()).unwrap();
        assert_eq!(oracle.mvp_count(), 28);
        assert_eq!(out.total_steps(), 28);
    }

    #[test]
    fn zero_column_costs_nothing() {
        let a = random_spsd(10, 5);
        let oracle = oracle_from_dense(&a);
        let x = DMatrix::zeros(10, 1);
        let out = lanczos_fun_apply(&oracle, &ScalarFunction::SQRT, &x, &LanczosParams::new(4).unwrap()).unwrap();
        assert_eq!(out.result, x);
        assert_eq!(oracle.mvp_count(), 0);
    }

    #[test]
    fn rejects_bad_depth() {
        let a = random_spsd(5, 5);
        let x = rng::gaussian_matrix(5, 1, 1);
        assert!(LanczosParams::new(0).is_err());
        assert!(lanczos_fun_apply(
            &oracle_from_dense(&a),
            &ScalarFunction::SQRT,
            &x,
            &LanczosParams::new(6).unwrap()
        )
        .is_err());
    }

    #[test]
    fn adaptive_depth_identity_takes_first_step() {
        let a = random_spsd(40, 9);
        let fa = a.as_matrix().clone();
        let sel = adaptive_depth(
            &a,
            &fa,
            &ScalarFunction::IDENTITY,
            5,
            1,
            3,
            Norm::Frobenius,
            DepthSearch::default(),
        )
        .unwrap();
        assert_eq!(sel.depth, 5);
        assert!(!sel.saturated);
        assert_eq!(sel.mvps, 5 * 5);
    }

    #[test]
    fn lanczos_oracle_counts_both_levels() {
        let a = random_spsd(20, 2);
        let base = oracle_from_dense(&a);
        let op = LanczosFunOracle::new(&base, ScalarFunction::SQRT, LanczosParams::new(4).unwrap()).unwrap();
        op.apply(&rng::gaussian_matrix(20, 3, 1));
        assert_eq!(op.mvp_count(), 3);
        assert_eq!(op.inner_mvp_count(), 12);
    }
}
