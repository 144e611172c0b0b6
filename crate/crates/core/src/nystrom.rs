//! funNyström: a low-rank approximation of `f(A)` obtained by applying `f`
//! to the eigenvalues of a Nyström approximation of `A`.
//!
//! For a sketch `Ω ∈ R^{n×k}` and `q ≥ 1` the Nyström approximation is
//!
//! ```text
//! Â_{q,k} = A^q Ω (Ωᵀ A^{2q-1} Ω)† (A^q Ω)ᵀ
//! ```
//!
//! and is computed without forming any `n x n` matrix: `q - 1` steps of
//! subspace iteration with re-orthonormalization, one more product `Y = A Q`,
//! then a factor `B = Y V (D^{1/2})† Vᵀ` with `QᵀY = V D Vᵀ`, whose SVD
//! `B = Û Σ Wᵀ` gives `Â = Û Σ² Ûᵀ`. Since `f(0) = 0`, `f(Â) = Û f(Σ²) Ûᵀ`.
//! The whole procedure costs exactly `q k` matrix-vector products.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::funcs::ScalarFunction;
use crate::linalg::{
    scaled_outer, symmetric_eigen, symmetrize_in_place, thin_qr, thin_svd_left, truncated_sqrt_pinv, MatVecOracle,
    DEFAULT_PINV_TOL,
};
use crate::rng;

/// Where the sketching matrix comes from.
#[derive(Clone, Debug)]
pub enum Sketch {
    /// I.i.d. standard normal entries generated from the seed.
    Gaussian { seed: u64 },
    /// A caller-supplied `n x k` matrix. Used to pair algorithms on one
    /// sketch and to evaluate per-sketch (structural) bounds.
    Explicit(DMatrix<f64>),
}

impl Sketch {
    pub fn gaussian(seed: u64) -> Self {
        Sketch::Gaussian { seed }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Sketch::Gaussian { seed } => Some(*seed),
            Sketch::Explicit(_) => None,
        }
    }

    /// The `n x k` sketching matrix.
    pub fn materialize(&self, n: usize, k: usize) -> Result<DMatrix<f64>> {
        match self {
            Sketch::Gaussian { seed } => gaussian_sketch(n, k, *seed),
            Sketch::Explicit(m) => {
                if m.shape() != (n, k) {
                    return Err(Error::InvalidArgument(format!(
                        "explicit sketch is {}x{}, expected {n}x{k}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                Ok(m.clone())
            }
        }
    }
}

/// Seeded `n x k` Gaussian sketch, `n >= k >= 1`.
pub fn gaussian_sketch(n: usize, k: usize, seed: u64) -> Result<DMatrix<f64>> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "sketch size must satisfy 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    Ok(rng::gaussian_matrix(n, k, seed))
}

/// Numerical knobs of [`nystrom_approx_with`].
#[derive(Clone, Copy, Debug)]
pub struct NystromOptions {
    /// Eigenvalues of `QᵀY` at or below `pinv_tol · ‖D‖₂` are treated as zero.
    pub pinv_tol: f64,
    /// `QᵀY` with an eigenvalue below `-indefinite_tol · ‖D‖₂` is rejected.
    pub indefinite_tol: f64,
}

impl Default for NystromOptions {
    fn default() -> Self {
        Self {
            pinv_tol: DEFAULT_PINV_TOL,
            indefinite_tol: 1e-8,
        }
    }
}

impl NystromOptions {
    /// Options for operators that are only approximately symmetric positive
    /// semi-definite, such as Lanczos approximations of `f(A)`. Negative
    /// eigenvalues of the core matrix are truncated instead of rejected.
    pub fn approximate_operator() -> Self {
        Self {
            indefinite_tol: f64::INFINITY,
            ..Self::default()
        }
    }
}

/// Rank-`r` factorized SPSD approximation `U diag(λ) Uᵀ`.
#[derive(Clone, Debug)]
pub struct LowRankFactor {
    /// `n x r`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Nonnegative, descending.
    pub lambda: Vec<f64>,
    pub rank_requested: usize,
    pub q: usize,
    pub seed: Option<u64>,
    pub mvps_used: usize,
}

impl LowRankFactor {
    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        scaled_outer(&self.u, &self.lambda)
    }

    /// `U diag(λ) Uᵀ X` without forming the `n x n` matrix.
    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut coeffs = self.u.transpose() * x;
        for (i, &l) in self.lambda.iter().enumerate() {
            coeffs.row_mut(i).scale_mut(l);
        }
        &self.u * coeffs
    }

    pub fn trace(&self) -> f64 {
        self.lambda.iter().sum()
    }

    /// The same factor with `f` applied to its eigenvalues.
    pub fn map(&self, f: &ScalarFunction) -> Result<Self> {
        Ok(Self {
            lambda: f.apply_to_spectrum(&self.lambda)?,
            ..self.clone()
        })
    }
}

/// Nyström approximation `Â_{q,k}` as a spectral factor (eigenvalues `Σ²`),
/// with default options.
pub fn nystrom_approx(a: &dyn MatVecOracle, k: usize, q: usize, sketch: &Sketch) -> Result<LowRankFactor> {
    nystrom_approx_with(a, k, q, sketch, NystromOptions::default())
}

pub fn nystrom_approx_with(
    a: &dyn MatVecOracle,
    k: usize,
    q: usize,
    sketch: &Sketch,
    opts: NystromOptions,
) -> Result<LowRankFactor> {
    let n = a.dim();
    if q == 0 {
        return Err(Error::InvalidArgument("number of passes q must be at least 1".into()));
    }
    let omega = sketch.materialize(n, k)?;
    let start = a.mvp_count();

    let mut basis = thin_qr(&omega)?.q;
    for _ in 1..q {
        let x = a.apply(&basis);
        basis = thin_qr(&x)?.q;
    }
    let y = a.apply(&basis);

    let mut core = basis.transpose() * &y;
    symmetrize_in_place(&mut core);
    let eig = symmetric_eigen(&core, "projected core matrix QᵀAQ")?;
    let d = eig.values.as_slice();
    let scale = d.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let smallest = d.last().copied().unwrap_or(0.0);
    if smallest < -opts.indefinite_tol * scale {
        return Err(Error::NotPositiveSemidefinite {
            what: "input operator (projected core matrix QᵀAQ)".into(),
            min_eigenvalue: smallest,
            tolerance: -opts.indefinite_tol * scale,
        });
    }
    let inv_sqrt = truncated_sqrt_pinv(d, opts.pinv_tol);

    // B = Y V (D^{1/2})† Vᵀ
    let mut yv = &y * &eig.vectors;
    for (j, &w) in inv_sqrt.iter().enumerate() {
        yv.column_mut(j).scale_mut(w);
    }
    let b = yv * eig.vectors.transpose();

    let (u, sigma) = thin_svd_left(&b)?;
    let lambda = sigma.iter().map(|s| s * s).collect();

    Ok(LowRankFactor {
        u,
        lambda,
        rank_requested: k,
        q,
        seed: sketch.seed(),
        mvps_used: a.mvp_count() - start,
    })
}

fn check_admissible(f: &ScalarFunction) -> Result<()> {
    if !f.is_monotone() {
        return Err(Error::InadmissibleFunction {
            name: f.to_string(),
            reason: "function must be monotonically increasing".into(),
        });
    }
    if f.eval(0.0) != 0.0 {
        return Err(Error::InadmissibleFunction {
            name: f.to_string(),
            reason: "function must satisfy f(0) = 0".into(),
        });
    }
    Ok(())
}

/// funNyström: `f(Â_{q,k}) = Û f(Λ̂) Ûᵀ` using `q k` products with `A`.
pub fn fun_nystrom(
    a: &dyn MatVecOracle,
    f: &ScalarFunction,
    k: usize,
    q: usize,
    sketch: &Sketch,
) -> Result<LowRankFactor> {
    fun_nystrom_with(a, f, k, q, sketch, NystromOptions::default())
}

pub fn fun_nystrom_with(
    a: &dyn MatVecOracle,
    f: &ScalarFunction,
    k: usize,
    q: usize,
    sketch: &Sketch,
    opts: NystromOptions,
) -> Result<LowRankFactor> {
    check_admissible(f)?;
    nystrom_approx_with(a, k, q, sketch, opts)?.map(f)
}

/// Randomized-SVD variant: `Q` spans `range(A^q Ω)`, then
/// `f(Q (QᵀAQ) Qᵀ)`. Costs `(q + 1) k` products with `A`.
pub fn randomized_svd_fun(
    a: &dyn MatVecOracle,
    f: &ScalarFunction,
    k: usize,
    q: usize,
    sketch: &Sketch,
) -> Result<LowRankFactor> {
    check_admissible(f)?;
    let n = a.dim();
    let omega = sketch.materialize(n, k)?;
    let start = a.mvp_count();

    let mut basis = thin_qr(&omega)?.q;
    for _ in 0..q {
        let x = a.apply(&basis);
        basis = thin_qr(&x)?.q;
    }
    let mut core = basis.transpose() * a.apply(&basis);
    symmetrize_in_place(&mut core);
    let eig = symmetric_eigen(&core, "projected core matrix QᵀAQ")?;
    let d = eig.values.as_slice();
    let scale = d.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let smallest = d.last().copied().unwrap_or(0.0);
    if smallest < -NystromOptions::default().indefinite_tol * scale {
        return Err(Error::NotPositiveSemidefinite {
            what: "input operator (projected core matrix QᵀAQ)".into(),
            min_eigenvalue: smallest,
            tolerance: -NystromOptions::default().indefinite_tol * scale,
        });
    }
    let lambda = f.apply_to_spectrum(&d.iter().map(|v| v.max(0.0)).collect::<Vec<_>>())?;

    Ok(LowRankFactor {
        u: &basis * &eig.vectors,
        lambda,
        rank_requested: k,
        q,
        seed: sketch.seed(),
        mvps_used: a.mvp_count() - start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{oracle_from_dense, spectral_decompose, symmetric_eigenvalues, SymmetricMatrix};

    fn random_spsd(n: usize, rank: usize, seed: u64) -> SymmetricMatrix {
        let g = rng::gaussian_matrix(n, rank, seed);
        SymmetricMatrix::new(&g * g.transpose()).unwrap()
    }

    fn orthonormality_defect(u: &DMatrix<f64>) -> f64 {
        let r = u.ncols();
        (u.transpose() * u - DMatrix::<f64>::identity(r, r)).norm()
    }

    #[test]
    fn rank_two_diagonal_is_recovered() {
        let a = SymmetricMatrix::from_diagonal(&[4.0, 1.0, 0.0, 0.0]).unwrap();
        let oracle = oracle_from_dense(&a);
        let fac = nystrom_approx(&oracle, 3, 1, &Sketch::gaussian(1)).unwrap();
        assert!((fac.lambda[0] - 4.0).abs() < 1e-12);
        assert!((fac.lambda[1] - 1.0).abs() < 1e-12);
        assert!(fac.lambda[2].abs() < 1e-12);
        assert!((fac.to_dense() - a.as_matrix()).norm() < 1e-12);
        assert_eq!(fac.mvps_used, 3);
    }

    #[test]
    fn full_rank_sketch_is_exact() {
        let n = 60;
        let a = random_spsd(n, n, 3);
        let oracle = oracle_from_dense(&a);
        let fac = nystrom_approx(&oracle, n, 1, &Sketch::gaussian(4)).unwrap();
        let err = (fac.to_dense() - a.as_matrix()).norm();
        assert!(err <= 1e-8 * a.as_matrix().norm(), "err {err}");
        assert!(orthonormality_defect(&fac.u) <= 1e-8 * (n as f64).sqrt());
    }

    #[test]
    fn mvp_budget_is_q_times_k() {
        let a = random_spsd(50, 50, 8);
        for q in 1..=4 {
            let oracle = oracle_from_dense(&a);
            let fac = fun_nystrom(&oracle, &ScalarFunction::SQRT, 7, q, &Sketch::gaussian(2)).unwrap();
            assert_eq!(fac.mvps_used, q * 7);
            assert_eq!(oracle.mvp_count(), q * 7);
            let oracle = oracle_from_dense(&a);
            let rs = randomized_svd_fun(&oracle, &ScalarFunction::SQRT, 7, q, &Sketch::gaussian(2)).unwrap();
            assert_eq!(rs.mvps_used, (q + 1) * 7);
        }
    }

    #[test]
    fn identity_function_matches_plain_nystrom() {
        let a = random_spsd(40, 40, 5);
        let oracle = oracle_from_dense(&a);
        let plain = nystrom_approx(&oracle, 10, 2, &Sketch::gaussian(6)).unwrap();
        let fun = fun_nystrom(&oracle, &ScalarFunction::IDENTITY, 10, 2, &Sketch::gaussian(6)).unwrap();
        assert_eq!(plain.lambda, fun.lambda);
        assert_eq!(plain.u, fun.u);
    }

    #[test]
    fn log1p_of_identity() {
        let a = SymmetricMatrix::identity(8).unwrap();
        let fac = fun_nystrom(
            &oracle_from_dense(&a),
            &ScalarFunction::LOG1P,
            8,
            1,
            &Sketch::gaussian(0),
        )
        .unwrap();
        for l in &fac.lambda {
            assert!((l - 2f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_are_nonnegative_descending_and_interlace() {
        let a = random_spsd(80, 80, 12);
        let top = symmetric_eigenvalues(a.as_matrix(), "a").unwrap();
        let norm = top[0];
        for seed in 0..10 {
            let fac = nystrom_approx(
                &oracle_from_dense(&a),
                15,
                1 + seed as usize % 3,
                &Sketch::gaussian(seed),
            )
            .unwrap();
            assert!(fac.lambda.windows(2).all(|w| w[0] >= w[1]));
            assert!(fac.lambda.iter().all(|&l| l >= 0.0));
            for (hat, exact) in fac.lambda.iter().zip(&top) {
                assert!(*hat <= exact + 1e-8 * norm);
            }
        }
    }

    #[test]
    fn top_eigenvector_sketch_gives_best_approximation() {
        let n = 50;
        let k = 6;
        let a = random_spsd(n, n, 31);
        let sd = spectral_decompose(&a).unwrap();
        let omega = sd.vectors.columns(0, k).into_owned();
        for f in [
            ScalarFunction::SQRT,
            ScalarFunction::LOG1P,
            ScalarFunction::ratio(0.3).unwrap(),
        ] {
            let fac = fun_nystrom(&oracle_from_dense(&a), &f, k, 1, &Sketch::Explicit(omega.clone())).unwrap();
            let fl: Vec<f64> = sd.values.iter().take(k).map(|&v| f.eval(v)).collect();
            let best = scaled_outer(&omega, &fl);
            assert!((fac.to_dense() - &best).norm() <= 1e-10 * best.norm().max(1.0), "{f}");
        }
    }

    #[test]
    fn psd_ordering_for_operator_monotone_functions() {
        for trial in 0..30u64 {
            let n = 30 + (trial as usize % 3) * 20;
            let a = random_spsd(n, n, 1000 + trial);
            let sd = spectral_decompose(&a).unwrap();
            for f in [
                ScalarFunction::SQRT,
                ScalarFunction::LOG1P,
                ScalarFunction::ratio(0.01).unwrap(),
            ] {
                let fa = sd.map(&f).unwrap();
                let fac = fun_nystrom(
                    &oracle_from_dense(&a),
                    &f,
                    5 + trial as usize % 10,
                    1 + trial as usize % 2,
                    &Sketch::gaussian(trial),
                )
                .unwrap();
                let gap = symmetric_eigenvalues(&(&fa - fac.to_dense()), "gap").unwrap();
                let fnorm = sd.map_values(&f).unwrap()[0];
                assert!(*gap.last().unwrap() >= -1e-8 * fnorm, "{f}: {}", gap.last().unwrap());
            }
        }
    }

    #[test]
    fn nystrom_beats_randomized_svd_on_shared_sketch() {
        let a = random_spsd(70, 70, 77);
        let sd = spectral_decompose(&a).unwrap();
        for f in [ScalarFunction::SQRT, ScalarFunction::LOG1P] {
            let fa = sd.map(&f).unwrap();
            for q in 1..=2 {
                let omega = rng::gaussian_matrix(70, 10, q as u64);
                let nys = fun_nystrom(&oracle_from_dense(&a), &f, 10, q + 1, &Sketch::Explicit(omega.clone())).unwrap();
                let rs = randomized_svd_fun(&oracle_from_dense(&a), &f, 10, q, &Sketch::Explicit(omega)).unwrap();
                let e_nys = (&fa - nys.to_dense()).norm();
                let e_rs = (&fa - rs.to_dense()).norm();
                assert!(e_nys <= e_rs + 1e-8, "{f} q={q}: {e_nys} > {e_rs}");
            }
        }
    }

    #[test]
    fn randomized_svd_exact_on_low_rank_diagonal() {
        let a = SymmetricMatrix::from_diagonal(&[5.0, 2.0, 0.0, 0.0, 0.0]).unwrap();
        let fac = randomized_svd_fun(
            &oracle_from_dense(&a),
            &ScalarFunction::IDENTITY,
            3,
            1,
            &Sketch::gaussian(9),
        )
        .unwrap();
        assert!((fac.to_dense() - a.as_matrix()).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        let a = random_spsd(10, 10, 1);
        let o = oracle_from_dense(&a);
        assert!(nystrom_approx(&o, 0, 1, &Sketch::gaussian(0)).is_err());
        assert!(nystrom_approx(&o, 11, 1, &Sketch::gaussian(0)).is_err());
        assert!(nystrom_approx(&o, 3, 0, &Sketch::gaussian(0)).is_err());
        assert!(nystrom_approx(&o, 3, 1, &Sketch::Explicit(DMatrix::zeros(10, 4))).is_err());
    }

    #[test]
    fn rejects_indefinite_input() {
        let a = SymmetricMatrix::from_diagonal(&[1.0, -1.0, 0.5]).unwrap();
        let err = nystrom_approx(&oracle_from_dense(&a), 3, 1, &Sketch::gaussian(0)).unwrap_err();
        assert!(matches!(err, Error::NotPositiveSemidefinite { .. }));
    }

    #[test]
    fn low_rank_apply_matches_dense() {
        let a = random_spsd(30, 30, 2);
        let fac = fun_nystrom(
            &oracle_from_dense(&a),
            &ScalarFunction::SQRT,
            8,
            1,
            &Sketch::gaussian(3),
        )
        .unwrap();
        let x = rng::gaussian_matrix(30, 4, 5);
        assert!((fac.apply(&x) - fac.to_dense() * &x).norm() < 1e-10);
        assert!((fac.trace() - fac.to_dense().trace()).abs() < 1e-10);
    }
}
