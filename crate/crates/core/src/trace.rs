//! Trace estimators for `tr(f(A))`.
//!
//! Estimators that combine a sketch with random probes derive two
//! independent sub-seeds from the caller's seed: `derive_seed(seed, 0)` for
//! the sketch and `derive_seed(seed, 1)` for the probes. Estimators called
//! with the same seed therefore share their sketch, which pairs duels.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::funcs::ScalarFunction;
use crate::lanczos::{LanczosFunOracle, LanczosParams};
use crate::linalg::{thin_qr, MatVecOracle};
use crate::nystrom::{fun_nystrom, nystrom_approx_with, randomized_svd_fun, LowRankFactor, NystromOptions, Sketch};
use crate::rng::{self, derive_seed};

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEstimate {
    pub value: f64,
    pub estimator: &'static str,
    /// Products with `A`, measured on the oracle counter.
    pub mvps_a: usize,
    /// Lanczos columns times depth, i.e. the nominal cost of the `f(A)`
    /// products, before early-termination savings.
    pub mvps_fa_equivalent: usize,
    pub seed: u64,
    pub params: String,
}

pub fn sketch_seed(seed: u64) -> u64 {
    derive_seed(seed, 0)
}

pub fn probe_seed(seed: u64) -> u64 {
    derive_seed(seed, 1)
}

/// Plug-in estimate `Σ f(λ̂_i)` from a factor whose eigenvalues already
/// carry `f`.
pub fn trace_lowrank(factor: &LowRankFactor) -> TraceEstimate {
    TraceEstimate {
        value: factor.trace(),
        estimator: "lowrank",
        mvps_a: 0,
        mvps_fa_equivalent: 0,
        seed: factor.seed.unwrap_or(0),
        params: format!("r={},q={}", factor.rank_requested, factor.q),
    }
}

/// Girard–Hutchinson estimate `(1/m) tr(Φᵀ B Φ)` with Gaussian `Φ`.
/// `mvps_a` reports the products spent on `b`.
pub fn hutchinson(b: &dyn MatVecOracle, m: usize, seed: u64) -> Result<TraceEstimate> {
    if m == 0 {
        return Err(Error::InvalidArgument("Hutchinson needs at least one probe".into()));
    }
    let phi = rng::gaussian_matrix(b.dim(), m, seed);
    let start = b.mvp_count();
    let bphi = b.apply(&phi);
    let value = phi.component_mul(&bphi).sum() / m as f64;
    Ok(TraceEstimate {
        value,
        estimator: "hutchinson",
        mvps_a: b.mvp_count() - start,
        mvps_fa_equivalent: 0,
        seed,
        params: format!("m={m}"),
    })
}

/// `B − Û Λ Ûᵀ` as an operator.
pub struct ResidualOracle<'a> {
    pub full: &'a dyn MatVecOracle,
    pub low_rank: &'a LowRankFactor,
}

impl MatVecOracle for ResidualOracle<'_> {
    fn dim(&self) -> usize {
        self.full.dim()
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.full.apply(x) - self.low_rank.apply(x)
    }

    fn mvp_count(&self) -> usize {
        self.full.mvp_count()
    }
}

/// funNyström++: `tr(f(Â_{q,r})) + tr_ℓ(f(A) − f(Â_{q,r}))`, with the
/// products with `f(A)` computed by Lanczos. `ℓ = 0` gives the plug-in
/// estimate alone.
pub fn fun_nystrom_pp(
    a: &dyn MatVecOracle,
    f: &ScalarFunction,
    r: usize,
    l: usize,
    q: usize,
    lanczos: LanczosParams,
    seed: u64,
) -> Result<TraceEstimate> {
    let start = a.mvp_count();
    let factor = fun_nystrom(a, f, r, q, &Sketch::gaussian(sketch_seed(seed)))?;
    let mut value = factor.trace();
    if l > 0 {
        let fa = LanczosFunOracle::new(a, *f, lanczos)?;
        let residual = ResidualOracle {
            full: &fa,
            low_rank: &factor,
        };
        value += hutchinson(&residual, l, probe_seed(seed))?.value;
    }
    Ok(TraceEstimate {
        value,
        estimator: "funnystrom++",
        mvps_a: a.mvp_count() - start,
        mvps_fa_equivalent: l * lanczos.depth,
        seed,
        params: format!("r={r},l={l},q={q},depth={}", lanczos.depth),
    })
}

/// Nyström++ applied to `f(A)` through Lanczos products: a rank-`m/2`
/// Nyström approximation `B̂` of `f(A)` plus `tr_{m/2}(f(A) − B̂)`.
pub fn nystrom_pp_baseline(
    a: &dyn MatVecOracle,
    f: &ScalarFunction,
    m: usize,
    lanczos: LanczosParams,
    seed: u64,
) -> Result<TraceEstimate> {
    if m < 2 || !m.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "Nyström++ budget m must be a positive even number, got {m}"
        )));
    }
    let half = m / 2;
    let start = a.mvp_count();
    let fa = LanczosFunOracle::new(a, *f, lanczos)?;
    let approx = nystrom_approx_with(
        &fa,
        half,
        1,
        &Sketch::gaussian(sketch_seed(seed)),
        NystromOptions::approximate_operator(),
    )?;
    let residual = ResidualOracle {
        full: &fa,
        low_rank: &approx,
    };
    let value = approx.trace() + hutchinson(&residual, half, probe_seed(seed))?.value;
    Ok(TraceEstimate {
        value,
        estimator: "nystrom++",
        mvps_a: a.mvp_count() - start,
        mvps_fa_equivalent: m * lanczos.depth,
        seed,
        params: format!("m={m},depth={}", lanczos.depth),
    })
}

/// Hutch++ on `f(A)` through Lanczos products: `m/3` products build a
/// range basis `Q`, `m/3` give `tr(QᵀBQ)`, and `m/3` probe the deflated
/// remainder.
pub fn hutchpp_baseline(
    a: &dyn MatVecOracle,
    f: &ScalarFunction,
    m: usize,
    lanczos: LanczosParams,
    seed: u64,
) -> Result<TraceEstimate> {
    if m < 3 || !m.is_multiple_of(3) {
        return Err(Error::InvalidArgument(format!(
            "Hutch++ budget m must be a positive multiple of 3, got {m}"
        )));
    }
    let third = m / 3;
    let n = a.dim();
    if third > n {
        return Err(Error::InvalidArgument(format!(
            "Hutch++ needs m/3 <= n = {n}, got m={m}"
        )));
    }
    let start = a.mvp_count();
    let fa = LanczosFunOracle::new(a, *f, lanczos)?;
    let s = rng::gaussian_matrix(n, third, sketch_seed(seed));
    let q = thin_qr(&fa.apply(&s))?.q;
    let t1 = q.component_mul(&fa.apply(&q)).sum();
    let g = rng::gaussian_matrix(n, third, probe_seed(seed));
    let g = &g - &q * (q.transpose() * &g);
    let t2 = g.component_mul(&fa.apply(&g)).sum() / third as f64;
    Ok(TraceEstimate {
        value: t1 + t2,
        estimator: "hutch++",
        mvps_a: a.mvp_count() - start,
        mvps_fa_equivalent: m * lanczos.depth,
        seed,
        params: format!("m={m},depth={}", lanczos.depth),
    })
}

/// `Σ log(1 + eig(QᵀAQ))` with `Q` an orthonormal basis of `range(A^q Ω)`,
/// `Ω` of width `k`. Costs `(q + 1) k` products with `A`.
pub fn projected_logdet_baseline(a: &dyn MatVecOracle, k: usize, q: usize, seed: u64) -> Result<TraceEstimate> {
    if q == 0 {
        return Err(Error::InvalidArgument("projected log-det needs q >= 1".into()));
    }
    let start = a.mvp_count();
    let factor = randomized_svd_fun(a, &ScalarFunction::LOG1P, k, q, &Sketch::gaussian(sketch_seed(seed)))?;
    Ok(TraceEstimate {
        value: factor.trace(),
        estimator: "projected-logdet",
        mvps_a: a.mvp_count() - start,
        mvps_fa_equivalent: 0,
        seed,
        params: format!("k={k},q={q}"),
    })
}

/// Draws `μ + Û f(Λ̂) z`, `z ~ N(0, I_r)`. With `f = sqrt` the covariance is
/// the Nyström approximation `Â`.
pub fn sample_gaussian(factor: &LowRankFactor, mu: &DVector<f64>, seed: u64) -> Result<DVector<f64>> {
    if mu.len() != factor.dim() {
        return Err(Error::InvalidArgument(format!(
            "mean has length {} but the factor has dimension {}",
            mu.len(),
            factor.dim()
        )));
    }
    let r = factor.rank();
    if r == 0 {
        return Ok(mu.clone());
    }
    let mut z = rng::gaussian_vector(r, seed);
    for (zi, li) in z.iter_mut().zip(&factor.lambda) {
        *zi *= li;
    }
    Ok(mu + &factor.u * z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{oracle_from_dense, spectral_decompose, DenseOracle, SymmetricMatrix};
    use crate::testmat::{make_synthetic, MatrixSpec};

    #[test]
    fn lowrank_trace_of_identity() {
        let a = SymmetricMatrix::identity(5).unwrap();
        let f = fun_nystrom(
            &oracle_from_dense(&a),
            &ScalarFunction::LOG1P,
            5,
            1,
            &Sketch::gaussian(1),
        )
        .unwrap();
        let est = trace_lowrank(&f);
        assert!((est.value - 5.0 * 2f64.ln()).abs() < 1e-12);
        assert_eq!(est.mvps_a, 0);
    }

    #[test]
    fn lowrank_trace_underestimates() {
        let tm = make_synthetic(&MatrixSpec::alg(400, 100.0, 2.0)).unwrap();
        let exact: f64 = tm.spectrum.as_ref().unwrap().values.iter().map(|v| v.ln_1p()).sum();
        let o = oracle_from_dense(&tm.matrix);
        for seed in 0..5 {
            let f = fun_nystrom(&o, &ScalarFunction::LOG1P, 40, 1, &Sketch::gaussian(seed)).unwrap();
            assert!(trace_lowrank(&f).value <= exact * (1.0 + 1e-8));
        }
    }

    #[test]
    fn hutchinson_zero_and_count() {
        let o = DenseOracle::from_matrix(DMatrix::zeros(6, 6));
        let est = hutchinson(&o, 4, 3).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.mvps_a, 4);
        assert!(hutchinson(&o, 0, 3).is_err());
    }

    #[test]
    fn hutchinson_identity_unbiased() {
        let n = 20;
        let o = DenseOracle::from_matrix(DMatrix::identity(n, n));
        let reps = 500;
        let mean: f64 = (0..reps).map(|s| hutchinson(&o, 10, s).unwrap().value).sum::<f64>() / reps as f64;
        let tol = 3.0 * (2.0 * n as f64 / (10.0 * reps as f64)).sqrt() * 2f64.sqrt();
        assert!((mean - n as f64).abs() < tol, "{mean}");
    }

    #[test]
    fn fun_nystrom_pp_full_rank_identity() {
        let tm = make_synthetic(&MatrixSpec::exp(30, 1.0, 0.8)).unwrap();
        let o = oracle_from_dense(&tm.matrix);
        let est = fun_nystrom_pp(
            &o,
            &ScalarFunction::IDENTITY,
            30,
            5,
            1,
            LanczosParams::new(3).unwrap(),
            9,
        )
        .unwrap();
        let tr = tm.matrix.as_matrix().trace();
        assert!((est.value - tr).abs() <= 1e-8 * tr);
        assert_eq!(est.mvps_a, 30 + 5 * 3);
    }

    #[test]
    fn fun_nystrom_pp_zero_probes_is_plug_in() {
        let tm = make_synthetic(&MatrixSpec::alg(100, 1.0, 2.0)).unwrap();
        let o = oracle_from_dense(&tm.matrix);
        let f = ScalarFunction::LOG1P;
        let est = fun_nystrom_pp(&o, &f, 10, 0, 1, LanczosParams::new(5).unwrap(), 4).unwrap();
        let plug = fun_nystrom(&o, &f, 10, 1, &Sketch::gaussian(sketch_seed(4))).unwrap();
        assert_eq!(est.value, plug.trace());
    }

    #[test]
    fn nystrom_pp_identity_near_exact() {
        let n = 20;
        let tm = make_synthetic(&MatrixSpec::exp(n, 1.0, 0.7)).unwrap();
        let o = oracle_from_dense(&tm.matrix);
        let est = nystrom_pp_baseline(&o, &ScalarFunction::IDENTITY, 2 * n, LanczosParams::new(2).unwrap(), 1).unwrap();
        let tr = tm.matrix.as_matrix().trace();
        assert!((est.value - tr).abs() <= 1e-8 * tr, "{} vs {tr}", est.value);
        assert!(nystrom_pp_baseline(&o, &ScalarFunction::IDENTITY, 5, LanczosParams::new(2).unwrap(), 1).is_err());
    }

    #[test]
    fn hutchpp_full_basis_exact() {
        let n = 12;
        let tm = make_synthetic(&MatrixSpec::exp(n, 1.0, 0.7)).unwrap();
        let o = oracle_from_dense(&tm.matrix);
        let est = hutchpp_baseline(&o, &ScalarFunction::IDENTITY, 3 * n, LanczosParams::new(2).unwrap(), 1).unwrap();
        let tr = tm.matrix.as_matrix().trace();
        assert!((est.value - tr).abs() <= 1e-8 * tr);
    }

    #[test]
    fn projected_logdet_cases() {
        let zero = DenseOracle::from_matrix(DMatrix::zeros(8, 8));
        assert_eq!(projected_logdet_baseline(&zero, 3, 1, 0).unwrap().value, 0.0);
        let tm = make_synthetic(&MatrixSpec::alg(25, 3.0, 1.0)).unwrap();
        let o = oracle_from_dense(&tm.matrix);
        let est = projected_logdet_baseline(&o, 25, 1, 2).unwrap();
        let exact: f64 = spectral_decompose(&tm.matrix)
            .unwrap()
            .values
            .iter()
            .map(|v| v.ln_1p())
            .sum();
        assert!((est.value - exact).abs() <= 1e-8 * exact);
        assert_eq!(est.mvps_a, 50);
    }

    #[test]
    fn sampling_covariance_and_mean() {
        let n = 4;
        let a = SymmetricMatrix::identity(n).unwrap();
        let f = fun_nystrom(
            &oracle_from_dense(&a),
            &ScalarFunction::SQRT,
            n,
            1,
            &Sketch::gaussian(0),
        )
        .unwrap();
        let mu = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let count = 10_000;
        let mut mean = DVector::zeros(n);
        let mut cov = DMatrix::zeros(n, n);
        for s in 0..count {
            let x = sample_gaussian(&f, &mu, s).unwrap();
            let d = &x - &mu;
            mean += &x;
            cov += &d * d.transpose();
        }
        mean /= count as f64;
        cov /= count as f64;
        assert!((cov - DMatrix::identity(n, n)).amax() < 0.1);
        assert!((mean - &mu).amax() < 4.0 / 100.0);
    }

    #[test]
    fn sampling_with_zero_rank_returns_mean() {
        let a = SymmetricMatrix::new(DMatrix::zeros(3, 3)).unwrap();
        let mut f = fun_nystrom(
            &oracle_from_dense(&a),
            &ScalarFunction::SQRT,
            2,
            1,
            &Sketch::gaussian(0),
        )
        .unwrap();
        f.u = DMatrix::zeros(3, 0);
        f.lambda.clear();
        let mu = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(sample_gaussian(&f, &mu, 1).unwrap(), mu);
    }
}
