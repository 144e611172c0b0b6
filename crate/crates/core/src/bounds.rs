//! Closed-form right-hand sides of the funNyström error bounds, and the
//! sketch-dependent quantities entering the per-sketch (structural) bounds.
//!
//! All bounds are stated for a sketch of width `k + p` and the tail
//! `Λ₂ = diag(λ_{k+1}, …, λ_n)`. Powers of `γ = λ_{k+1}/λ_k` follow
//! `γ^0 = 1` and `0^e = 0` for `e > 0`. Bounds on squared errors return the
//! squared value; the caller takes square roots.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::funcs::{FunctionKind, ScalarFunction, SPECTRUM_NOISE_TOL};
use crate::linalg::{pinv, schatten_from_singular_values, singular_values, SpectralDecomposition};

const E: f64 = std::f64::consts::E;

/// Spectrum and sketch split `(k, p, q)` for evaluating a bound.
#[derive(Clone, Debug)]
pub struct BoundInput {
    lambda: Vec<f64>,
    k: usize,
    p: usize,
    q: usize,
    f: ScalarFunction,
    gamma: f64,
}

impl BoundInput {
    /// `lambda` is the full spectrum of `A` in any order. Tiny negative
    /// values (eigensolver noise) are clamped to zero.
    pub fn new(lambda: &[f64], k: usize, p: usize, q: usize, f: ScalarFunction) -> Result<Self> {
        let n = lambda.len();
        if k == 0 || k + p > n {
            return Err(Error::InvalidArgument(format!(
                "bound needs 1 <= k and k + p <= n, got k={k}, p={p}, n={n}"
            )));
        }
        if q == 0 {
            return Err(Error::InvalidArgument("bound needs q >= 1".into()));
        }
        let mut sorted: Vec<f64> = lambda.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let floor = -SPECTRUM_NOISE_TOL * sorted[0].abs();
        if sorted.iter().any(|v| !v.is_finite() || *v < floor) {
            return Err(Error::NotPositiveSemidefinite {
                what: "spectrum passed to a bound".into(),
                min_eigenvalue: sorted[n - 1],
                tolerance: floor,
            });
        }
        for v in &mut sorted {
            *v = v.max(0.0);
        }
        let lambda_k = sorted[k - 1];
        if lambda_k <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "bounds assume lambda_k > 0; lambda_{k} = {lambda_k} (the approximation is then exact)"
            )));
        }
        let gamma = sorted.get(k).copied().unwrap_or(0.0) / lambda_k;
        Ok(Self {
            lambda: sorted,
            k,
            p,
            q,
            f,
            gamma,
        })
    }

    /// Same spectrum and function with another split.
    pub fn with_split(&self, k: usize, p: usize, q: usize) -> Result<Self> {
        Self::new(&self.lambda, k, p, q, self.f)
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn f(&self) -> ScalarFunction {
        self.f
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda_k(&self) -> f64 {
        self.lambda[self.k - 1]
    }

    /// `λ_{k+1}, …, λ_n`.
    pub fn tail(&self) -> &[f64] {
        &self.lambda[self.k..]
    }

    pub fn gamma_pow(&self, exponent: f64) -> f64 {
        gamma_pow(self.gamma, exponent)
    }

    fn f_tail(&self) -> Vec<f64> {
        self.tail().iter().map(|&v| self.f.eval(v)).collect()
    }

    /// `f(λ_k) / λ_k`.
    fn slope_k(&self) -> f64 {
        self.f.eval(self.lambda_k()) / self.lambda_k()
    }

    fn require(&self, ok: bool, what: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "{what} (got k={}, p={}, q={})",
                self.k, self.p, self.q
            )))
        }
    }
}

pub fn gamma_pow(gamma: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        1.0
    } else if gamma == 0.0 {
        0.0
    } else {
        gamma.powf(exponent)
    }
}

fn frob(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn nuclear(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn op(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_deviation_params(u: f64, t: f64) -> Result<()> {
    if !(u >= 1.0 && t >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "deviation parameters need u, t >= 1, got u={u}, t={t}"
        )));
    }
    Ok(())
}

/// Failure probability `2 t^{-p} + e^{-u²/2}` of the deviation bounds.
pub fn deviation_failure_probability(p: usize, u: f64, t: f64) -> f64 {
    2.0 * t.powf(-(p as f64)) + (-u * u / 2.0).exp()
}

/// Bound on `E‖f(A) − f(Â)‖_F²`; needs `k, p, q ≥ 2`.
pub fn frob_expectation_bound(b: &BoundInput) -> Result<f64> {
    b.require(
        b.k >= 2 && b.p >= 2 && b.q >= 2,
        "Frobenius expectation bound needs k, p, q >= 2",
    )?;
    let ft = frob(&b.f_tail());
    let factor = 1.0 + 5.0 * b.gamma_pow(2.0 * (b.q as f64 - 1.5)) * b.k as f64 / (b.p as f64 - 1.0);
    Ok(factor * ft * ft)
}

/// `(bound, failure probability)` for `‖f(A) − f(Â)‖_F`; needs `k, p > 4`,
/// `q ≥ 2`, `u, t ≥ 1`.
pub fn frob_tail_probability_bound(b: &BoundInput, u: f64, t: f64) -> Result<(f64, f64)> {
    b.require(
        b.k > 4 && b.p > 4 && b.q >= 2,
        "Frobenius deviation bound needs k, p > 4 and q >= 2",
    )?;
    check_deviation_params(u, t)?;
    let ftail = b.f_tail();
    let (k, p) = (b.k as f64, b.p as f64);
    let g = b.gamma_pow(b.q as f64 - 1.5);
    let value = (1.0 + g * (15.0 * k / (p + 1.0)).sqrt() * t) * frob(&ftail)
        + g * (E * (5.0 * (k + p)).sqrt() / (p + 1.0)) * u * t * op(&ftail);
    Ok((value, deviation_failure_probability(b.p, u, t)))
}

/// Bound on `E‖f(A) − f(Â)‖_*`; needs `k, p ≥ 2`, `q ≥ 1`.
pub fn nuclear_expectation_bound(b: &BoundInput) -> Result<f64> {
    b.require(b.k >= 2 && b.p >= 2, "nuclear expectation bound needs k, p >= 2")?;
    let factor = 1.0 + b.gamma_pow(2.0 * (b.q as f64 - 1.0)) * b.k as f64 / (b.p as f64 - 1.0);
    Ok(factor * nuclear(&b.f_tail()))
}

/// `(bound, failure probability)` for `‖f(A) − f(Â)‖_*`; needs `k, p > 4`,
/// `u, t ≥ 1`.
pub fn nuclear_probability_bound(b: &BoundInput, u: f64, t: f64) -> Result<(f64, f64)> {
    b.require(b.k > 4 && b.p > 4, "nuclear deviation bound needs k, p > 4")?;
    check_deviation_params(u, t)?;
    let ftail = b.f_tail();
    let (fn_, f2) = (nuclear(&ftail), op(&ftail));
    let (k, p) = (b.k as f64, b.p as f64);
    let g = b.gamma_pow(2.0 * (b.q as f64 - 1.0));
    let value = (1.0 + g * 3.0 * k / (p + 1.0)) * fn_
        + g * (E * E * (k + p) / (p + 1.0).powi(2) * t * t * u * u * f2
            + 2.0 * E * (3.0 * k * (k + p)).sqrt() / (p + 1.0).powf(1.5) * t * u * (fn_ * f2).sqrt());
    Ok((value, deviation_failure_probability(b.p, u, t)))
}

/// Bound on `E‖f(A) − f(Â)‖₂`; needs `k, p ≥ 2`, `q ≥ 1`. The scalar
/// multiples of `Λ₂` are applied before `f`.
pub fn operator_expectation_bound(b: &BoundInput) -> Result<f64> {
    b.require(b.k >= 2 && b.p >= 2, "operator expectation bound needs k, p >= 2")?;
    let (k, p) = (b.k as f64, b.p as f64);
    let g = b.gamma_pow(2.0 * (b.q as f64 - 1.0));
    let c1 = g * 2.0 * k / (p - 1.0);
    let c2 = g * 2.0 * E * E * (k + p) / (p * p - 1.0);
    let scaled = |c: f64| -> Vec<f64> { b.tail().iter().map(|&v| b.f.eval(c * v)).collect() };
    Ok(op(&b.f_tail()) + op(&scaled(c1)) + nuclear(&scaled(c2)))
}

/// Square-root specific bounds: `frobenius_sq` bounds the squared
/// Frobenius error, the others bound the nuclear and operator errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqrtBounds {
    pub frobenius_sq: f64,
    pub nuclear: f64,
    pub operator: f64,
}

fn require_sqrt(b: &BoundInput) -> Result<()> {
    if b.f.kind() != FunctionKind::Sqrt {
        return Err(Error::InadmissibleFunction {
            name: b.f.to_string(),
            reason: "square-root bounds apply to f = sqrt only".into(),
        });
    }
    Ok(())
}

/// Expectation forms of the square-root bounds; needs `k, p ≥ 2`, `q ≥ 1`.
pub fn sqrt_improved_bounds(b: &BoundInput) -> Result<SqrtBounds> {
    require_sqrt(b)?;
    b.require(b.k >= 2 && b.p >= 2, "square-root expectation bounds need k, p >= 2")?;
    let (k, p, q) = (b.k as f64, b.p as f64, b.q as f64);
    let ratio = k / (p - 1.0);
    let tail = b.tail();
    let tr: f64 = tail.iter().sum();
    let sqrt_sum: f64 = tail.iter().map(|v| v.sqrt()).sum();
    let sqrt_top = op(tail).sqrt();
    Ok(SqrtBounds {
        frobenius_sq: (1.0 + b.gamma_pow(2.0 * (q - 1.0)) * ratio) * tr,
        nuclear: (1.0 + b.gamma_pow(2.0 * q - 1.5) * ratio) * sqrt_sum,
        operator: sqrt_top + b.gamma_pow(q - 1.0) * (ratio.sqrt() * sqrt_top + E * (k + p).sqrt() / p * tr.sqrt()),
    })
}

/// Sketch-dependent quantities with `Ω₁ = U₁ᵀΩ`, `Ω₂ = U₂ᵀΩ` and
/// `G = Ω₂ Ω₁†`.
#[derive(Clone, Debug)]
pub struct StructuralDiagnostics {
    pub k: usize,
    /// `λ_{k+1}, …, λ_n`.
    pub tail: Vec<f64>,
    /// `G`, of size `(n − k) × k`.
    pub g: DMatrix<f64>,
    /// `‖Λ₂ G‖_F`.
    pub lam2_g_frob: f64,
    /// `‖Λ₂^{1/2} G‖_F`.
    pub sqrt_lam2_g_frob: f64,
    /// `‖Λ₂^{1/2} G‖₂`.
    pub sqrt_lam2_g_op: f64,
    /// `‖Λ₂^{1/4} G‖_F`.
    pub quarter_lam2_g_frob: f64,
    pub sigma_min_omega1: f64,
}

impl StructuralDiagnostics {
    /// `Λ₂^power G`.
    pub fn scaled_g(&self, power: f64) -> DMatrix<f64> {
        let mut m = self.g.clone();
        for (i, &v) in self.tail.iter().enumerate() {
            let w = if power == 0.0 { 1.0 } else { v.max(0.0).powf(power) };
            m.row_mut(i).scale_mut(w);
        }
        m
    }
}

/// Computes the quantities of [`StructuralDiagnostics`] for the sketch
/// `omega` (`n × (k + p)`) against the eigenvectors in `spectrum`.
pub fn structural_diagnostics(
    spectrum: &SpectralDecomposition,
    omega: &DMatrix<f64>,
    k: usize,
) -> Result<StructuralDiagnostics> {
    let n = spectrum.dim();
    if spectrum.len() != n {
        return Err(Error::InvalidArgument(
            "structural diagnostics need a full eigenbasis".into(),
        ));
    }
    if omega.nrows() != n || k == 0 || k > omega.ncols() || k > n {
        return Err(Error::InvalidArgument(format!(
            "sketch is {}x{}, incompatible with n={n}, k={k}",
            omega.nrows(),
            omega.ncols()
        )));
    }
    let u1 = spectrum.vectors.columns(0, k);
    let u2 = spectrum.vectors.columns(k, n - k);
    let omega1 = u1.transpose() * omega;
    let omega2 = u2.transpose() * omega;
    let sv = singular_values(&omega1)?;
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let sigma_min = sv.last().copied().unwrap_or(0.0);
    if sigma_min.is_nan() || sigma_min <= 1e-12 * sigma_max {
        return Err(Error::DegenerateSketch(format!(
            "Omega_1 is numerically rank deficient: sigma_min = {sigma_min:e}, sigma_max = {sigma_max:e}"
        )));
    }
    let g = &omega2 * pinv(&omega1, 1e-14)?;
    let tail: Vec<f64> = spectrum.values.iter().skip(k).map(|v| v.max(0.0)).collect();
    let mut d = StructuralDiagnostics {
        k,
        tail,
        g,
        lam2_g_frob: 0.0,
        sqrt_lam2_g_frob: 0.0,
        sqrt_lam2_g_op: 0.0,
        quarter_lam2_g_frob: 0.0,
        sigma_min_omega1: sigma_min,
    };
    d.lam2_g_frob = d.scaled_g(1.0).norm();
    let half = d.scaled_g(0.5);
    d.sqrt_lam2_g_frob = half.norm();
    d.sqrt_lam2_g_op = op(&singular_values(&half)?);
    d.quarter_lam2_g_frob = d.scaled_g(0.25).norm();
    Ok(d)
}

fn check_diagnostics(b: &BoundInput, d: &StructuralDiagnostics) -> Result<()> {
    if d.k != b.k || d.tail.len() != b.tail().len() {
        return Err(Error::InvalidArgument(format!(
            "diagnostics computed for k={} do not match the bound input k={}",
            d.k, b.k
        )));
    }
    Ok(())
}

/// Per-sketch bound on `‖f(A) − f(Â)‖_F²`; needs `q ≥ 2`.
pub fn frob_structural_bound(b: &BoundInput, d: &StructuralDiagnostics) -> Result<f64> {
    check_diagnostics(b, d)?;
    b.require(b.q >= 2, "Frobenius structural bound needs q >= 2")?;
    let ft = frob(&b.f_tail());
    let slope = b.slope_k();
    Ok(ft * ft + 5.0 * b.gamma_pow(2.0 * (b.q as f64 - 1.5)) * slope * slope * d.lam2_g_frob.powi(2))
}

/// Per-sketch bound on `‖f(A) − f(Â)‖_*`.
pub fn nuclear_structural_bound(b: &BoundInput, d: &StructuralDiagnostics) -> Result<f64> {
    check_diagnostics(b, d)?;
    Ok(nuclear(&b.f_tail()) + b.gamma_pow(2.0 * (b.q as f64 - 1.0)) * b.slope_k() * d.sqrt_lam2_g_frob.powi(2))
}

/// Per-sketch bound on `‖f(A) − f(Â)‖₂`, using `‖Λ₂^{1/2} G‖₂`.
pub fn operator_structural_bound(b: &BoundInput, d: &StructuralDiagnostics) -> Result<f64> {
    check_diagnostics(b, d)?;
    let arg = b.gamma_pow(2.0 * (b.q as f64 - 1.0)) * d.sqrt_lam2_g_op.powi(2);
    Ok(op(&b.f_tail()) + b.f.eval(arg))
}

/// Per-sketch bound on the Schatten-`s` error `‖f(A) − f(Â)‖_(s)`
/// (`s = ∞` for the operator norm). Needs a finite `f'₊(0)`.
pub fn schatten_structural_bound(b: &BoundInput, s: f64, d: &StructuralDiagnostics) -> Result<f64> {
    check_diagnostics(b, d)?;
    let slope0 = b.f.right_derivative_at_zero();
    if !slope0.is_finite() {
        return Err(Error::InadmissibleFunction {
            name: b.f.to_string(),
            reason: "the Schatten bound needs a finite right derivative at 0 (it cannot be used for sqrt)".into(),
        });
    }
    if s.is_nan() || s < 1.0 {
        return Err(Error::InvalidArgument(format!("Schatten index must be >= 1, got {s}")));
    }
    let half_term = schatten_from_singular_values(&singular_values(&d.scaled_g(0.5))?, 2.0 * s).powi(2);
    let branch = if b.q == 1 {
        half_term
    } else {
        let full_term = schatten_from_singular_values(&singular_values(&d.scaled_g(1.0))?, s);
        (b.gamma_pow(2.0 * (b.q as f64 - 1.0)) * half_term).min(b.gamma_pow(b.q as f64 - 1.5) * full_term)
    };
    Ok(schatten_from_singular_values(&b.f_tail(), s) + slope0 * branch)
}

/// Per-sketch square-root bounds (squared Frobenius, nuclear, operator).
pub fn sqrt_structural_bounds(b: &BoundInput, d: &StructuralDiagnostics) -> Result<SqrtBounds> {
    require_sqrt(b)?;
    check_diagnostics(b, d)?;
    let q = b.q as f64;
    let tail = b.tail();
    Ok(SqrtBounds {
        frobenius_sq: tail.iter().sum::<f64>() + b.gamma_pow(2.0 * (q - 1.0)) * d.sqrt_lam2_g_frob.powi(2),
        nuclear: tail.iter().map(|v| v.sqrt()).sum::<f64>()
            + b.gamma_pow(2.0 * q - 1.5) * d.quarter_lam2_g_frob.powi(2),
        operator: op(tail).sqrt() + b.gamma_pow(q - 1.0) * d.sqrt_lam2_g_op,
    })
}

/// A split `r = k + p` and the bound value it attains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BestSplit {
    pub k: usize,
    pub p: usize,
    pub value: f64,
}

/// Minimizes `eval` over all splits `r = k + p` for which the bound is
/// defined. Splits whose evaluation fails (preconditions, `λ_k = 0`) are
/// skipped; `None` if no split is admissible.
pub fn best_split(
    lambda: &[f64],
    r: usize,
    q: usize,
    f: ScalarFunction,
    eval: impl Fn(&BoundInput) -> Result<f64>,
) -> Option<BestSplit> {
    (1..=r)
        .filter_map(|k| {
            let input = BoundInput::new(lambda, k, r - k, q, f).ok()?;
            let value = eval(&input).ok()?;
            value.is_finite().then_some(BestSplit { k, p: r - k, value })
        })
        .min_by(|a, b| a.value.total_cmp(&b.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn with_tail(head: &[f64], tail: &[f64]) -> Vec<f64> {
        head.iter().chain(tail).copied().collect()
    }

    #[test]
    fn gamma_convention() {
        assert_eq!(gamma_pow(0.0, 0.0), 1.0);
        assert_eq!(gamma_pow(0.0, 0.5), 0.0);
        assert_eq!(gamma_pow(0.25, 0.5), 0.5);
    }

    #[test]
    fn frob_expectation_examples() {
        // Spectrum (1, 1, γ, 0...) with k = 2 gives ‖f(Λ₂)‖_F = γ for f = id;
        // scale so that the tail equals one.
        let gamma: f64 = 0.3;
        let lambda = with_tail(&[1.0 / gamma, 1.0 / gamma], &[1.0, 0.0, 0.0]);
        let b = BoundInput::new(&lambda, 2, 2, 2, ScalarFunction::IDENTITY).unwrap();
        assert!((b.gamma() - gamma).abs() < 1e-15);
        let rhs = frob_expectation_bound(&b).unwrap();
        assert!((rhs - (1.0 + 10.0 * gamma)).abs() < 1e-12);

        let zero_tail = BoundInput::new(&[3.0, 2.0, 1.0, 0.0, 0.0, 0.0], 3, 2, 2, ScalarFunction::SQRT).unwrap();
        assert_eq!(frob_expectation_bound(&zero_tail).unwrap(), 0.0);
        assert!(frob_expectation_bound(&b.with_split(2, 2, 1).unwrap()).is_err());
    }

    #[test]
    fn frob_deviation_zero_gamma_and_probability() {
        let mut lambda = vec![1.0; 10];
        lambda.extend(vec![0.0; 10]);
        let b = BoundInput::new(&lambda, 10, 10, 2, ScalarFunction::LOG1P).unwrap();
        let (v, prob) = frob_tail_probability_bound(&b, (20f64).sqrt(), E).unwrap();
        assert_eq!(v, 0.0);
        assert!(prob <= 3.0 * (-10f64).exp());
        assert!(frob_tail_probability_bound(&b, 0.5, 2.0).is_err());
    }

    #[test]
    fn nuclear_q1_factor_ignores_gamma() {
        for gamma in [0.1f64, 0.9] {
            let lambda: Vec<f64> = (0..20).map(|i| gamma.powi(i)).collect();
            let b = BoundInput::new(&lambda, 4, 3, 1, ScalarFunction::IDENTITY).unwrap();
            let tail: f64 = lambda[4..].iter().sum();
            assert!((nuclear_expectation_bound(&b).unwrap() - (1.0 + 4.0 / 2.0) * tail).abs() < 1e-12);
        }
    }

    #[test]
    fn nuclear_deviation_scaling_in_t_u() {
        let lambda: Vec<f64> = (1..=40).map(|i| 1.0 / (i as f64).powi(2)).collect();
        let b = BoundInput::new(&lambda, 5, 6, 2, ScalarFunction::LOG1P).unwrap();
        let (v1, _) = nuclear_probability_bound(&b, 1.0, 1.0).unwrap();
        let (v2, _) = nuclear_probability_bound(&b, 2.0, 2.0).unwrap();
        let base = nuclear(&b.f_tail());
        let g = b.gamma_pow(2.0);
        // Terms scale with (tu)^2 and tu respectively; the first term is fixed.
        let fixed = (1.0 + g * 3.0 * 5.0 / 7.0) * base;
        let (a, c) = (v1 - fixed, v2 - fixed);
        assert!(c > a && c < 16.0 * a + 1e-12);
    }

    #[test]
    fn operator_identity_distributes() {
        let lambda: Vec<f64> = (0..15).map(|i| 0.7f64.powi(i)).collect();
        let (k, p, q) = (3usize, 4usize, 2usize);
        let b = BoundInput::new(&lambda, k, p, q, ScalarFunction::IDENTITY).unwrap();
        let g = 0.7f64.powi(2);
        let (kf, pf) = (k as f64, p as f64);
        let tail_sum: f64 = lambda[k..].iter().sum();
        let want =
            lambda[k] * (1.0 + g * 2.0 * kf / (pf - 1.0)) + g * 2.0 * E * E * (kf + pf) / (pf * pf - 1.0) * tail_sum;
        assert!((operator_expectation_bound(&b).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn sqrt_bounds_vanish_on_exact_rank() {
        let lambda = [4.0, 2.0, 1.0, 0.0, 0.0, 0.0];
        let b = BoundInput::new(&lambda, 3, 2, 1, ScalarFunction::SQRT).unwrap();
        let s = sqrt_improved_bounds(&b).unwrap();
        assert_eq!(
            s,
            SqrtBounds {
                frobenius_sq: 0.0,
                nuclear: 0.0,
                operator: 0.0
            }
        );
        let log = BoundInput::new(&lambda, 3, 2, 1, ScalarFunction::LOG1P).unwrap();
        assert!(sqrt_improved_bounds(&log).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(BoundInput::new(&[1.0, 0.0], 2, 0, 1, ScalarFunction::SQRT).is_err());
        assert!(BoundInput::new(&[1.0, 0.5], 1, 2, 1, ScalarFunction::SQRT).is_err());
        assert!(BoundInput::new(&[1.0, -0.5], 1, 1, 1, ScalarFunction::SQRT).is_err());
        assert!(BoundInput::new(&[1.0, 0.5], 1, 1, 0, ScalarFunction::SQRT).is_err());
    }

    fn diag_spectrum(values: &[f64]) -> SpectralDecomposition {
        let n = values.len();
        SpectralDecomposition::new(DMatrix::identity(n, n), DVector::from_column_slice(values)).unwrap()
    }

    #[test]
    fn diagnostics_zero_omega2_and_identity_omega1() {
        let sd = diag_spectrum(&[3.0, 2.0, 1.0, 0.5]);
        let mut omega = DMatrix::zeros(4, 2);
        omega[(0, 0)] = 1.0;
        omega[(1, 1)] = 1.0;
        let d = structural_diagnostics(&sd, &omega, 2).unwrap();
        assert_eq!(d.lam2_g_frob, 0.0);
        assert_eq!(d.sqrt_lam2_g_op, 0.0);

        omega[(2, 0)] = 2.0;
        omega[(3, 1)] = -1.0;
        let d = structural_diagnostics(&sd, &omega, 2).unwrap();
        assert!((d.g.clone() - omega.rows(2, 2)).norm() < 1e-15);
        let want = ((1.0f64 * 2.0).powi(2) + (0.5f64 * 1.0).powi(2)).sqrt();
        assert!((d.lam2_g_frob - want).abs() < 1e-14);
    }

    #[test]
    fn diagnostics_reject_rank_deficient_omega1() {
        let sd = diag_spectrum(&[3.0, 2.0, 1.0, 0.5]);
        let mut omega = DMatrix::zeros(4, 3);
        omega[(0, 0)] = 1.0;
        omega[(2, 1)] = 1.0;
        assert!(matches!(
            structural_diagnostics(&sd, &omega, 2),
            Err(Error::DegenerateSketch(_))
        ));
    }

    #[test]
    fn schatten_identity_q1_and_sqrt_refusal() {
        let sd = diag_spectrum(&[3.0, 2.0, 1.0, 0.5, 0.25]);
        let omega = crate::rng::gaussian_matrix(5, 3, 1);
        let d = structural_diagnostics(&sd, &omega, 2).unwrap();
        let b = BoundInput::new(sd.values.as_slice(), 2, 1, 1, ScalarFunction::IDENTITY).unwrap();
        // s = 1 reduces to the nuclear structural bound with f'(0) = 1.
        let got = schatten_structural_bound(&b, 1.0, &d).unwrap();
        let want = nuclear_structural_bound(&b, &d).unwrap();
        assert!((got - want).abs() < 1e-12);
        // s = 2 uses the Schatten-4 norm of Λ₂^{1/2} G.
        let got = schatten_structural_bound(&b, 2.0, &d).unwrap();
        let s4 = singular_values(&d.scaled_g(0.5))
            .unwrap()
            .iter()
            .map(|v| v.powi(4))
            .sum::<f64>()
            .sqrt();
        let want = frob(b.tail()) + s4;
        assert!((got - want).abs() < 1e-12);
        assert!(got <= frob(b.tail()) + d.sqrt_lam2_g_frob.powi(2) + 1e-12);
        let bs = BoundInput::new(sd.values.as_slice(), 2, 1, 1, ScalarFunction::SQRT).unwrap();
        assert!(matches!(
            schatten_structural_bound(&bs, 2.0, &d),
            Err(Error::InadmissibleFunction { .. })
        ));
    }

    #[test]
    fn best_split_skips_invalid() {
        let lambda: Vec<f64> = (1..=50).map(|i| 1.0 / (i as f64).powi(2)).collect();
        let best = best_split(&lambda, 12, 1, ScalarFunction::LOG1P, nuclear_expectation_bound).unwrap();
        assert!(best.k >= 2 && best.p >= 2 && best.k + best.p == 12);
        for k in 2..=10 {
            let b = BoundInput::new(&lambda, k, 12 - k, 1, ScalarFunction::LOG1P).unwrap();
            assert!(nuclear_expectation_bound(&b).unwrap() >= best.value);
        }
        assert!(best_split(&lambda, 3, 1, ScalarFunction::LOG1P, nuclear_expectation_bound).is_none());
    }
}
