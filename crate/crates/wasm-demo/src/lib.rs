//! Browser bindings: each export takes plain arguments and returns a JSON
//! string, or throws a string on invalid input.

use funnystrom::bounds::{best_split, nuclear_expectation_bound, sqrt_improved_bounds};
use funnystrom::funcs::FunctionKind;
use funnystrom::lanczos::LanczosParams;
use funnystrom::linalg::{oracle_from_dense, symmetric_eigenvalues};
use funnystrom::nystrom::{fun_nystrom, Sketch};
use funnystrom::testmat::{generate, MatrixSpec};
use funnystrom::trace::fun_nystrom_pp;
use funnystrom::{Error, Norm, ScalarFunction, SymmetricMatrix};
use nalgebra::DMatrix;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest dimension accepted by the demo; everything is dense.
pub const MAX_DIM: usize = 400;

#[derive(Debug, Serialize)]
pub struct Approximation {
    pub n: usize,
    pub rank: usize,
    pub mvps: usize,
    /// Leading eigenvalues of `f(A)`.
    pub exact: Vec<f64>,
    /// Eigenvalues of `f(Â)`.
    pub approx: Vec<f64>,
    pub rel_frobenius: f64,
    pub rel_nuclear: f64,
    pub rel_operator: f64,
}

#[derive(Debug, Serialize)]
pub struct TraceResult {
    pub exact: f64,
    pub plug_in: f64,
    pub estimate: f64,
    pub rel_error_plug_in: f64,
    pub rel_error: f64,
    pub mvps: usize,
}

#[derive(Debug, Serialize)]
pub struct CurvePoint {
    pub rank: usize,
    pub rel_error: f64,
    /// Minimized expectation bound on the nuclear error, relative.
    pub rel_bound: Option<f64>,
}

struct Problem {
    a: SymmetricMatrix,
    f: ScalarFunction,
    f_of_a: DMatrix<f64>,
    lambda: Vec<f64>,
    f_lambda: Vec<f64>,
}

fn problem(spec: &str, f: &str) -> Result<Problem, Error> {
    let spec: MatrixSpec = spec.parse()?;
    if spec.n > MAX_DIM {
        return Err(Error::InvalidArgument(format!("the demo is limited to n <= {MAX_DIM}")));
    }
    let f: ScalarFunction = f.parse()?;
    let tm = generate(&spec)?;
    let sd = tm.decomposition()?;
    let f_of_a = sd.map(&f)?;
    let lambda: Vec<f64> = sd.values.iter().copied().collect();
    let f_lambda = f.apply_to_spectrum(&lambda)?;
    Ok(Problem {
        a: tm.matrix,
        f,
        f_of_a,
        lambda,
        f_lambda,
    })
}

fn rel(err: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

pub fn approximate_impl(spec: &str, f: &str, k: usize, q: usize, seed: u64) -> Result<Approximation, Error> {
    let pr = problem(spec, f)?;
    let oracle = oracle_from_dense(&pr.a);
    let fac = fun_nystrom(&oracle, &pr.f, k, q, &Sketch::gaussian(seed))?;
    let diff = &pr.f_of_a - fac.to_dense();
    let eig = symmetric_eigenvalues(&diff, "error matrix")?;
    let show = (2 * k).min(pr.f_lambda.len());
    Ok(Approximation {
        n: pr.a.dim(),
        rank: fac.rank(),
        mvps: fac.mvps_used,
        exact: pr.f_lambda[..show].to_vec(),
        approx: fac.lambda.clone(),
        rel_frobenius: rel(diff.norm(), Norm::Frobenius.of_values(&pr.f_lambda)),
        rel_nuclear: rel(Norm::Nuclear.of_values(&eig), Norm::Nuclear.of_values(&pr.f_lambda)),
        rel_operator: rel(Norm::Operator.of_values(&eig), Norm::Operator.of_values(&pr.f_lambda)),
    })
}

pub fn trace_impl(spec: &str, f: &str, r: usize, l: usize, depth: usize, seed: u64) -> Result<TraceResult, Error> {
    let pr = problem(spec, f)?;
    let exact: f64 = pr.f_lambda.iter().sum();
    let oracle = oracle_from_dense(&pr.a);
    let params = LanczosParams::new(depth)?;
    let plug_in = fun_nystrom_pp(&oracle, &pr.f, r, 0, 1, params, seed)?.value;
    let oracle = oracle_from_dense(&pr.a);
    let est = fun_nystrom_pp(&oracle, &pr.f, r, l, 1, params, seed)?;
    Ok(TraceResult {
        exact,
        plug_in,
        estimate: est.value,
        rel_error_plug_in: rel((plug_in - exact).abs(), exact.abs()),
        rel_error: rel((est.value - exact).abs(), exact.abs()),
        mvps: est.mvps_a,
    })
}

pub fn curve_impl(spec: &str, f: &str, max_rank: usize, q: usize, seed: u64) -> Result<Vec<CurvePoint>, Error> {
    let pr = problem(spec, f)?;
    let scale = Norm::Nuclear.of_values(&pr.f_lambda);
    let step = (max_rank / 10).max(1);
    let mut out = Vec::new();
    for r in (step..=max_rank.min(pr.a.dim())).step_by(step) {
        let oracle = oracle_from_dense(&pr.a);
        let fac = fun_nystrom(&oracle, &pr.f, r, q, &Sketch::gaussian(seed))?;
        let eig = symmetric_eigenvalues(&(&pr.f_of_a - fac.to_dense()), "error matrix")?;
        let bound = if pr.f.kind() == FunctionKind::Sqrt {
            best_split(&pr.lambda, r, q, pr.f, |b| Ok(sqrt_improved_bounds(b)?.nuclear))
        } else {
            best_split(&pr.lambda, r, q, pr.f, nuclear_expectation_bound)
        };
        out.push(CurvePoint {
            rank: r,
            rel_error: rel(Norm::Nuclear.of_values(&eig), scale),
            rel_bound: bound.map(|b| rel(b.value, scale)),
        });
    }
    Ok(out)
}

fn to_js<T: Serialize>(r: Result<T, Error>) -> Result<String, JsValue> {
    let v = r.map_err(|e| JsValue::from_str(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsValue::from_str(&e.to_string()))
}

/// funNyström approximation of `f(A)`; returns spectra and relative errors.
#[wasm_bindgen]
pub fn approximate(spec: &str, f: &str, k: usize, q: usize, seed: u32) -> Result<String, JsValue> {
    to_js(approximate_impl(spec, f, k, q, seed.into()))
}

/// Plug-in and funNyström++ estimates of `tr(f(A))`.
#[wasm_bindgen]
pub fn trace_estimate(spec: &str, f: &str, r: usize, l: usize, depth: usize, seed: u32) -> Result<String, JsValue> {
    to_js(trace_impl(spec, f, r, l, depth, seed.into()))
}

/// Nuclear-norm error and expectation bound for ten ranks up to `max_rank`.
#[wasm_bindgen]
pub fn error_curve(spec: &str, f: &str, max_rank: usize, q: usize, seed: u32) -> Result<String, JsValue> {
    to_js(curve_impl(spec, f, max_rank, q, seed.into()))
}
