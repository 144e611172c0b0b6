//! Wall-clock cost of `N` products with `f(A)`: block Lanczos against a
//! funNyström factor built once and applied to all `N` columns.
//! Timing columns are machine dependent.

use std::time::Instant;

use nalgebra::DMatrix;

use super::config::{positive_list, require, ExperimentConfig};
use super::output::{percentile, ExperimentOutput, Table};
use super::{fmt_f64, repetition_seed, DenseReference};
use crate::error::{Error, Result};
use crate::lanczos::{lanczos_fun_apply, LanczosParams};
use crate::linalg::{oracle_from_dense, MatVecOracle};
use crate::nystrom::{fun_nystrom, Sketch};

/// Spearman rank correlation, with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &t in &idx[i..=j] {
            r[t] = avg;
        }
        i = j + 1;
    }
    r
}

fn identity_columns(n: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, cols, |i, j| if i == j { 1.0 } else { 0.0 })
}

fn rel_frob(exact: &DMatrix<f64>, approx: &DMatrix<f64>) -> f64 {
    let scale = exact.norm();
    let err = (exact - approx).norm();
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

pub fn run_speedup(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let spec = cfg.matrix_spec("exp:n=1000,s=1,gamma=0.36787944117144233")?;
    require(spec.n <= 2000, "matrix", "speedup needs a dense reference, n <= 2000")?;
    let f = cfg.function("sqrt")?;
    let n = spec.n;
    let columns = positive_list(
        "speedup.columns",
        cfg.speedup
            .columns
            .as_deref()
            .unwrap_or(&[10, 20, 30, 40, 50, 60, 70, 80, 90, 100]),
        Some(n),
    )?;
    let target = cfg.speedup.target.unwrap_or(0.01);
    require(target > 0.0 && target < 1.0, "speedup.target", "must lie in (0, 1)")?;
    let q = *cfg.q_list(&[1])?.first().expect("nonempty");
    let reps = cfg.repetitions(5)?;
    let base_seed = cfg.seed();
    let reorth = cfg.lanczos.reorthogonalize.unwrap_or(false);
    let params_for = |d: usize| -> Result<LanczosParams> {
        let p = LanczosParams::new(d)?;
        Ok(if reorth { p } else { p.without_reorthogonalization() })
    };

    let reference = DenseReference::new(&spec, f)?;
    let a = &reference.test_matrix.matrix;
    let n_max = *columns.iter().max().expect("nonempty");
    let z_max = identity_columns(n, n_max);
    let exact_max = reference.f_of_a.columns(0, n_max).into_owned();
    let tune_seed = repetition_seed(base_seed, 0);

    let k = match cfg.speedup.k {
        Some(k) => {
            require(k >= 1 && k <= n, "speedup.k", format!("must lie in [1, {n}]"))?;
            k
        }
        None => {
            let mut found = None;
            for k in 1..=n {
                let fac = fun_nystrom(&oracle_from_dense(a), &f, k, q, &Sketch::gaussian(tune_seed))?;
                if rel_frob(&exact_max, &fac.apply(&z_max)) <= target {
                    found = Some(k);
                    break;
                }
            }
            found.ok_or_else(|| {
                Error::Parse(format!(
                    "field 'speedup.target': no rank reaches relative error {target}"
                ))
            })?
        }
    };
    let depth = match cfg.lanczos.depth.or(cfg.speedup.depth) {
        Some(d) => {
            require(d >= 1 && d <= n, "lanczos.depth", format!("must lie in [1, {n}]"))?;
            d
        }
        None => {
            let mut found = None;
            for d in 1..=n {
                let out = lanczos_fun_apply(&oracle_from_dense(a), &f, &z_max, &params_for(d)?)?;
                if rel_frob(&exact_max, &out.result) <= target {
                    found = Some(d);
                    break;
                }
            }
            found.ok_or_else(|| {
                Error::Parse(format!(
                    "field 'speedup.target': no Lanczos depth reaches relative error {target}"
                ))
            })?
        }
    };
    let params = params_for(depth)?;

    let mut table = Table::new(
        "speedup",
        &[
            "N",
            "k",
            "q",
            "depth",
            "seed",
            "mvps_lanczos",
            "mvps_lowrank",
            "t_lanczos",
            "t_lowrank",
            "ratio",
            "err_lanczos",
            "err_lowrank",
        ],
    );
    let mut ns = Vec::new();
    let mut ratios = Vec::new();
    for &cols in &columns {
        let z = identity_columns(n, cols);
        let exact = reference.f_of_a.columns(0, cols).into_owned();
        let mut t_l = Vec::with_capacity(reps);
        let mut t_r = Vec::with_capacity(reps);
        let (mut err_l, mut err_r, mut mv_l, mut mv_r) = (0.0, 0.0, 0, 0);
        for rep in 0..reps {
            let seed = repetition_seed(base_seed, rep);

            let oracle = oracle_from_dense(a);
            let start = Instant::now();
            let out = lanczos_fun_apply(&oracle, &f, &z, &params)?;
            t_l.push(start.elapsed().as_secs_f64());
            mv_l = oracle.mvp_count();

            let oracle = oracle_from_dense(a);
            let start = Instant::now();
            let fac = fun_nystrom(&oracle, &f, k, q, &Sketch::gaussian(seed))?;
            let y = fac.apply(&z);
            t_r.push(start.elapsed().as_secs_f64());
            mv_r = oracle.mvp_count();

            if rep == 0 {
                err_l = rel_frob(&exact, &out.result);
                err_r = rel_frob(&exact, &y);
            }
        }
        let (tl, tr) = (percentile(&t_l, 50.0), percentile(&t_r, 50.0));
        let ratio = tl / tr;
        ns.push(cols as f64);
        ratios.push(ratio);
        table.push(vec![
            cols.to_string(),
            k.to_string(),
            q.to_string(),
            depth.to_string(),
            repetition_seed(base_seed, 0).to_string(),
            mv_l.to_string(),
            mv_r.to_string(),
            fmt_f64(tl),
            fmt_f64(tr),
            fmt_f64(ratio),
            fmt_f64(err_l),
            fmt_f64(err_r),
        ]);
    }

    Ok(ExperimentOutput {
        tables: vec![table],
        metadata: vec![
            ("matrix".into(), spec.to_string()),
            ("function".into(), f.to_string()),
            ("repetitions".into(), reps.to_string()),
            ("seed".into(), base_seed.to_string()),
            ("target".into(), fmt_f64(target)),
            ("k".into(), k.to_string()),
            ("depth".into(), depth.to_string()),
            ("reorthogonalize".into(), reorth.to_string()),
            ("spearman_ratio_vs_n".into(), fmt_f64(spearman(&ns, &ratios))),
            ("timing".into(), "machine-dependent, median over repetitions".into()),
        ],
        plot_script: PLOT.into(),
        violations: Vec::new(),
    })
}

const PLOT: &str = r#"# gnuplot script: speed-up factor against the number of products N.
set datafile separator ','
set xlabel 'N'
set ylabel 'T_lanczos / T_lowrank'
set key off
plot 'speedup.csv' using 1:10 with linespoints
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_monotone_and_ties() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 40.0]) - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
    }
}
