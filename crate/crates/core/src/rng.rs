//! Seeded Gaussian random matrices.
//!
//! Column `j` of every random matrix is drawn from its own ChaCha8 stream
//! (`set_stream(j)`) keyed by the seed, so each column is a pure function of
//! `(seed, j)` and columns can be generated in any order or in parallel.
//! Normal variates use the Ziggurat sampler of `rand_distr::StandardNormal`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Mixes a base seed and a stream tag into an independent-looking seed
/// (splitmix64 finalizer). Used to derive paired sub-streams from one seed.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn column_rng(seed: u64, column: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(column as u64);
    rng
}

/// `n x k` matrix with i.i.d. standard normal entries.
pub fn gaussian_matrix(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, k);
    for j in 0..k {
        let mut rng = column_rng(seed, j);
        for v in m.column_mut(j).iter_mut() {
            *v = rng.sample(StandardNormal);
        }
    }
    m
}

/// Length-`n` standard normal vector.
pub fn gaussian_vector(n: usize, seed: u64) -> DVector<f64> {
    let mut rng = column_rng(seed, 0);
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_matrix() {
        assert_eq!(gaussian_matrix(20, 4, 7), gaussian_matrix(20, 4, 7));
        assert_ne!(gaussian_matrix(20, 4, 7), gaussian_matrix(20, 4, 8));
    }

    #[test]
    fn columns_do_not_depend_on_width() {
        let narrow = gaussian_matrix(15, 2, 3);
        let wide = gaussian_matrix(15, 5, 3);
        assert_eq!(narrow.columns(0, 2), wide.columns(0, 2));
    }

    #[test]
    fn sample_mean_within_clt_bound() {
        let n = 10_000;
        let m = gaussian_matrix(n, 1, 123);
        let mean = m.sum() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn sample_variance_near_one() {
        let m = gaussian_matrix(10_000, 10, 99);
        let count = m.len() as f64;
        let mean = m.sum() / count;
        let var = m.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
        assert!((var - 1.0).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, 0);
        let b = derive_seed(1, 1);
        let c = derive_seed(2, 0);
        assert!(a != b && a != c && b != c);
        assert_eq!(derive_seed(1, 0), a);
    }
}
