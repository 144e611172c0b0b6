//! Low-rank approximation of matrix functions `f(A)` for symmetric positive
//! semi-definite `A`, computed directly from a Nyström sketch of `A`.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] dense symmetric kernels and the [`MatVecOracle`] abstraction,
//! * [`funcs`] scalar functions applied to spectra,
//! * [`nystrom`] the sketching algorithms (funNyström, randomized SVD variant),
//! * [`lanczos`] Krylov approximation of `f(A) X`,
//! * [`trace`] trace estimators built on the above,
//! * [`bounds`] closed-form error bounds and per-sketch diagnostics,
//! * [`testmat`] synthetic and kernel test matrices,
//! * [`experiments`] the experiment harness driven by the CLI.

pub mod bounds;
pub mod error;
#[cfg(feature = "experiments")]
pub mod experiments;
pub mod funcs;
pub mod lanczos;
pub mod linalg;
pub mod nystrom;
pub mod rng;
pub mod testmat;
pub mod trace;

pub use error::{Error, Result};
pub use funcs::ScalarFunction;
pub use linalg::{DenseOracle, MatVecOracle, Norm, SpectralDecomposition, SymmetricMatrix};
pub use nystrom::{LowRankFactor, Sketch};
pub use trace::TraceEstimate;
