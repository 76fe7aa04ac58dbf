//! Dense linear algebra and seeded sampling.

mod fit;
mod matrix;
mod power;
mod rng;
pub mod svd;

pub use fit::{linear_fit, log_log_fit, LinearFit};
pub use matrix::{matmul, Matrix};
pub use power::{spectral_norm, SpectralNorm};
pub use rng::{sample_gaussian, sample_uniform, RngState};
pub use svd::{sigma_min, singular_values, svd, Svd};
