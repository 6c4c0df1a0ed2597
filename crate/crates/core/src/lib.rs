//! Bayesian boundary detection for star-shaped regions in noisy images.
//!
//! The boundary is modelled as a radius function `γ(ω)` around a reference
//! point and given a rescaled squared-exponential-periodic Gaussian-process
//! prior. Because the kernel's eigendecomposition is available in closed
//! form (eigenvalues are scaled modified Bessel functions), the prior is
//! represented by a truncated Karhunen–Loève expansion and sampled with a
//! slice-within-Gibbs scheme that never factorizes a covariance matrix.
//!
//! Module map:
//!
//! - [`bessel`]: `e^{-x} I_n(x)` and the identities it satisfies.
//! - [`kernel`]: the periodic kernel, its eigenvalues, basis and truncation diagnostics.
//! - [`models`]: noise families, ordered conjugate updates, Hellinger separation.
//! - [`geometry`]: designs, polar images, the shape library, the Lebesgue error.
//! - [`sampler`]: the Gibbs sampler, the fixed-order series sampler, credible bands.
//! - [`harness`]: simulation cases, baselines, replication studies and figures.
//! - [`io`]: CSV/JSON file formats shared by the CLI and studies.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bessel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod kernel;
pub mod models;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
