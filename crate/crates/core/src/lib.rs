//! Weighted Bergman kernels and first-order Berezin–Töplitz quantization data.
//!
//! The crate is organised bottom-up:
//!
//! - [`jets`]: truncated multivariate Taylor series with complex coefficients.
//! - [`functions`]: polarized functions `f(x, ȳ)` that can be evaluated on jets.
//! - [`geometry`]: metric, Laplacian, curvature and diastasis from a potential.
//! - [`symbols`]: formal symbols, the expansion operators and the star products.
//! - [`quadrature`] and [`kernel`]: the numerical Bergman kernel.
//! - [`models`]: the built-in weight families with reference data.
//! - [`oracle`]: extended-precision closed forms used for finite-difference checks.

pub mod error;
pub mod functions;
pub mod geometry;
pub mod jets;
pub mod kernel;
pub mod models;
pub mod oracle;
pub mod quadrature;
pub mod symbols;
pub mod sweep;

pub use error::{Error, Result};
pub use jets::{Jet, Layout, C64};
