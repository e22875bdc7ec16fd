//! Numerical laboratory for densely connected non-local (DNL) networks,
//! their continuous-time Volterra integral-equation limit, and the bridge
//! operators between the two.
//!
//! The crate is organized around the objects it manipulates:
//!
//! - [`linalg`]: dense vectors and square matrices with the spectral norm.
//! - [`kernel`]: the non-local transformation A_κ and its growth/Lipschitz
//!   envelopes.
//! - [`discrete`]: the L-layer forward recurrence, parameter pack, flip
//!   operator, discrete regularizers and state bound.
//! - [`continuous`]: the Volterra system solved by causal marching, the
//!   continuous regularizer and the a-priori bound.
//! - [`generator`]: smooth trigonometric/polynomial parameter curves for
//!   experiments.
//! - [`bridge`]: piecewise constant/linear/bilinear extensions, node
//!   sampling, windowed-mean recovery and sup-distance.
//! - [`train`]: losses, exact reverse-mode gradients, finite-difference
//!   oracle and momentum gradient descent.

pub mod bridge;
pub mod continuous;
pub mod discrete;
pub mod error;
pub mod generator;
pub mod kernel;
pub mod linalg;
pub mod numfmt;
mod params_io;
pub mod train;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
