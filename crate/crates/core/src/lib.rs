//! ADOL rough-volatility model: Hurst-derived constants of the DO process,
//! exact and Euler simulation, an asymptotic characteristic function of
//! log-spot, Fourier option pricing and variance swaps.

// `!(x > 0.0)` is the NaN-rejecting guard used throughout; oracle constants
// keep every digit they were computed with.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod charfn;
pub mod do_process;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod pricing;

pub use do_process::{do_constants, DoConstants};
pub use error::{Error, Result};
pub use model::AdolModel;
pub use numerics::Complex;
