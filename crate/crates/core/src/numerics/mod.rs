//! Numerical kernel shared by every other module.

pub mod ode;
pub mod quadrature;
pub mod quartic;
pub mod special;

pub use num_complex::Complex64 as Complex;

pub use ode::{integrate_ode, OdeSpec};
pub use quadrature::{
    adaptive_partition, integrate_adaptive, integrate_adaptive_estimate, integrate_on_panels, integrate_real,
    panel_nodes, QuadEstimate, QuadratureSpec,
};
pub use quartic::solve_quartic;
pub use special::{beta_sym, exp_integral_e, gamma_fn, norm_cdf, norm_pdf};
