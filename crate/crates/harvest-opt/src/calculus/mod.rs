//! Numerical kernel: adaptive quadrature with singular-endpoint handling,
//! deterministic root finding, the scale/speed calculus of one-dimensional
//! diffusions, special functions, and an adaptive ODE integrator.

pub mod ode;
pub mod quad;
pub mod root;
pub mod scale;
pub mod special;

pub use quad::{integrate, integrate_log, integrate_log_from_zero, QuadResult, Quadrature};
pub use root::{bracketed_root, golden_max, golden_min};
pub use scale::ScaleSpeed;
