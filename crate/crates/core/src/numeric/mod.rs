//! Shared numerical kernels: adaptive Runge-Kutta 5(4) with dense output,
//! adaptive quadrature with integrable endpoint singularities, bracketed
//! root finding, small matrix exponentials, numerical rank and
//! finite-difference gradients.
//!
//! All kernels are implemented in-repo; the problem dimensions never exceed
//! ten, so testability beats generality.

pub mod expm;
pub mod fd;
pub mod ode;
pub mod quad;
pub mod rank;
pub mod rng;
pub mod root;

pub use expm::expm5;
pub use fd::grad_central;
pub use ode::{ode_solve, DenseSolution, ToleranceSpec};
pub use quad::{quad_adaptive, EndpointSingularity};
pub use rank::numeric_rank;
pub use rng::SplitMix64;
pub use root::root_bracketed;
