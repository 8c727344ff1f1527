//! Bound-preserving conforming finite elements for stationary
//! convection-diffusion-reaction problems on the unit square.
//!
//! The discrete solution is split as `u = u_plus + u_minus`, where
//! `u_plus` is the nodal clip of `u` onto `[0, kappa]`. `u_plus` satisfies
//! the stabilised Galerkin equations and a diagonal form controls
//! `u_minus`. The nonlinear system is solved by a damped fixed-point
//! iteration that reuses one factorisation.
//!
//! The algebraic layer is generic over [`Scalar`] (`f32` or `f64`);
//! geometry and coefficients are `f64`. Aliases for the `f64` instances are
//! provided at the crate root.

pub mod analysis;
pub mod assembly;
pub mod error;
pub mod fe_space;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod method;
pub mod problems;
pub mod projection;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` sparse matrix.
pub type CsrMatrix64 = linalg::CsrMatrix<f64>;
/// `f64` discretisation.
pub type Discretization64 = method::Discretization<f64>;
/// `f64` fixed-point report.
pub type SolveReport64 = solver::SolveReport<f64>;
/// `f64` prepared linear solver.
pub type LinearSolver64 = solver::LinearSolver<f64>;
