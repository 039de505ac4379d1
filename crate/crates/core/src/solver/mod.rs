//! Monotone explicit finite-difference solver and residual diagnostics.

mod diagnostics;
mod hessian;
mod scheme;

pub use diagnostics::{
    caloric_derivative_check, class_residual, maximum_principle_check, sup_on_grid, CaloricReport,
    ClassResidualReport, MaxPrincipleReport, CALORIC_SPREAD_LIMIT, MAX_PRINCIPLE_TOL,
};
pub use hessian::{discrete_gradient, discrete_hessian, slice_gradient, slice_hessian, time_derivative};
pub use scheme::{solve, stored_class_residual, Domain, ProblemSpec, SchemeConfig, SolveResult, Stepper};
