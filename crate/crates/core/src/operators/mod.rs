//! Uniformly elliptic operators `F(x, t, M)` and checks of their structure.

mod checks;
mod matrix;
mod pucci;
pub mod sampling;
mod spec;

pub use checks::{
    check_uniform_ellipticity, cordes_check, ellipticity_samples, oscillation, oscillation_matrices, CordesReport,
    EllipticityReport, EllipticitySample, OscillationReport, ELLIPTICITY_TOL,
};
pub use matrix::{SymMatrix, SYMMETRY_TOL};
pub use pucci::{ellipticity_aperture, pucci_minus, pucci_plus, set_pucci_minus_fault, EllipticityPair};
pub use spec::{p_laplace_pair, IsaacsEntry, OperatorKind, OperatorSpec, DIRECTION_FLOOR};
