//! Norm and seminorm estimators on grid functions: parabolic Hölder and
//! `C^{2+α}` seminorms, Campanato-type polynomial approximation, the
//! constrained dyadic polynomial sequence, Log-Lipschitz growth, `W^{2,1,p}`
//! norms, mean oscillation and decay-exponent regression.

mod campanato;
mod constrained;
mod derivatives;
mod fit;
mod holder;
mod loglip;
mod pbmo;
mod poly;
mod sobolev;

pub use campanato::{
    campanato_seminorm, dyadic_polynomial_sequence, geometric_radii, CampanatoReport, CoefficientIncrement, FitMode, PolySequenceReport,
    PolyStep, RadiusFit,
};
pub use constrained::{constrained_polyfit, squared_residual, PROJECTION_MAX_ITER, PROJECTION_TOL};
pub use derivatives::{hessian_component_fields, time_derivative_field, DerivedField};
pub use fit::{decay_exponent_fit, DecayFit, VALUE_FLOOR};
pub use holder::{
    c2alpha_seminorm, c2alpha_seminorm_seeded, c2alpha_seminorm_with_budget, holder_seminorm, holder_seminorm_seeded, DEFAULT_PAIR_BUDGET,
    PAIR_SAMPLER_SEED,
};
pub use loglip::{loglip_fit, GrowthModel, LogLipReport, LOGLIP_MIN_SCALES};
pub use pbmo::{mean_oscillation, parabolic_maximal, pbmo_norm, PBMO_MAX_CENTERS};
pub use poly::{class_dimension, fit_chebyshev, fit_least_squares, sup_residual, QuadraticPolynomial};
pub use sobolev::sobolev_norm;
