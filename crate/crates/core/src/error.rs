use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported spatial dimension {0} (expected 1, 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("level-0 cube has no predecessor")]
    RootCube,

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("invalid ellipticity constants: lambda = {lower}, Lambda = {upper}")]
    Ellipticity { lower: f64, upper: f64 },

    #[error("sample increment N is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("coefficient sample violates ellipticity: {0}")]
    NonElliptic(String),

    #[error("Isaacs family is empty")]
    EmptyFamily,

    #[error("normalized p-Laplacian needs a nonzero gradient direction")]
    ZeroDirection,

    #[error("invalid operator: {0}")]
    Operator(String),

    #[error("CFL violation: dt = {dt:e} exceeds limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("node {0} has no full interior stencil")]
    MissingStencil(usize),

    #[error("region contains no grid nodes")]
    EmptyRegion,

    #[error("region too small: need {needed} nodes, found {found}")]
    InsufficientNodes { needed: usize, found: usize },

    #[error("iteration did not converge after {0} iterations")]
    NonConvergence(usize),

    #[error("input is not caloric: residual {residual:e} above tolerance {tolerance:e}")]
    NonCaloric { residual: f64, tolerance: f64 },

    #[error("need at least 3 usable scales, got {0}")]
    TooFewScales(usize),

    #[error("center too close to the grid boundary")]
    NearBoundary,

    #[error("node sets are not aligned with the dyadic grid")]
    NotDyadicAligned,

    #[error("requested depth not resolvable by the grid: {0}")]
    TooDeep(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("config error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config validation failed ({code}): {message}")]
    Validation { code: &'static str, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Machine-readable error code used in `errors.json` and across the C ABI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::UnsupportedDimension(_) => "unsupported_dimension",
            Error::NonFinite(_) => "non_finite",
            Error::RootCube => "root_cube",
            Error::Geometry(_) => "geometry",
            Error::NotSymmetric(_) => "not_symmetric",
            Error::Ellipticity { .. } => "ellipticity",
            Error::NotPositiveSemidefinite(_) => "not_psd",
            Error::NonElliptic(_) => "non_elliptic",
            Error::EmptyFamily => "empty_family",
            Error::ZeroDirection => "zero_direction",
            Error::Operator(_) => "operator",
            Error::Cfl { .. } => "cfl",
            Error::MissingStencil(_) => "missing_stencil",
            Error::EmptyRegion => "empty_region",
            Error::InsufficientNodes { .. } => "insufficient_nodes",
            Error::NonConvergence(_) => "non_convergence",
            Error::NonCaloric { .. } => "non_caloric",
            Error::TooFewScales(_) => "too_few_scales",
            Error::NearBoundary => "near_boundary",
            Error::NotDyadicAligned => "not_dyadic_aligned",
            Error::TooDeep(_) => "too_deep",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Expression(_) => "expression",
            Error::Parse { .. } => "parse",
            Error::Validation { code, .. } => code,
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// Process exit code for the CLI: 2 validation, 3 CFL refusal, 4 estimator
    /// precondition, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Validation { .. }
            | Error::Ellipticity { .. }
            | Error::Expression(_)
            | Error::EmptyFamily
            | Error::Operator(_)
            | Error::UnsupportedDimension(_) => 2,
            Error::Cfl { .. } | Error::NonFinite(_) => 3,
            Error::Io(_) | Error::Json(_) => 1,
            _ => 4,
        }
    }
}
