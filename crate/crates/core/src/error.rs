use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("radius {r} outside profile domain [{lo}, {hi}]")]
    OutOfDomain { r: f64, lo: f64, hi: f64 },
    #[error("derivative order {0} is not supported (max 2)")]
    DerivOrderUnsupported(u8),
    #[error("mass must be positive, got {0}")]
    InvalidMass(f64),
    #[error("dimension must satisfy n > 2, got {0}")]
    InvalidDimension(usize),
    #[error("gluing radius {radius} too small: need R > {min}")]
    RadiusTooSmall { radius: f64, min: f64 },
    #[error("radius {r} is not in the cusp region (r must exceed {start})")]
    NotInCuspRegion { r: f64, start: f64 },
    #[error("finite-difference step {step} exceeds the domain margin {margin}")]
    StepTooLarge { step: f64, margin: f64 },
    #[error("eigenvalue solve failed: {0}")]
    EigenSolveFailure(String),
    #[error("geodesic class {0:?} is not primitive")]
    NotPrimitive(Vec<i64>),
    #[error("grid touches the core r+ = {r_plus} where V vanishes")]
    SingularAtCore { r_plus: f64 },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("unknown block label `{0}`")]
    UnknownBlock(String),
    #[error("need at least {need} torus samples per radius, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("anchor radius {0} lies outside the grid")]
    AnchorOutsideGrid(f64),
    #[error("profile is not positive at r = {0}")]
    NonPositiveProfile(f64),
    #[error("Newton iteration did not converge in {iters} iterations (residual {residual:e})")]
    MaxItersExceeded { iters: usize, residual: f64 },
    #[error("line search failed after {halvings} halvings (residual {residual:e})")]
    LineSearchFailed { halvings: usize, residual: f64 },
    #[error("no deficit scan available: {0}")]
    ScanMissing(String),
    #[error("defining function value {0} outside (0, 2]")]
    InvalidRho(f64),
    #[error("field contains a non-finite value at index {0}")]
    NonFiniteField(usize),
    #[error("invalid weight specification: {0}")]
    InvalidWeight(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Errors caused by numerical non-convergence rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::MaxItersExceeded { .. }
                | Error::LineSearchFailed { .. }
                | Error::EigenSolveFailure(_)
        )
    }
}
