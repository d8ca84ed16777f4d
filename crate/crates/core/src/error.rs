use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FbeError {
    #[error("degenerate boundary: {0}")]
    DegenerateBoundary(String),
    #[error("negative interior value of r at x = {0}")]
    NegativeInterior(f64),
    #[error("no vacuum boundary: {0}")]
    NoVacuumBoundary(String),
    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),
    #[error("target point {0} outside source hull")]
    OutOfHull(f64),
    #[error("weight exponent {0} is not integrable (requires sigma > -1/2)")]
    WeightNotIntegrable(f64),
    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),
    #[error("inadmissible exponents: {0}")]
    InadmissibleExponents(String),
    #[error("empty decomposition")]
    EmptyDecomposition,
    #[error("ill-conditioned moment system (condition number {0:.3e})")]
    IllConditionedMoments(f64),
    #[error("scale too fine: {0}")]
    ScaleTooFine(String),
    #[error("boundary lost: {0}")]
    BoundaryLost(String),
    #[error("unbalanced residual term: {0}")]
    UnbalancedResidual(String),
    #[error("weight failure: {0}")]
    WeightFailure(String),
    #[error("spectral failure: {0}")]
    SpectralFailure(String),
    #[error("weight profile root bracketing failed: {0}")]
    NoRoot(String),
    #[error("domains disjoint or not Lipschitz-close: {0}")]
    DomainsDisjoint(String),
    #[error("kappa mismatch: {0} vs {1}")]
    KappaMismatch(f64, f64),
    #[error("degenerate denominator: {0:.3e}")]
    DegenerateDenominator(f64),
    #[error("mesh tangled: 1 + eps*v' = {0:.3e} at x = {1}")]
    MeshTangled(f64, f64),
    #[error("bootstrap breach: B = {0:.4} exceeds 4 x initial {1:.4}")]
    BootstrapBreach(f64, f64),
    #[error("time horizon {0} exceeds guard {1}")]
    HorizonTooLong(f64, f64),
    #[error("background too coarse: {0}")]
    BackgroundTooCoarse(String),
    #[error("ODE blow-up at t = {0}: {1}")]
    OdeBlowup(f64, String),
    #[error("time step collapse at t = {0}")]
    TimestepCollapse(f64),
    #[error("scale constraint violated: {0}")]
    ScaleConstraint(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, FbeError>;

impl From<std::io::Error> for FbeError {
    fn from(e: std::io::Error) -> Self {
        FbeError::Io(e.to_string())
    }
}
