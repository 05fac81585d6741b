use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel second moment vanishes on the sample points (R = {radius})")]
    ZeroSecondMoment { radius: usize },

    #[error("interaction radius {radius} must be shorter than half the ring (N/2 = {half_n})")]
    RadiusTooLarge { radius: usize, half_n: usize },

    #[error("vector length {got} does not match lattice size {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigenvalue {index} is zero; 1/lambda is undefined")]
    SingularMode { index: usize },

    #[error("grid refinement incompatible: {0}")]
    IncompatibleRefinement(String),

    #[error("explicit step dt = {dt:e} exceeds stability bound {dt_max:e}")]
    UnstableStep { dt: f64, dt_max: f64 },

    #[error("non-finite state value at node {node}, t = {t}")]
    NonFinite { node: usize, t: f64 },

    #[error("{failed} of {total} replicas aborted with non-finite states")]
    ReplicaFailure { failed: usize, total: usize },

    #[error("only {hit} of {total} replicas reached the target at h = {h}")]
    InsufficientTransitions { hit: usize, total: usize, h: f64 },

    #[error("rate fit requires strictly positive errors")]
    NonPositiveError,

    #[error("heat kernel series is refused below t = {min:e} (got t = {t:e})")]
    TimeBelowCutoff { t: f64, min: f64 },

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
