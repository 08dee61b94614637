use thiserror::Error;

/// Errors raised by grid construction, operators and checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {0}: only 1 and 2 are supported")]
    InvalidDimension(usize),
    #[error("invalid grid size: {0}")]
    InvalidSize(String),
    #[error("kernel under-resolved: spacing {h} exceeds {limit}")]
    UnderResolvedKernel { h: f64, limit: f64 },
    #[error("kernel is not normalizable on this grid (all samples vanish)")]
    NonNormalizable,
    #[error("test function parameters lie outside the grid box: {0}")]
    SpecOutOfBox(String),
    #[error("vanishing-moment projection failed: relative residual {0:e}")]
    MomentCancellationFailed(f64),
    #[error("scale {t} is below grid resolution (minimum {min})")]
    ScaleBelowResolution { t: f64, min: f64 },
    #[error("invalid scale set: {0}")]
    InvalidScales(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("dyadic envelope violated: {0}")]
    EnvelopeViolated(String),
    #[error("empty scale stack")]
    EmptyStack,
    #[error("truncation cap {cap} is below the smallest scale {t_min}")]
    CapBelowMinScale { cap: f64, t_min: f64 },
    #[error("no admissible (y, t) pair in the cone")]
    EmptyCone,
    #[error("no ball of the family contains sample {0}")]
    EmptyBall(usize),
    #[error("exponent out of range: {0}")]
    ExponentOutOfRange(String),
    #[error("ball escapes the grid box: {0}")]
    BallEscapesBox(String),
    #[error("signal below noise floor: {0}")]
    SignalBelowNoise(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed data: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
