use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("duplicate point: indices {first} and {second} share coordinates")]
    DuplicatePoint { first: usize, second: usize },
    #[error("point {index} at ({x}, {y}) lies outside the window")]
    OutOfWindow { index: usize, x: f64, y: f64 },
    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("pattern is empty")]
    EmptyPattern,
    #[error("invalid evaluation grid: {0}")]
    InvalidGrid(String),
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("sequential inhibition failed after placing {placed} of {requested} points")]
    SsiFailure { placed: usize, requested: usize },
    #[error("kernel bandwidth must be positive, got {0}")]
    BandwidthNonpositive(f64),
    #[error("no test locations lie at distance >= {r} from the window boundary")]
    NoValidTestLocations { r: f64 },
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
    #[error("too few simulations: need m >= {needed}, got {got}")]
    TooFewSimulations { needed: usize, got: usize },
    #[error("grid index {index} out of range for grid of length {len}")]
    IndexOutOfGrid { index: usize, len: usize },
    #[error("statistic values carry mixed extremeness tags or are not all scalar")]
    MixedTags,
    #[error("curve matrices have mismatched shapes: {0}")]
    MismatchedShapes(String),
    #[error("columns do not share a single extremeness direction")]
    MixedDirections,
    #[error("alpha*(m+1) = {0} < 1: level too small for the number of simulations")]
    AlphaTooSmall(f64),
    #[error("insufficient simulations: {0}")]
    InsufficientSimulations(String),
    #[error("parameter estimation failed: {0}")]
    EstimatorFailure(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Whether the error stems from bad user input (as opposed to a numeric
    /// failure during estimation or simulation).
    pub fn is_usage(&self) -> bool {
        !matches!(
            self,
            Error::SsiFailure { .. }
                | Error::TooFewPoints { .. }
                | Error::EmptyPattern
                | Error::NoValidTestLocations { .. }
                | Error::EstimatorFailure(_)
                | Error::InsufficientSimulations(_)
                | Error::AlphaTooSmall(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
