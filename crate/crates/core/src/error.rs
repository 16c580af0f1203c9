use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Lebesgue exponent p = {0} is below 2")]
    ExponentBelowTwo(f64),
    #[error("quadrature grid does not resolve h_{m}: {reason}")]
    Unresolved { m: usize, reason: String },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("band 2^{0} lies outside the grid band range")]
    BandOutOfRange(i32),
    #[error("field is not supported on a single building block")]
    NotUnimodal,
    #[error("Hermite index {0} exceeds the grid truncation")]
    ModeOverflow(usize),
    #[error("draw has no entry for band 2^{j}, m = {m}")]
    MissingDraw { j: i32, m: usize },
    #[error("{n} samples are too few for quantile level {level}")]
    TooFewSamples { n: usize, level: f64 },
    #[error("Picard iteration stopped contracting after {iterations} iterations; try T <= {suggested_t:.3e}")]
    NonContraction { iterations: usize, suggested_t: f64 },
    #[error("X norm of the initial datum is not finite")]
    InfiniteNorm,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("snapshot format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
