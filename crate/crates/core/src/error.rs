use thiserror::Error;

/// Errors shared across the pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("histogram binning mismatch: {0} vs {1}")]
    BinningMismatch(usize, usize),
    #[error("degenerate series: {0}")]
    DegenerateSeries(&'static str),
    #[error("no common trading days between {0} and {1}")]
    NoCommonDays(String, String),
    #[error("malformed session: close must exceed open by more than twice the edge cut")]
    MalformedSession,
    #[error("series too short: length {len} requires > {required}")]
    SeriesTooShort { len: usize, required: usize },
    #[error("no data points retained after conditioning")]
    NoRetainedPoints,
    #[error("probability out of range: {0}")]
    OutOfRange(f64),
    #[error("quadrature did not converge: |Δ| = {delta:.3e} > tol {tol:.3e}")]
    QuadratureNotConverged { delta: f64, tol: f64 },
    #[error("no bracket found: {0}")]
    BracketNotFound(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error in {file} line {line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("missing file: {0}")]
    MissingFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
