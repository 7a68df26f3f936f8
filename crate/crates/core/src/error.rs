use thiserror::Error;

/// Errors produced anywhere in the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("target ({x:.4}, {y:.4}) is outside the workspace (radius {radius:.4} not in [{inner:.4}, {outer:.4}])")]
    Unreachable {
        x: f64,
        y: f64,
        radius: f64,
        inner: f64,
        outer: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0} is singular")]
    SingularMatrix(&'static str),

    #[error("{0} is not positive-definite")]
    NotPositiveDefinite(&'static str),

    #[error("degenerate direction set: motion and force directions are antiparallel or coincide")]
    DegenerateSector,

    #[error("no consistent direction: best direction lies in {best} of {total} sets, {required} required")]
    NoConsistentDirection {
        best: usize,
        required: usize,
        total: usize,
    },

    #[error("demonstration contains no qualifying motion")]
    NoMotion,

    #[error("mean motion direction is not within 90 degrees of the desired direction")]
    OutOfModel,

    #[error("cannot resample {from} Hz to {to} Hz: rates must divide evenly")]
    RateMismatch { from: f64, to: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }
}
