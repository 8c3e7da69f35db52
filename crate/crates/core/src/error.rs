use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("field size mismatch: expected {expected} values, got {got}")]
    MeshMismatch { expected: usize, got: usize },

    #[error("mesh refinement closure did not terminate after {0} passes")]
    RefinementClosure(usize),

    #[error("non-convex domain (interior angle {angle:.6} rad at vertex {vertex})")]
    NonConvexDomain { vertex: usize, angle: f64 },

    #[error("non-finite sample while integrating over triangle {0}")]
    NonFiniteSample(usize),

    #[error("initial density is not strictly positive at vertex {vertex} (value {value:e})")]
    NonPositiveInitialDensity { vertex: usize, value: f64 },

    #[error("linear solver failed: {0}")]
    LinearSolver(String),

    #[error(
        "Picard iteration did not converge in {iterations} iterations \
         (last increments: n {increment_n:e}, c {increment_c:e})"
    )]
    PicardDivergence {
        iterations: usize,
        increment_n: f64,
        increment_c: f64,
    },

    #[error("time step failed after {retries} halvings at t = {time}: {source}")]
    StepFailed {
        time: f64,
        retries: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("domain logarithm undefined: n = {value:e} at vertex {vertex}")]
    LogDomain { vertex: usize, value: f64 },

    #[error("symmetric node missing for pair ({i}, {j}) and fallback disabled")]
    MissingSymmetricNode { i: usize, j: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
