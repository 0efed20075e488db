use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A label vector with a single class has a zero centered kernel.
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("degenerate kernel: centered Frobenius norm {norm:e} is below {threshold:e}")]
    DegenerateKernel { norm: f64, threshold: f64 },

    #[error("balanced sampling requested but class {class} has no samples")]
    ClassCoverage { class: usize },

    #[error(
        "feature {feature} appeared in {plus} PLUS tasks and was absent from {base} BASE tasks \
         (need {min_coverage} each); increase tasks to at least {min_tasks}"
    )]
    Coverage { feature: usize, plus: usize, base: usize, min_coverage: usize, min_tasks: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("linear program is infeasible: {0}")]
    Infeasible(String),

    #[error("linear program solver failed: {0}")]
    Solver(String),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
