use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("scene generation failed: {constraint} (placed {placed} of {wanted} scatterers after {retries} retries)")]
    Placement {
        constraint: String,
        placed: usize,
        wanted: usize,
        retries: usize,
    },

    #[error("invalid scene config: {0}")]
    SceneConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("route index {index} out of range for route of {len} points")]
    RouteIndex { index: usize, len: usize },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("scenario `{scenario}` has {samples} samples, too few to populate train/val/test")]
    ScenarioTooSmall { scenario: String, samples: usize },

    #[error("singular normal equations (ridge_lambda = {lambda}); use ridge_lambda > 0")]
    Singular { lambda: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid fit input: {0}")]
    Fit(String),

    #[error("scoring error: {0}")]
    Score(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing dataset for task `{task}`: {path}")]
    MissingDataset { task: String, path: PathBuf },

    #[error("missing run artifacts: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingArtifacts(Vec<PathBuf>),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
