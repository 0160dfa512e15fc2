use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error(
        "player {player} exceeded the attempt cap of {cap} on a level with difficulty {difficulty}"
    )]
    AttemptCapExceeded {
        player: usize,
        cap: u64,
        difficulty: f64,
    },

    #[error("the whole population churned at level index {level}")]
    Depleted { level: usize },

    #[error("covariance matrix lost positive definiteness at generation {generation}")]
    NotPositiveDefinite { generation: usize },

    #[error("objective failed at evaluation {evaluation}: {source}")]
    Objective {
        evaluation: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{file}: row {row}, column `{column}`: {message}")]
    Schema {
        file: String,
        row: u64,
        column: String,
        message: String,
    },

    #[error("level sets differ: {0}")]
    LevelMismatch(String),

    #[error("config: {0}")]
    Config(String),

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
