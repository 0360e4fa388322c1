use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid map: {0}")]
    Map(String),

    #[error(
        "{family} generator produced no valid map after {attempts} attempts (env seed {env_seed})"
    )]
    Generation {
        family: &'static str,
        env_seed: u64,
        attempts: usize,
    },

    #[error("cannot sample from an empty goal space")]
    EmptyGoalSpace,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
