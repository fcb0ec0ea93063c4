use std::path::PathBuf;

use crate::scheme::State;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error(transparent)]
    Step(Box<StepFailure>),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at byte {offset}: {msg}")]
    Parse {
        path: PathBuf,
        offset: usize,
        msg: String,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// A time step that could not be completed. Carries the last Newton iterate.
#[derive(Debug, thiserror::Error)]
#[error("time step at t = {t} failed after {iterations} Newton iterations: {reason} (residual {residual:e})")]
pub struct StepFailure {
    pub t: f64,
    pub iterations: usize,
    pub residual: f64,
    pub reason: String,
    pub last_iterate: Option<State>,
}

impl From<StepFailure> for Error {
    fn from(f: StepFailure) -> Self {
        Error::Step(Box::new(f))
    }
}
