use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// A problem with the experiment config; `line` is 1-based when known.
    #[error("{}", config_message(origin, *line, msg))]
    Config {
        origin: String,
        line: Option<usize>,
        msg: String,
    },

    #[error("unknown preset {0:?}; available: {1}")]
    UnknownPreset(String, String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Run {
        context: String,
        #[source]
        source: stereo_mcmc::Error,
    },

    #[error(transparent)]
    Core(#[from] stereo_mcmc::Error),

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

fn config_message(origin: &str, line: Option<usize>, msg: &str) -> String {
    match line {
        Some(l) => format!("{origin}:{l}: {msg}"),
        None => format!("{origin}: {msg}"),
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
