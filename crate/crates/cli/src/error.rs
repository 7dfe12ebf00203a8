use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown {registry} {name:?} (not in the {registry} registry; known: {known})")]
    Resolution {
        registry: String,
        name: String,
        known: String,
    },

    #[error("parameter out of range: {0}")]
    Range(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Experiment {
        context: String,
        #[source]
        source: irrmc::Error,
    },

    #[error(transparent)]
    Core(#[from] irrmc::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Attaches the experiment name to a core error.
pub(crate) fn ctx<T>(r: irrmc::Result<T>, context: impl Into<String>) -> Result<T> {
    r.map_err(|source| CliError::Experiment {
        context: context.into(),
        source,
    })
}
