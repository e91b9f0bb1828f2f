use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}, field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error(transparent)]
    Core(#[from] platoon_shield::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 2 configuration, 3 divergence, 4 reconstructibility,
    /// 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use platoon_shield::Error as E;
        match self {
            CliError::Parse { .. } | CliError::Usage(_) => 2,
            CliError::Core(E::Divergence { .. }) => 3,
            CliError::Core(E::NotReconstructible { .. }) => 4,
            CliError::Core(
                E::Config(_) | E::InvalidGains { .. } | E::InvalidParameter(_) | E::NotHurwitz { .. },
            ) => 2,
            CliError::Core(_) => 1,
            CliError::Io { .. } => 1,
        }
    }
}
