use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] commsim::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("serialisation failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for bad input, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        use commsim::Error as E;
        match self {
            Self::Config(_) | Self::Io { .. } => 2,
            Self::Core(
                E::Parse { .. }
                | E::EmptyDecomposition
                | E::InvalidRegister(_)
                | E::InvalidArgument(_)
                | E::DimensionMismatch { .. }
                | E::NotPowerOfTwo(_)
                | E::NotNormalized(_),
            ) => 2,
            Self::Core(_) | Self::Serialize(_) => 3,
        }
    }
}
