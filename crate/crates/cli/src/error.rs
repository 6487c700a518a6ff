use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    At {
        path: PathBuf,
        #[source]
        source: mpm_core::Error,
    },

    #[error(transparent)]
    Core(#[from] mpm_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl CliError {
    /// 1 for bad input, 2 for I/O failures, 3 for internal errors.
    pub fn exit_code(&self) -> u8 {
        let core = |e: &mpm_core::Error| match e {
            mpm_core::Error::Io(_) => 2,
            e if e.is_validation() => 1,
            _ => 3,
        };
        match self {
            CliError::Usage(_) => 1,
            CliError::At { source, .. } => core(source),
            CliError::Core(e) => core(e),
            CliError::Io { .. } | CliError::Image { .. } => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Attaches a path to errors from file operations.
pub trait Context<T> {
    fn at(self, path: &Path) -> Result<T>;
}

impl<T> Context<T> for mpm_core::Result<T> {
    fn at(self, path: &Path) -> Result<T> {
        self.map_err(|source| CliError::At {
            path: path.to_path_buf(),
            source,
        })
    }
}

impl<T> Context<T> for std::io::Result<T> {
    fn at(self, path: &Path) -> Result<T> {
        self.map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
