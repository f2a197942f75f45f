use std::io;
use std::path::{Path, PathBuf};

/// Errors raised by IO, file formats, configuration and backends.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] infostat_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}:{line}: field `{field}`: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },

    /// Input that parses but cannot be aligned or is otherwise inconsistent.
    #[error("{0}")]
    Data(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("backend: {0}")]
    Backend(String),

    #[error("fold {fold}: {source}")]
    Fold { fold: usize, source: Box<Error> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Error {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn config(field: impl Into<String>, message: impl ToString) -> Error {
        Error::Config {
            field: field.into(),
            message: message.to_string(),
        }
    }

    /// Process exit status: 1 usage or configuration, 2 data, 3 internal.
    pub fn exit_code(&self) -> i32 {
        use infostat_core::Error as C;
        match self {
            Error::Config { .. } => 1,
            Error::Core(C::InvalidConfig(_)) => 1,
            Error::Core(C::Backend(_)) | Error::Backend(_) => 3,
            Error::Core(_) | Error::Io { .. } | Error::Parse { .. } | Error::Data(_) => 2,
            Error::Fold { source, .. } => source.exit_code(),
        }
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
