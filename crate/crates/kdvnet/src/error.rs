use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("not a {format} file (magic bytes {found:02x?})")]
    BadMagic { format: &'static str, found: Vec<u8> },

    #[error("{format} version {major}.{minor} is not readable (supported major version {supported})")]
    Version {
        format: &'static str,
        major: u16,
        minor: u16,
        supported: u16,
    },

    #[error("{format} file is truncated: expected {expected} bytes, found {found}")]
    Truncated {
        format: &'static str,
        expected: u64,
        found: u64,
    },

    #[error("{format} checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum {
        format: &'static str,
        stored: u32,
        computed: u32,
    },

    #[error("malformed {format} file: {detail}")]
    Malformed { format: &'static str, detail: String },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] kdvnet_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| Error::Io {
            path: path.into(),
            source,
        })
    }
}
