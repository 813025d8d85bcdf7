//! File formats, parallel stage drivers and the `pmax` command line on top
//! of [`pmax_core`].
//!
//! Every file written starts with one header line, `# ` followed by a JSON
//! object holding the artifact version, the subcommand, its fully resolved
//! configuration and any run metadata. CSV readers treat `#` lines as
//! comments.

pub mod cli;
pub mod files;
pub mod header;
pub mod numfmt;
pub mod parallel;
pub mod polyjson;
pub mod selftest;

use std::path::PathBuf;

pub use header::{Header, VERSION};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 2;
    pub const RESOURCE: i32 = 3;
    pub const INVARIANT: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] pmax_core::Error),
    #[error("{0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use pmax_core::Error as E;
        match self {
            CliError::Core(E::Resource { .. }) => exit::RESOURCE,
            CliError::Core(E::Invariant(_)) | CliError::Invariant(_) => exit::INVARIANT,
            _ => exit::INPUT,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
