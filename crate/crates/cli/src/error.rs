use std::path::{Path, PathBuf};

use explicable::formats::FormatError;
use explicable::loss::LossError;
use explicable::metrics::MetricsError;
use explicable::simulation::SimError;
use explicable::taxonomy::TaxonomyError;
use explicable::trainer::TrainError;
use explicable::weights::WeightError;
use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{message}")]
    Invalid { kind: &'static str, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Invalid { kind, .. } => kind,
            CliError::Io { .. } => "io-error",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Invalid { .. } => EXIT_VALIDATION,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    /// The single stderr line printed on failure.
    pub fn line(&self) -> String {
        format!("error kind={} msg={:?}", self.kind(), self.to_string())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn invalid(kind: &'static str, message: impl Into<String>) -> Self {
        CliError::Invalid {
            kind,
            message: message.into(),
        }
    }

    /// Prefixes a validation message with the file it came from.
    pub fn in_file(self, path: &Path) -> Self {
        match self {
            CliError::Invalid { kind, message } => CliError::Invalid {
                kind,
                message: format!("{}: {message}", path.display()),
            },
            other => other,
        }
    }
}

macro_rules! invalid_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Invalid { kind: e.kind(), message: e.to_string() }
            }
        })*
    };
}

invalid_from!(
    FormatError,
    LossError,
    MetricsError,
    SimError,
    TaxonomyError,
    TrainError,
    WeightError
);
