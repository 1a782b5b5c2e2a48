use thiserror::Error;

use crate::dataset::DatasetError;
use crate::eval::MetricError;
use crate::learner::{LearnError, ModelFileError};
use crate::post::PostError;
use crate::scenario::{ConfigError, GenerateError, RangeError};
use crate::schema::{SchemaError, Violation};
use crate::text::TextError;
use crate::wire::WireError;

/// Coarse failure class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Parse,
    Integrity,
    Divergence,
    Io,
    Input,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Violation(#[from] Violation),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Range(#[from] RangeError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Post(#[from] PostError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    ModelFile(#[from] ModelFileError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Generate(GenerateError::Config(_)) => ErrorKind::Config,
            Error::Generate(GenerateError::Exhausted { .. }) => ErrorKind::Config,
            Error::Learn(LearnError::Config(_)) => ErrorKind::Config,
            Error::Learn(LearnError::Divergence { .. }) => ErrorKind::Divergence,
            Error::Learn(LearnError::EmptyDataset) => ErrorKind::Input,
            Error::Text(TextError::Parse { .. }) | Error::Wire(_) | Error::ModelFile(_) => ErrorKind::Parse,
            Error::Text(_) | Error::Range(_) => ErrorKind::Input,
            Error::Dataset(DatasetError::Io { .. }) => ErrorKind::Io,
            Error::Dataset(DatasetError::Malformed { .. }) => ErrorKind::Parse,
            Error::Dataset(DatasetError::Stratification { .. } | DatasetError::Ratio(_)) => {
                ErrorKind::Config
            }
            Error::Dataset(_) | Error::Violation(_) | Error::Schema(_) => ErrorKind::Integrity,
            Error::Post(PostError::Threshold(_)) => ErrorKind::Config,
            Error::Post(_) | Error::Metric(_) => ErrorKind::Input,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
