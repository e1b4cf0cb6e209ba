use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// A sampling grid is too coarse. `minimal` carries the smallest
    /// admissible sample count when one can be computed.
    #[error("resolution: {message}")]
    Resolution {
        message: String,
        minimal: Option<usize>,
    },

    #[error("numeric degeneracy: {0}")]
    NumericDegeneracy(String),

    #[error("quality factor undefined: mirror reflectivity is zero")]
    UndefinedQuality,

    #[error("outside ray-model domain: {0}")]
    ModelDomain(String),

    #[error("incompatible grids: {0}")]
    IncompatibleGrid(String),

    #[error("launch position: {0}")]
    LaunchPosition(String),

    #[error("domain: {0}")]
    Domain(String),

    #[error("numeric inconsistency: {0}")]
    NumericInconsistency(String),
}

impl Error {
    pub(crate) fn resolution(message: impl Into<String>) -> Self {
        Error::Resolution {
            message: message.into(),
            minimal: None,
        }
    }
}
