use std::path::PathBuf;

/// Errors produced by the core library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quality {0} has a zero scale factor; tables cannot be unscaled from it")]
    DegenerateScale(u8),

    #[error("jpeg parse error at byte {offset}: {reason}")]
    Parse { offset: usize, reason: String },

    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("image {width}x{height} is smaller than the required {min}x{min}")]
    TooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("fusion: {0}")]
    Fusion(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("previous energy is zero; acceptance ratio undefined")]
    DegenerateEnergy,

    #[error("clustering: {0}")]
    Cluster(String),

    #[error("annealing iteration {iteration}: {source}")]
    Anneal {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    ImageIo {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(offset: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Short stable identifier, used by the CLI for machine-readable errors.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DegenerateScale(_) => "degenerate-scale",
            Error::Parse { .. } => "parse",
            Error::DimensionMismatch(..) => "dimension-mismatch",
            Error::TooSmall { .. } => "too-small",
            Error::Fusion(_) => "fusion",
            Error::Format(_) => "format",
            Error::DegenerateEnergy => "degenerate-energy",
            Error::Cluster(_) => "cluster",
            Error::Anneal { .. } => "anneal",
            Error::ImageIo { .. } => "image-io",
            Error::Io(_) => "io",
        }
    }
}
