use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("descriptor mismatch: {0}")]
    DescriptorMismatch(String),
    #[error("sequence has no frames")]
    EmptySequence,
    #[error("map shape error: {0}")]
    MapShape(String),
    #[error("map series gap: {0}")]
    MapSeriesGap(String),
    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("sample out of range: {0}")]
    Range(String),
    #[error("kernel {kernel}x{kernel} larger than {width}x{height} image")]
    KernelTooLarge {
        kernel: usize,
        width: usize,
        height: usize,
    },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("image too small: {0}")]
    TooSmall(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("sequence length mismatch: {left} vs {right} frames")]
    SequenceLength { left: usize, right: usize },
    #[error("saliency map sums to zero")]
    DegenerateSaliency,
    #[error("non-finite value: {0}")]
    Numeric(String),
    #[error("saliency pyramid mismatch: {0}")]
    PyramidMismatch(String),
    #[error("metric {0} requires disparity maps")]
    DisparityRequired(&'static str),
    #[error("metric {metric} needs at least {needed} frames, got {got}")]
    NeedsTemporalContext {
        metric: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("no edge pixels found")]
    NoEdges,
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
    #[error("empty report")]
    EmptyReport,
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
