//! Error type shared by all core modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    SizeMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("buffer length {got} does not match {width}x{height}x{channels}")]
    BadBufferLength {
        width: usize,
        height: usize,
        channels: usize,
        got: usize,
    },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("expected a single-channel grid, got {0} channels")]
    NotSingleChannel(usize),

    #[error("expected an RGB grid, got {0} channels")]
    NotRgb(usize),

    #[error("kernel dimensions must be odd, got {rows}x{cols}")]
    EvenKernel { rows: usize, cols: usize },

    #[error("pyramid depth {requested} exceeds maximum {max} for a {width}x{height} image")]
    PyramidTooDeep {
        requested: usize,
        max: usize,
        width: usize,
        height: usize,
    },

    #[error("pyramid has {available} levels, operation needs level {needed}")]
    InsufficientPyramidDepth { available: usize, needed: usize },

    #[error("degenerate stochastic saliency map: zero variance and constant mean everywhere")]
    DegenerateSaliency,

    #[error("sample weights are all zero")]
    AllZeroWeights,

    #[error("{requested} mixture components requested but only {available} samples carry weight")]
    TooFewSamples { requested: usize, available: usize },

    #[error("seed coordinate ({x}, {y}) outside {width}x{height} grid")]
    SeedOutOfRange {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("config key `{key}`: {reason}")]
    BadConfigValue { key: String, reason: String },

    #[error("unknown config key `{key}`")]
    UnknownConfigKey { key: String },

    #[error("empty frame sequence")]
    EmptyInput,

    #[error("strategy `manual` requires a seed set for frame 0")]
    MissingSeeds,
}

impl CoreError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        CoreError::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
