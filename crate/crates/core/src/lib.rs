//! Automatic salient-object extraction from video.
//!
//! The pipeline runs per frame: a bottom-up saliency map feeds a pixel-wise
//! Kalman filter whose Gaussian state yields an eye-focus density; that
//! density drives spatial mixture priors, which fuse with the previous
//! segmentation through a scalar-gain update; color mixture likelihoods and
//! the priors assemble a binary MRF energy that an exact min-cut solves.
//!
//! Every stage is deterministic: given the same inputs and seed, results are
//! bitwise identical across runs and worker counts.

pub mod appearance;
pub mod attention;
pub mod config;
pub mod error;
pub mod eval;
pub mod gmm;
pub mod mask;
pub mod maxflow;
pub mod mrf;
pub mod parallel;
pub mod pipeline;
pub mod prior;
pub mod pyramid;
pub mod raster;
pub mod rng;
pub mod saliency;
pub mod synth;

pub use config::SegConfig;
pub use error::{CoreError, Result};
pub use mask::LabelField;
pub use pipeline::{FramePipeline, StageTimes, Strategy};
pub use raster::{FilterKernel, PixelGrid};
