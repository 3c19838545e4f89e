//! Failure-candidate triage for organ-at-risk segmentation.
//!
//! Predicted and ground-truth masks are compared with Dice overlap and
//! Hausdorff distance (in millimetres, on anisotropic grids), and each case
//! is binned by per-organ thresholds into good / over-segmented /
//! under-segmented / mixed verdicts.

pub mod classifier;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod serde_mm;
pub mod synth;
pub mod volume;

pub use error::{ClassifierError, MetricsError, PipelineError, SynthError, VolumeError};
