//! Binary mask volumes, their geometry, and NRRD I/O.

mod geometry;
mod mask;
pub mod nrrd;

use serde::{Deserialize, Serialize};

pub use geometry::{GridGeometry, SPACING_REL_TOL};
pub use mask::{MaskVolume, VolumeWarning};
pub use nrrd::{read_nrrd, write_nrrd, Encoding, LabelPolicy, NrrdHeader};

use crate::error::VolumeError;

/// Emptiness state of a prediction / ground-truth pair on a shared grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairStatus {
    Ok,
    EmptyPrediction,
    EmptyGroundTruth,
    BothEmpty,
}

impl PairStatus {
    pub fn is_degenerate(self) -> bool {
        self != PairStatus::Ok
    }
}

/// Checks grid compatibility and reports empty masks.
pub fn validate_pair(pred: &MaskVolume, gt: &MaskVolume) -> Result<PairStatus, VolumeError> {
    if !pred.geometry().is_compatible(gt.geometry()) {
        return Err(VolumeError::mismatch(pred.geometry(), gt.geometry()));
    }
    Ok(match (pred.is_empty(), gt.is_empty()) {
        (false, false) => PairStatus::Ok,
        (true, false) => PairStatus::EmptyPrediction,
        (false, true) => PairStatus::EmptyGroundTruth,
        (true, true) => PairStatus::BothEmpty,
    })
}
