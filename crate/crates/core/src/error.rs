use std::path::PathBuf;

use thiserror::Error;

use crate::volume::GridGeometry;

#[derive(Debug, Error)]
pub enum VolumeError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed NRRD header: {0}")]
    MalformedHeader(String),
    #[error("unsupported NRRD dimension {0} (only 3 is accepted)")]
    UnsupportedDimension(usize),
    #[error("unsupported NRRD element type `{0}` (accepted: uint8, int16, uint16, int32)")]
    UnsupportedType(String),
    #[error("unsupported NRRD encoding `{0}` (accepted: raw, gzip)")]
    UnsupportedEncoding(String),
    #[error("unsupported NRRD feature: {0}")]
    UnsupportedFeature(String),
    #[error("truncated data: expected {expected} bytes, found {found}")]
    TruncatedData { expected: usize, found: usize },
    #[error("failed to inflate gzip payload: {0}")]
    Decompression(std::io::Error),
    #[error("invalid grid geometry: {0}")]
    InvalidGeometry(String),
    #[error("voxel buffer has {found} entries, geometry requires {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error(
        "geometry mismatch: dims {:?} spacing {:?} vs dims {:?} spacing {:?}",
        .pred.dims, .pred.spacing_mm, .gt.dims, .gt.spacing_mm
    )]
    GeometryMismatch {
        pred: Box<GridGeometry>,
        gt: Box<GridGeometry>,
    },
}

impl VolumeError {
    pub(crate) fn mismatch(a: &GridGeometry, b: &GridGeometry) -> Self {
        VolumeError::GeometryMismatch {
            pred: Box::new(*a),
            gt: Box::new(*b),
        }
    }
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Geometry(#[from] VolumeError),
    #[error("distance transform needs at least one seed voxel")]
    EmptySeeds,
    #[error("directed Hausdorff distance needs a nonempty source surface")]
    EmptySurface,
}

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("invalid thresholds for `{organ}`: {reason}")]
    InvalidThresholds { organ: String, reason: String },
    #[error("threshold invariant violated for `{organ}` field `{field}`: {reason}")]
    InvariantViolation {
        organ: String,
        field: &'static str,
        reason: String,
    },
    #[error("malformed threshold config: {0}")]
    MalformedConfig(String),
    #[error("no thresholds configured for organ `{0}`")]
    UnknownOrgan(String),
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("phantom does not fit the grid: {0}")]
    SpecOutOfBounds(String),
    #[error("oracle input has {voxels} voxels, limit is {limit}")]
    VolumeTooLargeForOracle { voxels: usize, limit: usize },
    #[error("phantom rejected: {0}")]
    Rejected(String),
    #[error(transparent)]
    Volume(#[from] VolumeError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("report serialization failed: {0}")]
    Serialization(String),
    #[error("could not build worker pool: {0}")]
    ThreadPool(String),
    #[error("parallelism must be a positive integer")]
    ZeroParallelism,
}
