use serde::{Deserialize, Serialize};

use crate::error::VolumeError;

/// Relative tolerance used when comparing voxel spacings of two grids.
pub const SPACING_REL_TOL: f64 = 1e-6;

/// Voxel lattice with physical spacing in millimetres.
///
/// Linear indices are x-fastest: `i = x + nx * (y + ny * z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub dims: [usize; 3],
    pub spacing_mm: [f64; 3],
    #[serde(default)]
    pub origin_mm: [f64; 3],
}

impl GridGeometry {
    pub fn new(dims: [usize; 3], spacing_mm: [f64; 3]) -> Result<Self, VolumeError> {
        Self::with_origin(dims, spacing_mm, [0.0; 3])
    }

    pub fn with_origin(
        dims: [usize; 3],
        spacing_mm: [f64; 3],
        origin_mm: [f64; 3],
    ) -> Result<Self, VolumeError> {
        let g = Self {
            dims,
            spacing_mm,
            origin_mm,
        };
        g.validate()?;
        Ok(g)
    }

    /// Checks the dims/spacing invariants. Useful after deserializing.
    pub fn validate(&self) -> Result<(), VolumeError> {
        if self.dims.contains(&0) {
            return Err(VolumeError::InvalidGeometry(format!(
                "all dimensions must be >= 1, got {:?}",
                self.dims
            )));
        }
        if self.spacing_mm.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(VolumeError::InvalidGeometry(format!(
                "spacing must be positive and finite, got {:?}",
                self.spacing_mm
            )));
        }
        if self.dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).is_none() {
            return Err(VolumeError::InvalidGeometry(format!(
                "voxel count overflows for dims {:?}",
                self.dims
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index_of(&self, [x, y, z]: [usize; 3]) -> usize {
        debug_assert!(x < self.dims[0] && y < self.dims[1] && z < self.dims[2]);
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords_of(&self, index: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    pub fn contains(&self, coords: [i64; 3]) -> bool {
        coords
            .iter()
            .zip(self.dims.iter())
            .all(|(&c, &d)| c >= 0 && (c as u64) < d as u64)
    }

    /// Same dims, spacing equal within [`SPACING_REL_TOL`].
    pub fn is_compatible(&self, other: &GridGeometry) -> bool {
        self.dims == other.dims
            && self
                .spacing_mm
                .iter()
                .zip(other.spacing_mm.iter())
                .all(|(&a, &b)| (a - b).abs() <= SPACING_REL_TOL * a.abs().max(b.abs()))
    }

    pub fn voxel_volume_mm3(&self) -> f64 {
        self.spacing_mm.iter().product()
    }

    /// Physical distance between the centres of the first and last voxel.
    pub fn diagonal_mm(&self) -> f64 {
        (0..3)
            .map(|a| {
                let e = (self.dims[a] - 1) as f64 * self.spacing_mm[a];
                e * e
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Voxel centre position in the grid frame (index times spacing, origin ignored).
    pub fn center_mm(&self, [x, y, z]: [usize; 3]) -> [f64; 3] {
        [
            x as f64 * self.spacing_mm[0],
            y as f64 * self.spacing_mm[1],
            z as f64 * self.spacing_mm[2],
        ]
    }
}
