use std::fmt;

use serde::{Deserialize, Serialize};

use super::GridGeometry;
use crate::error::VolumeError;

/// Non-fatal geometry issues found while loading a volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VolumeWarning {
    /// No `space directions` or `spacings` field; spacing defaulted to 1 mm.
    MissingSpacing,
    /// Axis vectors are not aligned with the grid; spacing is their norm.
    ObliqueGeometry { directions: [[f64; 3]; 3] },
}

impl fmt::Display for VolumeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VolumeWarning::MissingSpacing => {
                write!(f, "no spacing information in header, assuming 1 mm per axis")
            }
            VolumeWarning::ObliqueGeometry { directions } => write!(
                f,
                "oblique space directions {directions:?}, using per-axis vector norms as spacing"
            ),
        }
    }
}

/// Dense binary mask on a [`GridGeometry`].
#[derive(Debug, Clone, PartialEq)]
pub struct MaskVolume {
    geometry: GridGeometry,
    voxels: Vec<bool>,
    foreground_count: usize,
    warnings: Vec<VolumeWarning>,
}

impl MaskVolume {
    pub fn from_voxels(geometry: GridGeometry, voxels: Vec<bool>) -> Result<Self, VolumeError> {
        geometry.validate()?;
        if voxels.len() != geometry.len() {
            return Err(VolumeError::LengthMismatch {
                expected: geometry.len(),
                found: voxels.len(),
            });
        }
        let foreground_count = voxels.iter().filter(|&&v| v).count();
        Ok(Self {
            geometry,
            voxels,
            foreground_count,
            warnings: Vec::new(),
        })
    }

    pub fn empty(geometry: GridGeometry) -> Self {
        Self {
            voxels: vec![false; geometry.len()],
            geometry,
            foreground_count: 0,
            warnings: Vec::new(),
        }
    }

    /// Builds a mask by evaluating `f` at every voxel coordinate.
    pub fn from_fn(geometry: GridGeometry, mut f: impl FnMut([usize; 3]) -> bool) -> Self {
        let [nx, ny, nz] = geometry.dims;
        let mut voxels = Vec::with_capacity(geometry.len());
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    voxels.push(f([x, y, z]));
                }
            }
        }
        let foreground_count = voxels.iter().filter(|&&v| v).count();
        Self {
            geometry,
            voxels,
            foreground_count,
            warnings: Vec::new(),
        }
    }

    pub(crate) fn with_warnings(mut self, warnings: Vec<VolumeWarning>) -> Self {
        self.warnings = warnings;
        self
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn voxels(&self) -> &[bool] {
        &self.voxels
    }

    pub fn into_voxels(self) -> Vec<bool> {
        self.voxels
    }

    pub fn foreground_count(&self) -> usize {
        self.foreground_count
    }

    pub fn is_empty(&self) -> bool {
        self.foreground_count == 0
    }

    pub fn warnings(&self) -> &[VolumeWarning] {
        &self.warnings
    }

    #[inline]
    pub fn get(&self, coords: [usize; 3]) -> bool {
        self.voxels[self.geometry.index_of(coords)]
    }

    /// Like [`get`](Self::get) but treats out-of-grid coordinates as background.
    #[inline]
    pub fn get_signed(&self, [x, y, z]: [i64; 3]) -> bool {
        if self.geometry.contains([x, y, z]) {
            self.get([x as usize, y as usize, z as usize])
        } else {
            false
        }
    }

    pub fn volume_mm3(&self) -> f64 {
        self.foreground_count as f64 * self.geometry.voxel_volume_mm3()
    }

    /// Iterator over linear indices of foreground voxels, ascending.
    pub fn foreground_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.voxels
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| v.then_some(i))
    }

    /// Tight voxel bounding box `(min, max)` inclusive, `None` when empty.
    pub fn bounding_box(&self) -> Option<([usize; 3], [usize; 3])> {
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        let mut any = false;
        for i in self.foreground_indices() {
            let c = self.geometry.coords_of(i);
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
            any = true;
        }
        any.then_some((lo, hi))
    }

    /// Recounts foreground voxels from the buffer.
    pub fn recount(&self) -> usize {
        self.voxels.iter().filter(|&&v| v).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_mismatch_is_rejected() {
        let g = GridGeometry::new([2, 2, 2], [1.0; 3]).unwrap();
        assert!(matches!(
            MaskVolume::from_voxels(g, vec![true; 7]),
            Err(VolumeError::LengthMismatch { expected: 8, found: 7 })
        ));
    }

    #[test]
    fn foreground_count_matches_buffer() {
        let g = GridGeometry::new([3, 3, 3], [1.0, 2.0, 0.5]).unwrap();
        let m = MaskVolume::from_fn(g, |[x, y, z]| (x + y + z) % 2 == 0);
        assert_eq!(m.foreground_count(), m.recount());
        assert_eq!(m.foreground_count(), 14);
        assert_eq!(m.volume_mm3(), 14.0);
    }

    #[test]
    fn bounding_box_and_signed_access() {
        let g = GridGeometry::new([5, 5, 5], [1.0; 3]).unwrap();
        let m = MaskVolume::from_fn(g, |c| c == [1, 2, 3] || c == [3, 1, 4]);
        assert_eq!(m.bounding_box(), Some(([1, 1, 3], [3, 2, 4])));
        assert!(m.get_signed([1, 2, 3]));
        assert!(!m.get_signed([-1, 2, 3]));
        assert!(!m.get_signed([5, 0, 0]));
        assert_eq!(MaskVolume::empty(g).bounding_box(), None);
    }
}
