use crate::volume::{GridGeometry, MaskVolume};

/// Foreground voxels with at least one 6-neighbour that is background or
/// outside the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSet {
    geometry: GridGeometry,
    indices: Vec<usize>,
    points: Vec<[usize; 3]>,
}

impl SurfaceSet {
    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    /// Surface voxel coordinates in ascending linear-index order.
    pub fn points(&self) -> &[[usize; 3]] {
        &self.points
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn extract_surface(m: &MaskVolume) -> SurfaceSet {
    let g = *m.geometry();
    let [nx, ny, nz] = g.dims;
    let v = m.voxels();
    let sx = 1;
    let sy = nx;
    let sz = nx * ny;
    let mut indices = Vec::new();
    let mut points = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            let row = nx * (y + ny * z);
            for x in 0..nx {
                let i = row + x;
                if !v[i] {
                    continue;
                }
                let boundary = x == 0
                    || x + 1 == nx
                    || y == 0
                    || y + 1 == ny
                    || z == 0
                    || z + 1 == nz
                    || !v[i - sx]
                    || !v[i + sx]
                    || !v[i - sy]
                    || !v[i + sy]
                    || !v[i - sz]
                    || !v[i + sz];
                if boundary {
                    indices.push(i);
                    points.push([x, y, z]);
                }
            }
        }
    }
    SurfaceSet {
        geometry: g,
        indices,
        points,
    }
}
