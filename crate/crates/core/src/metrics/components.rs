use std::collections::VecDeque;

use crate::volume::{GridGeometry, MaskVolume};

/// One 26-connected foreground component.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// 1-based, assigned in order of each component's smallest linear index.
    pub id: u32,
    /// Linear indices of member voxels, ascending.
    pub voxels: Vec<usize>,
}

impl Component {
    pub fn voxel_count(&self) -> usize {
        self.voxels.len()
    }

    pub fn to_mask(&self, geometry: GridGeometry) -> MaskVolume {
        let mut v = vec![false; geometry.len()];
        for &i in &self.voxels {
            v[i] = true;
        }
        MaskVolume::from_voxels(geometry, v).expect("component indices come from this geometry")
    }
}

/// Per-voxel component labels (0 = background) with component sizes.
#[derive(Debug, Clone)]
pub struct ComponentLabels {
    pub labels: Vec<u32>,
    pub sizes: Vec<usize>,
}

impl ComponentLabels {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }
}

pub fn label_components(m: &MaskVolume) -> ComponentLabels {
    let g = m.geometry();
    let [nx, ny, nz] = g.dims;
    let v = m.voxels();
    let mut labels = vec![0u32; v.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();

    for seed in 0..v.len() {
        if !v[seed] || labels[seed] != 0 {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        labels[seed] = label;
        queue.push_back(seed);
        let mut size = 0usize;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let [x, y, z] = g.coords_of(i);
            for z2 in z.saturating_sub(1)..=(z + 1).min(nz - 1) {
                for y2 in y.saturating_sub(1)..=(y + 1).min(ny - 1) {
                    let row = nx * (y2 + ny * z2);
                    for x2 in x.saturating_sub(1)..=(x + 1).min(nx - 1) {
                        let j = row + x2;
                        if v[j] && labels[j] == 0 {
                            labels[j] = label;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        sizes.push(size);
    }
    ComponentLabels { labels, sizes }
}

/// Maximal 26-connected components of the foreground.
pub fn connected_components(m: &MaskVolume) -> Vec<Component> {
    let cl = label_components(m);
    let mut comps: Vec<Component> = cl
        .sizes
        .iter()
        .enumerate()
        .map(|(k, &n)| Component {
            id: k as u32 + 1,
            voxels: Vec::with_capacity(n),
        })
        .collect();
    for (i, &l) in cl.labels.iter().enumerate() {
        if l != 0 {
            comps[l as usize - 1].voxels.push(i);
        }
    }
    comps
}
