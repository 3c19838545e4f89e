//! Exact Euclidean distance transform on anisotropic grids.
//!
//! Separable: one pass per axis, each computing the lower envelope of the
//! parabolas `w (q - p)^2 + g(p)` with `w = spacing^2`. Squared distances are
//! carried between passes and the square root taken once at the end.

use crate::error::{MetricsError, VolumeError};
use crate::volume::GridGeometry;

/// Per-voxel distance in mm to the nearest seed voxel centre.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    geometry: GridGeometry,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, coords: [usize; 3]) -> f64 {
        self.values[self.geometry.index_of(coords)]
    }
}

/// Distance transform of `seeds` over the whole grid.
pub fn distance_transform(
    seeds: &[[usize; 3]],
    geometry: &GridGeometry,
) -> Result<DistanceField, MetricsError> {
    if seeds.is_empty() {
        return Err(MetricsError::EmptySeeds);
    }
    geometry.validate()?;
    if let Some(p) = seeds
        .iter()
        .find(|p| (0..3).any(|a| p[a] >= geometry.dims[a]))
    {
        return Err(VolumeError::InvalidGeometry(format!(
            "seed {p:?} outside grid {:?}",
            geometry.dims
        ))
        .into());
    }
    let b = BoxField::compute(seeds, [0; 3], geometry.dims, geometry.spacing_mm);
    Ok(DistanceField {
        geometry: *geometry,
        values: b.sq.into_iter().map(f64::sqrt).collect(),
    })
}

/// Squared distance field restricted to an axis-aligned sub-box.
///
/// Exact for any voxel inside the box provided every seed is inside it.
pub(crate) struct BoxField {
    lo: [usize; 3],
    dims: [usize; 3],
    sq: Vec<f64>,
}

impl BoxField {
    pub(crate) fn compute(
        seeds: &[[usize; 3]],
        lo: [usize; 3],
        dims: [usize; 3],
        spacing: [f64; 3],
    ) -> Self {
        let [nx, ny, nz] = dims;
        let n = nx * ny * nz;
        let mut sq = vec![f64::INFINITY; n];
        for p in seeds {
            let (x, y, z) = (p[0] - lo[0], p[1] - lo[1], p[2] - lo[2]);
            sq[x + nx * (y + ny * z)] = 0.0;
        }

        let longest = nx.max(ny).max(nz);
        let mut scratch = Envelope::with_capacity(longest);
        let mut line = vec![0.0; longest];
        let mut out = vec![0.0; longest];

        // (stride, line length, spacing) per axis
        let passes = [
            (1usize, nx, spacing[0]),
            (nx, ny, spacing[1]),
            (nx * ny, nz, spacing[2]),
        ];
        for (axis, &(stride, len, s)) in passes.iter().enumerate() {
            let w = s * s;
            for start in line_starts(axis, dims) {
                for (k, v) in line[..len].iter_mut().enumerate() {
                    *v = sq[start + k * stride];
                }
                if scratch.transform(&line[..len], &mut out[..len], w) {
                    for (k, v) in out[..len].iter().enumerate() {
                        sq[start + k * stride] = *v;
                    }
                }
            }
        }
        BoxField { lo, dims, sq }
    }

    #[inline]
    pub(crate) fn squared_at(&self, p: [usize; 3]) -> f64 {
        let (x, y, z) = (p[0] - self.lo[0], p[1] - self.lo[1], p[2] - self.lo[2]);
        self.sq[x + self.dims[0] * (y + self.dims[1] * z)]
    }
}

/// First linear index of every scan line along `axis`.
fn line_starts(axis: usize, [nx, ny, nz]: [usize; 3]) -> Vec<usize> {
    match axis {
        0 => (0..ny * nz).map(|r| r * nx).collect(),
        1 => (0..nz)
            .flat_map(|z| (0..nx).map(move |x| x + nx * ny * z))
            .collect(),
        _ => (0..nx * ny).collect(),
    }
}

struct Envelope {
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            sites: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    /// `out[q] = min_p w (q-p)^2 + f[p]`. Returns false (and leaves `out`
    /// untouched) when `f` has no finite entry.
    fn transform(&mut self, f: &[f64], out: &mut [f64], w: f64) -> bool {
        self.sites.clear();
        self.bounds.clear();
        for (q, &fq) in f.iter().enumerate() {
            if !fq.is_finite() {
                continue;
            }
            if self.sites.is_empty() {
                self.sites.push(q);
                self.bounds.push(f64::NEG_INFINITY);
                continue;
            }
            let mut s;
            loop {
                let p = *self.sites.last().unwrap();
                s = intersection(p, f[p], q, fq, w);
                if s <= *self.bounds.last().unwrap() {
                    self.sites.pop();
                    self.bounds.pop();
                    if self.sites.is_empty() {
                        break;
                    }
                } else {
                    break;
                }
            }
            if self.sites.is_empty() {
                self.sites.push(q);
                self.bounds.push(f64::NEG_INFINITY);
            } else {
                self.sites.push(q);
                self.bounds.push(s);
            }
        }
        if self.sites.is_empty() {
            return false;
        }
        let mut k = 0;
        for (q, o) in out.iter_mut().enumerate() {
            let qf = q as f64;
            while k + 1 < self.sites.len() && self.bounds[k + 1] < qf {
                k += 1;
            }
            let p = self.sites[k];
            let d = q.abs_diff(p) as f64;
            *o = w * (d * d) + f[p];
        }
        true
    }
}

/// Abscissa where the parabolas rooted at `p < q` cross.
#[inline]
fn intersection(p: usize, fp: f64, q: usize, fq: f64, w: f64) -> f64 {
    let gap = (q - p) as f64;
    (p + q) as f64 * 0.5 + (fq - fp) / (2.0 * w * gap)
}
