//! Brute-force reference metrics.
//!
//! Deliberately naive and independent of `crate::metrics`: own surface test,
//! direct voxel counting, and all-pairs surface distances.

use crate::error::SynthError;
use crate::volume::MaskVolume;

/// Largest volume (in voxels) the public oracles accept: 32³.
pub const ORACLE_MAX_VOXELS: usize = 32 * 32 * 32;

fn check_size(m: &MaskVolume) -> Result<(), SynthError> {
    let n = m.geometry().len();
    if n > ORACLE_MAX_VOXELS {
        return Err(SynthError::VolumeTooLargeForOracle {
            voxels: n,
            limit: ORACLE_MAX_VOXELS,
        });
    }
    Ok(())
}

fn check_pair(a: &MaskVolume, b: &MaskVolume) -> Result<(), SynthError> {
    check_size(a)?;
    check_size(b)?;
    if !a.geometry().is_compatible(b.geometry()) {
        return Err(crate::error::VolumeError::mismatch(a.geometry(), b.geometry()).into());
    }
    Ok(())
}

pub fn oracle_dice(a: &MaskVolume, b: &MaskVolume) -> Result<f64, SynthError> {
    check_pair(a, b)?;
    Ok(exhaustive_dice(a, b))
}

/// Symmetric Hausdorff distance in mm; infinite if either mask is empty.
pub fn oracle_hausdorff(a: &MaskVolume, b: &MaskVolume) -> Result<f64, SynthError> {
    check_pair(a, b)?;
    let (ab, ba) = exhaustive_hausdorff(a, b);
    Ok(ab.max(ba))
}

/// Directed distances `(a→b, b→a)` in mm.
pub fn oracle_directed_hausdorff(a: &MaskVolume, b: &MaskVolume) -> Result<(f64, f64), SynthError> {
    check_pair(a, b)?;
    Ok(exhaustive_hausdorff(a, b))
}

pub(crate) fn exhaustive_dice(a: &MaskVolume, b: &MaskVolume) -> f64 {
    let g = a.geometry();
    let [nx, ny, nz] = g.dims;
    let (mut na, mut nb, mut both) = (0usize, 0usize, 0usize);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let (ia, ib) = (a.get([x, y, z]), b.get([x, y, z]));
                na += ia as usize;
                nb += ib as usize;
                both += (ia && ib) as usize;
            }
        }
    }
    if na + nb == 0 {
        1.0
    } else {
        2.0 * both as f64 / (na + nb) as f64
    }
}

pub(crate) fn surface_points(m: &MaskVolume) -> Vec<[usize; 3]> {
    const FACES: [[i64; 3]; 6] = [
        [-1, 0, 0],
        [1, 0, 0],
        [0, -1, 0],
        [0, 1, 0],
        [0, 0, -1],
        [0, 0, 1],
    ];
    let [nx, ny, nz] = m.geometry().dims;
    let mut out = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if !m.get([x, y, z]) {
                    continue;
                }
                let c = [x as i64, y as i64, z as i64];
                if FACES
                    .iter()
                    .any(|d| !m.get_signed([c[0] + d[0], c[1] + d[1], c[2] + d[2]]))
                {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

pub(crate) fn directed(from: &[[usize; 3]], to: &[[usize; 3]], spacing: [f64; 3]) -> f64 {
    if from.is_empty() || to.is_empty() {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for p in from {
        let mut best = f64::INFINITY;
        for q in to {
            let dx = (p[0] as f64 - q[0] as f64) * spacing[0];
            let dy = (p[1] as f64 - q[1] as f64) * spacing[1];
            let dz = (p[2] as f64 - q[2] as f64) * spacing[2];
            let d = (dx * dx + dy * dy + dz * dz).sqrt();
            if d < best {
                best = d;
            }
        }
        worst = worst.max(best);
    }
    worst
}

pub(crate) fn exhaustive_hausdorff(a: &MaskVolume, b: &MaskVolume) -> (f64, f64) {
    let sa = surface_points(a);
    let sb = surface_points(b);
    let s = a.geometry().spacing_mm;
    (directed(&sa, &sb, s), directed(&sb, &sa, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::GridGeometry;

    #[test]
    fn hand_computed_cases() {
        let g = GridGeometry::new([8, 8, 8], [1.0; 3]).unwrap();
        let cube = |x0: usize| MaskVolume::from_fn(g, move |[x, y, z]| (x0..x0 + 2).contains(&x) && y < 2 && z < 2);
        assert_eq!(oracle_dice(&cube(0), &cube(0)).unwrap(), 1.0);
        assert_eq!(oracle_hausdorff(&cube(0), &cube(0)).unwrap(), 0.0);
        assert_eq!(oracle_dice(&cube(0), &cube(1)).unwrap(), 0.5);

        let g = GridGeometry::new([4, 1, 1], [2.0, 1.0, 1.0]).unwrap();
        let a = MaskVolume::from_fn(g, |c| c == [0, 0, 0]);
        let b = MaskVolume::from_fn(g, |c| c == [3, 0, 0]);
        assert_eq!(oracle_hausdorff(&a, &b).unwrap(), 6.0);
    }

    #[test]
    fn size_limit_is_enforced() {
        let g = GridGeometry::new([33, 32, 32], [1.0; 3]).unwrap();
        let m = MaskVolume::empty(g);
        assert!(matches!(
            oracle_dice(&m, &m),
            Err(SynthError::VolumeTooLargeForOracle { .. })
        ));
        let g = GridGeometry::new([32, 32, 32], [1.0; 3]).unwrap();
        assert!(oracle_dice(&MaskVolume::empty(g), &MaskVolume::empty(g)).is_ok());
    }

    #[test]
    fn empty_gives_infinity() {
        let g = GridGeometry::new([3, 3, 3], [1.0; 3]).unwrap();
        let a = MaskVolume::from_fn(g, |c| c == [1, 1, 1]);
        assert!(oracle_hausdorff(&a, &MaskVolume::empty(g)).unwrap().is_infinite());
    }

    #[test]
    fn sphere_surface_distance_is_close_to_analytic() {
        // concentric balls r=9 and r=6 voxels: surface gap ~3 voxels
        let g = GridGeometry::new([24, 24, 24], [1.0; 3]).unwrap();
        let ball = |r: f64| {
            MaskVolume::from_fn(g, move |p| {
                p.iter().map(|&k| (k as f64 - 12.0).powi(2)).sum::<f64>() <= r * r
            })
        };
        let hd = oracle_hausdorff(&ball(9.0), &ball(6.0)).unwrap();
        assert!((hd - 3.0).abs() <= 3f64.sqrt(), "{hd}");
    }
}
