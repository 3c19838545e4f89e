use crate::error::MetricsError;
use crate::volume::{validate_pair, MaskVolume};

/// Dice overlap `2|A∩B| / (|A|+|B|)` by voxel counts.
///
/// Two empty masks score 1.0; exactly one empty mask scores 0.0.
pub fn dice(a: &MaskVolume, b: &MaskVolume) -> Result<f64, MetricsError> {
    validate_pair(a, b)?;
    let total = a.foreground_count() + b.foreground_count();
    if total == 0 {
        return Ok(1.0);
    }
    let inter = intersection_count(a, b);
    Ok((2 * inter) as f64 / total as f64)
}

pub(crate) fn intersection_count(a: &MaskVolume, b: &MaskVolume) -> usize {
    a.voxels()
        .iter()
        .zip(b.voxels())
        .filter(|(&x, &y)| x && y)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::GridGeometry;

    fn grid8() -> GridGeometry {
        GridGeometry::new([8, 8, 8], [1.0; 3]).unwrap()
    }

    fn cube_at(g: GridGeometry, x0: usize) -> MaskVolume {
        MaskVolume::from_fn(g, |[x, y, z]| (x0..x0 + 2).contains(&x) && y < 2 && z < 2)
    }

    #[test]
    fn identical_disjoint_and_shifted() {
        let g = grid8();
        let a = cube_at(g, 0);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        assert_eq!(dice(&a, &cube_at(g, 4)).unwrap(), 0.0);
        // 4 shared voxels of 8 + 8
        assert_eq!(dice(&a, &cube_at(g, 1)).unwrap(), 0.5);
    }

    #[test]
    fn empty_conventions() {
        let g = grid8();
        let e = MaskVolume::empty(g);
        let a = cube_at(g, 0);
        assert_eq!(dice(&e, &e).unwrap(), 1.0);
        assert_eq!(dice(&a, &e).unwrap(), 0.0);
        assert_eq!(dice(&e, &a).unwrap(), 0.0);
    }

    #[test]
    fn mismatch_is_an_error() {
        let a = cube_at(grid8(), 0);
        let b = MaskVolume::empty(GridGeometry::new([8, 8, 9], [1.0; 3]).unwrap());
        assert!(matches!(dice(&a, &b), Err(MetricsError::Geometry(_))));
    }
}
