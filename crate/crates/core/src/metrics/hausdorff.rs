use super::edt::{BoxField, DistanceField};
use super::surface::{extract_surface, SurfaceSet};
use crate::error::MetricsError;
use crate::volume::{validate_pair, MaskVolume, PairStatus};

/// Directed and symmetric Hausdorff distances in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HausdorffDistances {
    pub a_to_b_mm: f64,
    pub b_to_a_mm: f64,
    pub symmetric_mm: f64,
    pub status: PairStatus,
}

/// `max_{a in from} d(a, to)` read off a precomputed field of the target surface.
pub fn directed_hausdorff(from: &SurfaceSet, to_field: &DistanceField) -> Result<f64, MetricsError> {
    if from.is_empty() {
        return Err(MetricsError::EmptySurface);
    }
    if from.geometry().dims != to_field.geometry().dims {
        return Err(crate::error::VolumeError::mismatch(from.geometry(), to_field.geometry()).into());
    }
    Ok(from
        .points()
        .iter()
        .map(|&p| to_field.at(p))
        .fold(0.0, f64::max))
}

/// Symmetric Hausdorff distance between mask surfaces. Either mask empty
/// yields infinite distances and a degenerate status.
pub fn hausdorff(a: &MaskVolume, b: &MaskVolume) -> Result<HausdorffDistances, MetricsError> {
    let status = validate_pair(a, b)?;
    if status.is_degenerate() {
        return Ok(HausdorffDistances {
            a_to_b_mm: f64::INFINITY,
            b_to_a_mm: f64::INFINITY,
            symmetric_mm: f64::INFINITY,
            status,
        });
    }
    let sa = extract_surface(a);
    let sb = extract_surface(b);
    let a_to_b = max_of(&surface_to_surface_sq(&sa, &sb)).sqrt();
    let b_to_a = max_of(&surface_to_surface_sq(&sb, &sa)).sqrt();
    Ok(HausdorffDistances {
        a_to_b_mm: a_to_b,
        b_to_a_mm: b_to_a,
        symmetric_mm: a_to_b.max(b_to_a),
        status,
    })
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Squared distance from every point of `from` to the nearest point of `to`.
///
/// The transform runs on the bounding box of both point sets only.
pub(crate) fn surface_to_surface_sq(from: &SurfaceSet, to: &SurfaceSet) -> Vec<f64> {
    debug_assert!(!to.is_empty());
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for p in from.points().iter().chain(to.points()) {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let dims = [hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1];
    let field = BoxField::compute(to.points(), lo, dims, to.geometry().spacing_mm);
    from.points().iter().map(|&p| field.squared_at(p)).collect()
}
