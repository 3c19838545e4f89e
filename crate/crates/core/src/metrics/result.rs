use serde::{Deserialize, Serialize};

use super::components::label_components;
use super::hausdorff::surface_to_surface_sq;
use super::overlap::intersection_count;
use super::surface::extract_surface;
use crate::error::MetricsError;
use crate::serde_mm;
use crate::volume::{validate_pair, MaskVolume, PairStatus};

/// Diagnostics for one 26-connected component of the prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDiagnostic {
    pub component_id: u32,
    pub voxel_count: usize,
    /// Smallest distance from this component's surface to the GT surface.
    #[serde(with = "serde_mm")]
    pub min_distance_to_gt_mm: f64,
}

/// Everything measured for one prediction / ground-truth pair.
///
/// Hausdorff values are `f64::INFINITY` when either mask is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub dice: f64,
    #[serde(with = "serde_mm")]
    pub hd_pred_to_gt_mm: f64,
    #[serde(with = "serde_mm")]
    pub hd_gt_to_pred_mm: f64,
    #[serde(with = "serde_mm")]
    pub hd_mm: f64,
    pub pred_volume_mm3: f64,
    pub gt_volume_mm3: f64,
    pub status: PairStatus,
    pub components: Vec<ComponentDiagnostic>,
}

pub fn evaluate_metrics(pred: &MaskVolume, gt: &MaskVolume) -> Result<MetricResult, MetricsError> {
    let status = validate_pair(pred, gt)?;

    let total = pred.foreground_count() + gt.foreground_count();
    let dice = if total == 0 {
        1.0
    } else {
        (2 * intersection_count(pred, gt)) as f64 / total as f64
    };

    let labels = label_components(pred);
    let mut components: Vec<ComponentDiagnostic> = labels
        .sizes
        .iter()
        .enumerate()
        .map(|(k, &n)| ComponentDiagnostic {
            component_id: k as u32 + 1,
            voxel_count: n,
            min_distance_to_gt_mm: f64::INFINITY,
        })
        .collect();

    let (p2g, g2p) = if status.is_degenerate() {
        (f64::INFINITY, f64::INFINITY)
    } else {
        let sp = extract_surface(pred);
        let sg = extract_surface(gt);
        let pred_sq = surface_to_surface_sq(&sp, &sg);
        for (&i, &d2) in sp.indices().iter().zip(&pred_sq) {
            let c = &mut components[labels.labels[i] as usize - 1];
            c.min_distance_to_gt_mm = c.min_distance_to_gt_mm.min(d2);
        }
        for c in &mut components {
            c.min_distance_to_gt_mm = c.min_distance_to_gt_mm.sqrt();
        }
        let gt_sq = surface_to_surface_sq(&sg, &sp);
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max).sqrt();
        (max(&pred_sq), max(&gt_sq))
    };

    Ok(MetricResult {
        dice,
        hd_pred_to_gt_mm: p2g,
        hd_gt_to_pred_mm: g2p,
        hd_mm: p2g.max(g2p),
        pred_volume_mm3: pred.volume_mm3(),
        gt_volume_mm3: gt.volume_mm3(),
        status,
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::GridGeometry;

    fn ball(g: GridGeometry, c: [f64; 3], r: f64) -> impl Fn([usize; 3]) -> bool {
        move |p| {
            let d: f64 = (0..3)
                .map(|a| ((p[a] as f64 - c[a]) * g.spacing_mm[a]).powi(2))
                .sum();
            d <= r * r
        }
    }

    #[test]
    fn identical_masks() {
        let g = GridGeometry::new([12, 12, 12], [1.0, 1.0, 2.0]).unwrap();
        let m = MaskVolume::from_fn(g, ball(g, [6.0, 6.0, 6.0], 4.0));
        let r = evaluate_metrics(&m, &m).unwrap();
        assert_eq!(r.dice, 1.0);
        assert_eq!(r.hd_mm, 0.0);
        assert_eq!(r.components.len(), 1);
        assert_eq!(r.components[0].min_distance_to_gt_mm, 0.0);
        assert_eq!(r.pred_volume_mm3, m.foreground_count() as f64 * 2.0);
        assert_eq!(r.status, PairStatus::Ok);
    }

    #[test]
    fn eroded_prediction_underestimates() {
        let g = GridGeometry::new([16, 16, 16], [1.0; 3]).unwrap();
        let gt = MaskVolume::from_fn(g, ball(g, [8.0, 8.0, 8.0], 6.0));
        let pred = MaskVolume::from_fn(g, ball(g, [8.0, 8.0, 8.0], 4.0));
        let r = evaluate_metrics(&pred, &gt).unwrap();
        assert!(r.dice < 1.0);
        assert!(r.hd_gt_to_pred_mm > 0.0);
        assert!(r.hd_gt_to_pred_mm >= r.hd_pred_to_gt_mm);
        assert_eq!(r.components.len(), 1);
    }

    #[test]
    fn far_blob_dominates_hausdorff() {
        let g = GridGeometry::new([40, 12, 12], [1.0; 3]).unwrap();
        let organ = ball(g, [6.0, 6.0, 6.0], 4.0);
        let gt = MaskVolume::from_fn(g, &organ);
        let pred = MaskVolume::from_fn(g, |p| organ(p) || p == [35, 6, 6]);
        let r = evaluate_metrics(&pred, &gt).unwrap();
        assert!(r.dice > 0.99);
        // blob at x=35, nearest GT surface voxel at x=10
        assert_eq!(r.hd_pred_to_gt_mm, 25.0);
        assert_eq!(r.hd_mm, 25.0);
        assert_eq!(r.components.len(), 2);
        assert_eq!(r.components[1].voxel_count, 1);
        assert_eq!(r.components[1].min_distance_to_gt_mm, 25.0);
        assert_eq!(r.components[0].min_distance_to_gt_mm, 0.0);
    }

    #[test]
    fn degenerate_pairs_flow_through() {
        let g = GridGeometry::new([5, 5, 5], [1.0; 3]).unwrap();
        let e = MaskVolume::empty(g);
        let m = MaskVolume::from_fn(g, |c| c == [2, 2, 2]);
        let r = evaluate_metrics(&m, &e).unwrap();
        assert_eq!(r.status, PairStatus::EmptyGroundTruth);
        assert_eq!(r.dice, 0.0);
        assert!(r.hd_mm.is_infinite());
        assert!(r.components[0].min_distance_to_gt_mm.is_infinite());
        let r = evaluate_metrics(&e, &e).unwrap();
        assert_eq!(r.status, PairStatus::BothEmpty);
        assert_eq!(r.dice, 1.0);
        assert!(r.components.is_empty());
    }

    #[test]
    fn infinite_values_serialize_as_inf() {
        let g = GridGeometry::new([3, 3, 3], [1.0; 3]).unwrap();
        let r = evaluate_metrics(&MaskVolume::empty(g), &MaskVolume::from_fn(g, |_| true)).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains(r#""hd_mm":"inf""#), "{s}");
        let back: MetricResult = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
