//! Synthetic phantom pairs with known failure modes, plus brute-force
//! reference metrics.
//!
//! Shapes are given in the grid frame: a voxel at index `(x, y, z)` sits at
//! `(x·sx, y·sy, z·sz)` mm, and is foreground iff that centre lies inside the
//! shape.

mod corpus;
pub mod oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use corpus::{detection_corpus, write_corpus, CorpusCase, CorpusRequest, SynthCase, SynthRequest};
pub use oracle::{oracle_dice, oracle_directed_hausdorff, oracle_hausdorff, ORACLE_MAX_VOXELS};

use crate::classifier::{classify_values, Category, OrganThresholds};
use crate::error::SynthError;
use crate::volume::{validate_pair, GridGeometry, MaskVolume};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseShape {
    Sphere { center_mm: [f64; 3], radius_mm: f64 },
    Cuboid { min_mm: [f64; 3], max_mm: [f64; 3] },
}

impl BaseShape {
    fn contains(&self, p: [f64; 3]) -> bool {
        match self {
            BaseShape::Sphere { center_mm, radius_mm } => dist2(p, *center_mm) <= radius_mm * radius_mm,
            BaseShape::Cuboid { min_mm, max_mm } => {
                (0..3).all(|a| p[a] >= min_mm[a] && p[a] <= max_mm[a])
            }
        }
    }

    fn center(&self) -> [f64; 3] {
        match self {
            BaseShape::Sphere { center_mm, .. } => *center_mm,
            BaseShape::Cuboid { min_mm, max_mm } => {
                [0, 1, 2].map(|a| 0.5 * (min_mm[a] + max_mm[a]))
            }
        }
    }

    fn extent(&self) -> ([f64; 3], [f64; 3]) {
        match self {
            BaseShape::Sphere { center_mm, radius_mm } => (
                center_mm.map(|c| c - radius_mm),
                center_mm.map(|c| c + radius_mm),
            ),
            BaseShape::Cuboid { min_mm, max_mm } => (*min_mm, *max_mm),
        }
    }
}

/// Where an added blob goes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BlobPlacement {
    At { center_mm: [f64; 3] },
    /// Random direction from the base shape's centre, at a distance drawn
    /// uniformly from `[min_mm, max_mm]`, using the spec seed.
    Random { min_mm: f64, max_mm: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Corruption {
    None,
    Erode { voxels: usize },
    Dilate { voxels: usize },
    AddBlob { radius_mm: f64, placement: BlobPlacement },
    /// Half-open z-index ranges `[start, end)` cleared from the prediction.
    DeleteSlabs { ranges: Vec<[usize; 2]> },
    Translate { offset: [i64; 3] },
}

impl Corruption {
    /// Categories this kind of corruption can produce. Anything else means
    /// the spec does not do what its corruption says.
    fn admissible(&self) -> &'static [Category] {
        use Category::*;
        match self {
            Corruption::None => &[Good],
            Corruption::AddBlob { .. } => &[Good, OversegNear, OversegFar],
            Corruption::Dilate { .. } => &[Good, OversegNear, MixedFailure],
            Corruption::Erode { .. } | Corruption::DeleteSlabs { .. } => {
                &[Good, Underseg, MixedFailure, EmptyPrediction]
            }
            Corruption::Translate { .. } => &[
                Good,
                OversegNear,
                OversegFar,
                MixedFailure,
                Underseg,
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub geometry: GridGeometry,
    pub base_shape: BaseShape,
    pub corruption: Corruption,
    #[serde(default)]
    pub seed: u64,
}

/// A generated pair with its construction-verified expected category.
#[derive(Debug, Clone)]
pub struct PhantomPair {
    pub pred: MaskVolume,
    pub gt: MaskVolume,
    pub expected: Category,
    pub oracle_dice: f64,
    pub oracle_hd_mm: f64,
}

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum()
}

fn rasterize(g: &GridGeometry, inside: impl Fn([f64; 3]) -> bool) -> MaskVolume {
    MaskVolume::from_fn(*g, |c| inside(g.center_mm(c)))
}

fn check_inside(g: &GridGeometry, lo: [f64; 3], hi: [f64; 3], what: &str) -> Result<(), SynthError> {
    for a in 0..3 {
        let max = (g.dims[a] - 1) as f64 * g.spacing_mm[a];
        if !(lo[a] >= 0.0 && hi[a] <= max && lo[a] <= hi[a]) {
            return Err(SynthError::SpecOutOfBounds(format!(
                "{what} spans [{}, {}] mm on axis {a}, grid covers [0, {max}] mm",
                lo[a], hi[a]
            )));
        }
    }
    Ok(())
}

/// One 6-neighbourhood morphology step; out-of-grid counts as background.
fn morph_step(m: &MaskVolume, dilate: bool) -> MaskVolume {
    let g = *m.geometry();
    MaskVolume::from_fn(g, |[x, y, z]| {
        let c = [x as i64, y as i64, z as i64];
        let n = [
            [c[0] - 1, c[1], c[2]],
            [c[0] + 1, c[1], c[2]],
            [c[0], c[1] - 1, c[2]],
            [c[0], c[1] + 1, c[2]],
            [c[0], c[1], c[2] - 1],
            [c[0], c[1], c[2] + 1],
        ];
        if dilate {
            m.get([x, y, z]) || n.iter().any(|&q| m.get_signed(q))
        } else {
            m.get([x, y, z]) && n.iter().all(|&q| m.get_signed(q))
        }
    })
}

fn touches_border(m: &MaskVolume) -> bool {
    match m.bounding_box() {
        None => false,
        Some((lo, hi)) => (0..3).any(|a| lo[a] == 0 || hi[a] + 1 == m.geometry().dims[a]),
    }
}

fn blob_center(spec: &PhantomSpec, placement: &BlobPlacement, radius_mm: f64) -> Result<[f64; 3], SynthError> {
    let g = &spec.geometry;
    let fits = |c: [f64; 3]| {
        check_inside(g, c.map(|v| v - radius_mm), c.map(|v| v + radius_mm), "blob").is_ok()
    };
    match placement {
        BlobPlacement::At { center_mm } => {
            check_inside(
                g,
                center_mm.map(|v| v - radius_mm),
                center_mm.map(|v| v + radius_mm),
                "blob",
            )?;
            Ok(*center_mm)
        }
        BlobPlacement::Random { min_mm, max_mm } => {
            if !(min_mm.is_finite() && max_mm.is_finite() && 0.0 <= *min_mm && min_mm <= max_mm) {
                return Err(SynthError::Rejected(format!(
                    "bad blob distance range [{min_mm}, {max_mm}]"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let origin = spec.base_shape.center();
            for _ in 0..10_000 {
                let d: [f64; 3] = [0, 1, 2].map(|_| rng.gen_range(-1.0..=1.0));
                let n2 = d.iter().map(|v| v * v).sum::<f64>();
                if !(1e-6..=1.0).contains(&n2) {
                    continue;
                }
                let r = if min_mm == max_mm {
                    *min_mm
                } else {
                    rng.gen_range(*min_mm..=*max_mm)
                };
                let n = n2.sqrt();
                let c = [0, 1, 2].map(|a| origin[a] + d[a] / n * r);
                if fits(c) {
                    return Ok(c);
                }
            }
            Err(SynthError::SpecOutOfBounds(
                "no random blob placement fits the grid".into(),
            ))
        }
    }
}

/// Ground truth and corrupted prediction, before verification.
pub fn build_masks(spec: &PhantomSpec) -> Result<(MaskVolume, MaskVolume), SynthError> {
    let g = spec.geometry;
    g.validate()?;
    let (lo, hi) = spec.base_shape.extent();
    check_inside(&g, lo, hi, "base shape")?;
    let gt = rasterize(&g, |p| spec.base_shape.contains(p));
    if gt.is_empty() {
        return Err(SynthError::Rejected(
            "base shape contains no voxel centre".into(),
        ));
    }

    let pred = match &spec.corruption {
        Corruption::None => gt.clone(),
        Corruption::Erode { voxels } => {
            let mut m = gt.clone();
            for _ in 0..*voxels {
                m = morph_step(&m, false);
            }
            m
        }
        Corruption::Dilate { voxels } => {
            let mut m = gt.clone();
            for _ in 0..*voxels {
                if touches_border(&m) {
                    return Err(SynthError::SpecOutOfBounds(
                        "dilation would grow past the grid".into(),
                    ));
                }
                m = morph_step(&m, true);
            }
            m
        }
        Corruption::AddBlob { radius_mm, placement } => {
            if !(radius_mm.is_finite() && *radius_mm >= 0.0) {
                return Err(SynthError::Rejected(format!("bad blob radius {radius_mm}")));
            }
            let c = blob_center(spec, placement, *radius_mm)?;
            let r2 = radius_mm * radius_mm;
            let blob = rasterize(&g, |p| dist2(p, c) <= r2);
            if blob.is_empty() {
                return Err(SynthError::Rejected("blob contains no voxel centre".into()));
            }
            let v = gt
                .voxels()
                .iter()
                .zip(blob.voxels())
                .map(|(&a, &b)| a || b)
                .collect();
            MaskVolume::from_voxels(g, v)?
        }
        Corruption::DeleteSlabs { ranges } => {
            for r in ranges {
                if r[0] >= r[1] || r[1] > g.dims[2] {
                    return Err(SynthError::SpecOutOfBounds(format!(
                        "slab range {r:?} invalid for {} slices",
                        g.dims[2]
                    )));
                }
            }
            MaskVolume::from_fn(g, |[x, y, z]| {
                gt.get([x, y, z]) && !ranges.iter().any(|r| (r[0]..r[1]).contains(&z))
            })
        }
        Corruption::Translate { offset } => {
            let moved_out = gt.foreground_indices().any(|i| {
                let c = g.coords_of(i);
                !g.contains([0, 1, 2].map(|a| c[a] as i64 + offset[a]))
            });
            if moved_out {
                return Err(SynthError::SpecOutOfBounds(format!(
                    "translation by {offset:?} moves foreground off the grid"
                )));
            }
            MaskVolume::from_fn(g, |c| {
                gt.get_signed([0, 1, 2].map(|a| c[a] as i64 - offset[a]))
            })
        }
    };
    Ok((pred, gt))
}

/// Builds the pair and derives its expected category from brute-force
/// metrics. Borderline results, and results the corruption cannot
/// plausibly produce, are rejected rather than labelled.
pub fn generate_pair(spec: &PhantomSpec, thresholds: &OrganThresholds) -> Result<PhantomPair, SynthError> {
    let (pred, gt) = build_masks(spec)?;
    let status = validate_pair(&pred, &gt)?;
    let dice = oracle::exhaustive_dice(&pred, &gt);
    let (p2g, g2p) = oracle::exhaustive_hausdorff(&pred, &gt);
    let hd = p2g.max(g2p);
    let verdict = classify_values(dice, hd, thresholds, status)?;
    if verdict.category == Category::Borderline {
        return Err(SynthError::Rejected(format!(
            "lands in the borderline band (dice {dice:.4}, HD {hd:.3} mm)"
        )));
    }
    if !spec.corruption.admissible().contains(&verdict.category) {
        return Err(SynthError::Rejected(format!(
            "{:?} produced {} (dice {dice:.4}, HD {hd:.3} mm)",
            spec.corruption, verdict.category
        )));
    }
    Ok(PhantomPair {
        pred,
        gt,
        expected: verdict.category,
        oracle_dice: dice,
        oracle_hd_mm: hd,
    })
}
