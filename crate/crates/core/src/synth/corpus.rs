use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate_pair, BaseShape, BlobPlacement, Corruption, PhantomSpec};
use crate::classifier::{Category, OrganThresholds, ThresholdMap};
use crate::error::{SynthError, VolumeError};
use crate::volume::{write_nrrd, Encoding, GridGeometry};

/// One phantom to generate, as written in a synth request file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthCase {
    pub case_id: String,
    pub organ: String,
    pub phantom: PhantomSpec,
}

/// A corpus entry with the category it was built to exhibit.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusCase {
    pub case: SynthCase,
    pub intended: Category,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRequest {
    pub seed: u64,
}

/// Contents of a `synth --spec` file: either explicit cases or the built-in
/// detection corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthRequest {
    #[serde(default)]
    pub cases: Option<Vec<SynthCase>>,
    #[serde(default)]
    pub corpus: Option<CorpusRequest>,
}

impl SynthRequest {
    pub fn resolve(&self, thresholds: &ThresholdMap) -> Result<Vec<SynthCase>, SynthError> {
        match (&self.cases, &self.corpus) {
            (Some(c), None) => Ok(c.clone()),
            (None, Some(r)) => Ok(detection_corpus(thresholds, r.seed)?
                .into_iter()
                .map(|c| c.case)
                .collect()),
            _ => Err(SynthError::Rejected(
                "request must contain exactly one of `cases` or `corpus`".into(),
            )),
        }
    }
}

const CASES_PER_ORGAN: usize = 20;
const ATTEMPTS: usize = 25;

/// Twenty verified phantoms per organ in `thresholds`: eight clean, and three
/// each of near over-segmentation, far over-segmentation, under-segmentation
/// and mixed failure.
///
/// Spacing is a third of the organ's near-HD bound so every organ sees the
/// same geometry in units of its own thresholds.
pub fn detection_corpus(thresholds: &ThresholdMap, seed: u64) -> Result<Vec<CorpusCase>, SynthError> {
    let plan: Vec<Category> = std::iter::repeat_n(Category::Good, 8)
        .chain([
            Category::OversegNear,
            Category::OversegFar,
            Category::Underseg,
            Category::MixedFailure,
        ]
        .into_iter()
        .flat_map(|c| std::iter::repeat_n(c, 3)))
        .collect();
    debug_assert_eq!(plan.len(), CASES_PER_ORGAN);

    let organs: Vec<&OrganThresholds> = thresholds.iter().collect();
    let per_organ: Vec<Result<Vec<CorpusCase>, SynthError>> = organs
        .par_iter()
        .enumerate()
        .map(|(oi, t)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((oi as u64 + 1) << 32));
            let layout = OrganLayout::new(t)?;
            plan.iter()
                .enumerate()
                .map(|(k, &intended)| {
                    for attempt in 0..ATTEMPTS {
                        let phantom = layout.spec(intended, k, &mut rng)?;
                        match generate_pair(&phantom, t) {
                            Ok(p) if p.expected == intended => {
                                return Ok(CorpusCase {
                                    case: SynthCase {
                                        case_id: format!(
                                            "{}_{k:02}",
                                            t.organ.to_ascii_lowercase()
                                        ),
                                        organ: t.organ.clone(),
                                        phantom,
                                    },
                                    intended,
                                });
                            }
                            Ok(p) => log::debug!(
                                "{} case {k} attempt {attempt}: wanted {intended}, got {}",
                                t.organ,
                                p.expected
                            ),
                            Err(SynthError::Rejected(why)) => {
                                log::debug!("{} case {k} attempt {attempt}: {why}", t.organ)
                            }
                            Err(e) => return Err(e),
                        }
                    }
                    Err(SynthError::Rejected(format!(
                        "could not build a {intended} phantom for {} in {ATTEMPTS} attempts",
                        t.organ
                    )))
                })
                .collect()
        })
        .collect();

    let mut out = Vec::with_capacity(organs.len() * CASES_PER_ORGAN);
    for r in per_organ {
        out.extend(r?);
    }
    Ok(out)
}

struct OrganLayout {
    unit: f64,
    hd_far: f64,
    geometry: GridGeometry,
    center: [f64; 3],
}

impl OrganLayout {
    const XY: usize = 44;
    const CENTER: f64 = 22.0;

    fn new(t: &OrganThresholds) -> Result<Self, SynthError> {
        let unit = t.hd_near_mm / 3.0;
        let far_vox = (t.hd_far_mm / unit).ceil() as usize;
        let nz = Self::CENTER as usize + 7 + far_vox + 8 + 4;
        let geometry = GridGeometry::new([Self::XY, Self::XY, nz], [unit; 3])?;
        Ok(Self {
            unit,
            hd_far: t.hd_far_mm,
            geometry,
            center: [Self::CENTER * unit; 3],
        })
    }

    fn jittered_center(&self, rng: &mut ChaCha8Rng) -> [f64; 3] {
        self.center.map(|c| c + rng.gen_range(-0.5..=0.5) * self.unit)
    }

    fn sphere(&self, rng: &mut ChaCha8Rng, r_vox: std::ops::RangeInclusive<f64>) -> (BaseShape, f64) {
        let r = rng.gen_range(r_vox) * self.unit;
        (
            BaseShape::Sphere {
                center_mm: self.jittered_center(rng),
                radius_mm: r,
            },
            r,
        )
    }

    fn spec(&self, intended: Category, k: usize, rng: &mut ChaCha8Rng) -> Result<PhantomSpec, SynthError> {
        let u = self.unit;
        let (base_shape, corruption) = match intended {
            Category::Good if k.is_multiple_of(2) => (self.sphere(rng, 5.0..=7.0).0, Corruption::None),
            Category::Good => {
                let c = self.jittered_center(rng);
                let half = [0, 1, 2].map(|_| rng.gen_range(3.0..=6.0) * u);
                (
                    BaseShape::Cuboid {
                        min_mm: [0, 1, 2].map(|a| c[a] - half[a]),
                        max_mm: [0, 1, 2].map(|a| c[a] + half[a]),
                    },
                    Corruption::None,
                )
            }
            Category::OversegNear => {
                let (shape, r) = self.sphere(rng, 5.0..=7.0);
                (
                    shape,
                    Corruption::AddBlob {
                        radius_mm: u,
                        placement: BlobPlacement::Random {
                            min_mm: r + 7.0 * u,
                            max_mm: r + 10.0 * u,
                        },
                    },
                )
            }
            Category::OversegFar => {
                let (shape, r) = self.sphere(rng, 5.0..=7.0);
                let BaseShape::Sphere { center_mm, .. } = shape else {
                    unreachable!()
                };
                let lift = r + self.hd_far + rng.gen_range(3.0..=5.0) * u;
                let blob = [
                    center_mm[0] + rng.gen_range(-2.0..=2.0) * u,
                    center_mm[1] + rng.gen_range(-2.0..=2.0) * u,
                    center_mm[2] + lift,
                ];
                (
                    shape,
                    Corruption::AddBlob {
                        radius_mm: u,
                        placement: BlobPlacement::At { center_mm: blob },
                    },
                )
            }
            Category::Underseg if k.is_multiple_of(2) => {
                (self.sphere(rng, 3.0..=3.3).0, Corruption::Erode { voxels: 1 })
            }
            Category::Underseg => {
                // two-voxel-thick plate; two of every three slices dropped
                let c = self.center;
                let hy = rng.gen_range(5.0..=8.0) * u;
                let (z0, z1) = (
                    (c[2] / u).round() as usize - 8,
                    (c[2] / u).round() as usize + 8,
                );
                let ranges = (z0..=z1)
                    .filter(|z| (z - z0) % 3 != 0)
                    .map(|z| [z, z + 1])
                    .collect();
                (
                    BaseShape::Cuboid {
                        min_mm: [c[0], c[1] - hy, z0 as f64 * u],
                        max_mm: [c[0] + u, c[1] + hy, z1 as f64 * u],
                    },
                    Corruption::DeleteSlabs { ranges },
                )
            }
            Category::MixedFailure if k.is_multiple_of(2) => {
                let (shape, r) = self.sphere(rng, 5.0..=7.0);
                let BaseShape::Sphere { center_mm, .. } = shape else {
                    unreachable!()
                };
                let cut = ((center_mm[2] - 0.3 * r) / u).ceil() as usize;
                let top = ((center_mm[2] + r) / u).floor() as usize + 1;
                (shape, Corruption::DeleteSlabs { ranges: vec![[cut, top]] })
            }
            Category::MixedFailure => {
                let (shape, r) = self.sphere(rng, 5.0..=7.0);
                let shift = (r / u).round() as i64;
                (
                    shape,
                    Corruption::Translate {
                        offset: [shift, 0, 0],
                    },
                )
            }
            other => {
                return Err(SynthError::Rejected(format!(
                    "the detection corpus does not build {other} cases"
                )))
            }
        };
        Ok(PhantomSpec {
            geometry: self.geometry,
            base_shape,
            corruption,
            seed: rng.gen(),
        })
    }
}

/// Generates every case, writes `<case_id>_pred.nrrd` / `<case_id>_gt.nrrd`
/// (gzip) and a `manifest.csv` with an `expected_category` column into
/// `out_dir`. Returns the expected category per case, in input order.
pub fn write_corpus(
    out_dir: &Path,
    cases: &[SynthCase],
    thresholds: &ThresholdMap,
) -> Result<Vec<Category>, SynthError> {
    let io = |path: &Path, source: std::io::Error| {
        SynthError::Volume(VolumeError::Io {
            path: path.to_path_buf(),
            source,
        })
    };
    fs::create_dir_all(out_dir).map_err(|e| io(out_dir, e))?;

    let mut seen = std::collections::HashSet::new();
    for c in cases {
        if !seen.insert(c.case_id.as_str()) {
            return Err(SynthError::Rejected(format!("duplicate case_id `{}`", c.case_id)));
        }
        if c.case_id.is_empty() || c.case_id.contains(['/', '\\']) {
            return Err(SynthError::Rejected(format!("bad case_id `{}`", c.case_id)));
        }
    }

    let expected: Vec<Category> = cases
        .par_iter()
        .map(|c| {
            let t = thresholds.resolve(&c.organ)?;
            let pair = generate_pair(&c.phantom, t)?;
            write_nrrd(out_dir.join(format!("{}_pred.nrrd", c.case_id)), &pair.pred, Encoding::Gzip)?;
            write_nrrd(out_dir.join(format!("{}_gt.nrrd", c.case_id)), &pair.gt, Encoding::Gzip)?;
            Ok(pair.expected)
        })
        .collect::<Result<_, SynthError>>()?;

    let manifest = out_dir.join("manifest.csv");
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| SynthError::Rejected(format!("manifest: {e}"));
    w.write_record(["case_id", "organ", "pred_path", "gt_path", "expected_category"])
        .map_err(csv_err)?;
    for (c, e) in cases.iter().zip(&expected) {
        w.write_record([
            c.case_id.as_str(),
            c.organ.as_str(),
            &format!("{}_pred.nrrd", c.case_id),
            &format!("{}_gt.nrrd", c.case_id),
            e.as_str(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| SynthError::Rejected(e.to_string()))?;
    fs::write(&manifest, bytes).map_err(|e| io(&manifest, e))?;
    Ok(expected)
}
