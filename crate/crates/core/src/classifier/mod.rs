//! Banding of (Dice, Hausdorff) pairs into failure categories.

mod thresholds;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use thresholds::{
    default_thresholds, load_thresholds, load_thresholds_file, organ_key, OrganThresholds,
    ThresholdMap, DEFAULT_DICE_BAND, DEFAULT_HD_FAR_MM,
};

use crate::error::ClassifierError;
use crate::metrics::MetricResult;
use crate::volume::PairStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Good,
    OversegNear,
    OversegFar,
    MixedFailure,
    Underseg,
    Borderline,
    EmptyPrediction,
    EmptyGroundTruth,
    BothEmpty,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::Good,
        Category::OversegNear,
        Category::OversegFar,
        Category::MixedFailure,
        Category::Underseg,
        Category::Borderline,
        Category::EmptyPrediction,
        Category::EmptyGroundTruth,
        Category::BothEmpty,
    ];

    pub fn is_failure_candidate(self) -> bool {
        !matches!(self, Category::Good | Category::BothEmpty)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Good => "Good",
            Category::OversegNear => "OversegNear",
            Category::OversegFar => "OversegFar",
            Category::MixedFailure => "MixedFailure",
            Category::Underseg => "Underseg",
            Category::Borderline => "Borderline",
            Category::EmptyPrediction => "EmptyPrediction",
            Category::EmptyGroundTruth => "EmptyGroundTruth",
            Category::BothEmpty => "BothEmpty",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseVerdict {
    pub category: Category,
    pub is_failure_candidate: bool,
    pub rationale: String,
}

impl CaseVerdict {
    fn new(category: Category, rationale: String) -> Self {
        Self {
            category,
            is_failure_candidate: category.is_failure_candidate(),
            rationale,
        }
    }
}

/// Band lookup without rationale. Closed on the good side of every bound:
/// `dice == dice_good` is good overlap, `hd == hd_near_mm` is near and
/// `hd == hd_far_mm` is still near over-segmentation.
pub fn categorize(dice: f64, hd_mm: f64, t: &OrganThresholds) -> Category {
    if dice >= t.dice_good {
        if hd_mm <= t.hd_near_mm {
            Category::Good
        } else if hd_mm <= t.hd_far_mm {
            Category::OversegNear
        } else {
            Category::OversegFar
        }
    } else if dice < t.dice_bad {
        if hd_mm > t.hd_near_mm {
            Category::MixedFailure
        } else {
            Category::Underseg
        }
    } else {
        Category::Borderline
    }
}

/// Verdict for raw metric values. A degenerate pair status wins over the
/// metric bands.
pub fn classify_values(
    dice: f64,
    hd_mm: f64,
    t: &OrganThresholds,
    status: PairStatus,
) -> Result<CaseVerdict, ClassifierError> {
    t.check().map_err(|e| ClassifierError::InvalidThresholds {
        organ: t.organ.clone(),
        reason: e.to_string(),
    })?;
    let verdict = match status {
        PairStatus::EmptyPrediction => CaseVerdict::new(
            Category::EmptyPrediction,
            "prediction is empty while ground truth is not".into(),
        ),
        PairStatus::EmptyGroundTruth => CaseVerdict::new(
            Category::EmptyGroundTruth,
            "ground truth is empty while prediction is not".into(),
        ),
        PairStatus::BothEmpty => CaseVerdict::new(
            Category::BothEmpty,
            "both masks are empty; nothing to segment".into(),
        ),
        PairStatus::Ok => {
            if dice.is_nan() || hd_mm.is_nan() {
                return Err(ClassifierError::InvalidThresholds {
                    organ: t.organ.clone(),
                    reason: "metric values must not be NaN".into(),
                });
            }
            let category = categorize(dice, hd_mm, t);
            CaseVerdict::new(category, rationale(category, dice, hd_mm, t))
        }
    };
    Ok(verdict)
}

pub fn classify(m: &MetricResult, t: &OrganThresholds) -> Result<CaseVerdict, ClassifierError> {
    classify_values(m.dice, m.hd_mm, t, m.status)
}

fn rationale(c: Category, dice: f64, hd: f64, t: &OrganThresholds) -> String {
    let facts = format!(
        "dice {dice:.4}, HD {hd:.2} mm ({}: dice {}/{}, HD {}/{} mm)",
        t.organ, t.dice_good, t.dice_bad, t.hd_near_mm, t.hd_far_mm
    );
    let what = match c {
        Category::Good => "good prediction",
        Category::OversegNear => {
            "good overlap but extra predictions connected and close to the ground truth"
        }
        Category::OversegFar => {
            "good overlap but extra predictions far from the respective organ"
        }
        Category::MixedFailure => {
            "extra predictions in slices or far from the organ, and missing overlap for some ground truth"
        }
        Category::Underseg => {
            "no extra predictions, but ground truth left unpredicted in some slices"
        }
        Category::Borderline => "overlap between the good and failed bands; review",
        _ => unreachable!("degenerate categories are handled by the caller"),
    };
    format!("{what}: {facts}")
}
