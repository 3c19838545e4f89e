use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ClassifierError;

/// Dice gap between the good and bad bands when only `dice_good` is known.
pub const DEFAULT_DICE_BAND: f64 = 0.1;
/// Far over-segmentation bound when an organ does not specify one.
pub const DEFAULT_HD_FAR_MM: f64 = 100.0;

/// Banding thresholds for one organ.
///
/// `dice >= dice_good` is the good-overlap band and `dice < dice_bad` the
/// failed-overlap band; Hausdorff distance is near up to `hd_near_mm` and far
/// beyond `hd_far_mm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrganThresholds {
    pub organ: String,
    pub dice_good: f64,
    pub dice_bad: f64,
    pub hd_near_mm: f64,
    pub hd_far_mm: f64,
}

impl OrganThresholds {
    pub fn new(
        organ: impl Into<String>,
        dice_good: f64,
        dice_bad: f64,
        hd_near_mm: f64,
        hd_far_mm: f64,
    ) -> Result<Self, ClassifierError> {
        let t = Self {
            organ: organ.into(),
            dice_good,
            dice_bad,
            hd_near_mm,
            hd_far_mm,
        };
        t.check()?;
        Ok(t)
    }

    /// Checks the ordering invariants, naming the first offending field.
    pub fn check(&self) -> Result<(), ClassifierError> {
        let fail = |field: &'static str, reason: String| {
            Err(ClassifierError::InvariantViolation {
                organ: self.organ.clone(),
                field,
                reason,
            })
        };
        if !(self.dice_good > 0.0 && self.dice_good <= 1.0) {
            return fail("dice_good", format!("{} not in (0, 1]", self.dice_good));
        }
        if !(self.dice_bad >= 0.0 && self.dice_bad < self.dice_good) {
            return fail(
                "dice_bad",
                format!("{} not in [0, dice_good={})", self.dice_bad, self.dice_good),
            );
        }
        if !(self.hd_near_mm.is_finite() && self.hd_near_mm > 0.0) {
            return fail("hd_near_mm", format!("{} is not a positive finite value", self.hd_near_mm));
        }
        if !(self.hd_far_mm.is_finite() && self.hd_far_mm > self.hd_near_mm) {
            return fail(
                "hd_far_mm",
                format!("{} must be finite and > hd_near_mm={}", self.hd_far_mm, self.hd_near_mm),
            );
        }
        Ok(())
    }
}

/// Organ name used for lookups: lowercase ASCII alphanumerics only, so
/// `Lymph Node`, `lymph_node` and `LymphNode` are the same organ.
pub fn organ_key(name: &str) -> String {
    name.chars()
        .filter(char::is_ascii_alphanumeric)
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Thresholds keyed by organ, looked up case-insensitively.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdMap {
    entries: BTreeMap<String, OrganThresholds>,
}

impl ThresholdMap {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn get(&self, organ: &str) -> Option<&OrganThresholds> {
        self.entries.get(&organ_key(organ))
    }

    pub fn resolve(&self, organ: &str) -> Result<&OrganThresholds, ClassifierError> {
        self.get(organ)
            .ok_or_else(|| ClassifierError::UnknownOrgan(organ.to_string()))
    }

    pub fn insert(&mut self, t: OrganThresholds) -> Result<(), ClassifierError> {
        t.check()?;
        let key = organ_key(&t.organ);
        if key.is_empty() {
            return Err(ClassifierError::MalformedConfig(format!(
                "organ name `{}` has no alphanumeric characters",
                t.organ
            )));
        }
        self.entries.insert(key, t);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &OrganThresholds> {
        self.entries.values()
    }

    /// Config-format JSON with all four fields for every organ.
    pub fn to_config_json(&self) -> String {
        let obj: BTreeMap<&str, OverrideEntry> = self
            .entries
            .values()
            .map(|t| {
                (
                    t.organ.as_str(),
                    OverrideEntry {
                        dice_good: Some(t.dice_good),
                        dice_bad: Some(t.dice_bad),
                        hd_near_mm: Some(t.hd_near_mm),
                        hd_far_mm: Some(t.hd_far_mm),
                    },
                )
            })
            .collect();
        serde_json::to_string_pretty(&obj).expect("threshold map serializes")
    }

    /// Lowercase hex SHA-256 over the canonical (key-sorted) JSON form.
    pub fn fingerprint(&self) -> String {
        let canonical: Vec<(&String, &OrganThresholds)> = self.entries.iter().collect();
        let bytes = serde_json::to_vec(&canonical).expect("threshold map serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The six organs with published thresholds.
///
/// `dice_good` and `hd_near_mm` are the per-organ recommended values;
/// `dice_bad` sits one band below `dice_good` and `hd_far_mm` is 100 mm, the
/// breast banding carried over to every organ.
pub fn default_thresholds() -> ThresholdMap {
    let rows = [
        ("Breast", 0.9, 0.8, 6.0),
        ("LymphNode", 0.95, 0.85, 0.5),
        ("Femur", 0.9, 0.8, 11.0),
        ("Trachea", 0.85, 0.75, 19.0),
        ("Chiasma", 0.66, 0.56, 3.4),
        ("Brainstem", 0.8, 0.7, 10.0),
    ];
    let mut map = ThresholdMap::empty();
    for (organ, good, bad, near) in rows {
        map.insert(OrganThresholds {
            organ: organ.to_string(),
            dice_good: good,
            dice_bad: bad,
            hd_near_mm: near,
            hd_far_mm: DEFAULT_HD_FAR_MM,
        })
        .expect("built-in thresholds are valid");
    }
    map
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverrideEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dice_good: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dice_bad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hd_near_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hd_far_mm: Option<f64>,
}

/// Defaults overlaid with a JSON config object keyed by organ name.
///
/// Existing organs take only the fields given. New organs need `dice_good`
/// and `hd_near_mm`; missing `dice_bad` / `hd_far_mm` fall back to
/// `dice_good - 0.1` and 100 mm.
pub fn load_thresholds(config_json: &str) -> Result<ThresholdMap, ClassifierError> {
    let overrides: BTreeMap<String, OverrideEntry> = if config_json.trim().is_empty() {
        BTreeMap::new()
    } else {
        serde_json::from_str(config_json)
            .map_err(|e| ClassifierError::MalformedConfig(e.to_string()))?
    };

    let mut seen = BTreeMap::new();
    for name in overrides.keys() {
        if let Some(prev) = seen.insert(organ_key(name), name) {
            return Err(ClassifierError::MalformedConfig(format!(
                "organ `{name}` given twice (also as `{prev}`)"
            )));
        }
    }

    let mut map = default_thresholds();
    for (name, o) in overrides {
        let t = match map.get(&name) {
            Some(base) => OrganThresholds {
                organ: base.organ.clone(),
                dice_good: o.dice_good.unwrap_or(base.dice_good),
                dice_bad: o.dice_bad.unwrap_or(base.dice_bad),
                hd_near_mm: o.hd_near_mm.unwrap_or(base.hd_near_mm),
                hd_far_mm: o.hd_far_mm.unwrap_or(base.hd_far_mm),
            },
            None => {
                let missing = |field: &'static str| ClassifierError::InvariantViolation {
                    organ: name.clone(),
                    field,
                    reason: "required for an organ without built-in thresholds".into(),
                };
                let dice_good = o.dice_good.ok_or_else(|| missing("dice_good"))?;
                let hd_near_mm = o.hd_near_mm.ok_or_else(|| missing("hd_near_mm"))?;
                OrganThresholds {
                    organ: name.clone(),
                    dice_good,
                    dice_bad: o
                        .dice_bad
                        .unwrap_or_else(|| round9(dice_good - DEFAULT_DICE_BAND)),
                    hd_near_mm,
                    hd_far_mm: o.hd_far_mm.unwrap_or(DEFAULT_HD_FAR_MM),
                }
            }
        };
        map.insert(t)?;
    }
    Ok(map)
}

fn round9(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

/// Reads a config file and overlays it on the defaults.
pub fn load_thresholds_file(path: &Path) -> Result<ThresholdMap, ClassifierError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ClassifierError::MalformedConfig(format!("{}: {e}", path.display())))?;
    load_thresholds(&text)
}
