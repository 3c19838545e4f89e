use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::{Category, CaseVerdict, ThresholdMap};
use crate::error::PipelineError;
use crate::metrics::MetricResult;
use crate::serde_mm;

/// Why a case produced no verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// Unreadable or malformed input file.
    Io,
    /// Inputs load but cannot be compared (geometry mismatch, bad values).
    Data,
    /// Organ has no thresholds or the thresholds are invalid.
    Config,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseFailure {
    pub kind: FailureKind,
    pub message: String,
}

/// Outcome of one manifest row. Exactly one of `verdict` / `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: String,
    pub organ: String,
    pub pred_path: PathBuf,
    pub gt_path: PathBuf,
    pub metrics: Option<MetricResult>,
    pub verdict: Option<CaseVerdict>,
    pub error: Option<CaseFailure>,
    pub warnings: Vec<String>,
    pub wall_time_ms: u64,
}

impl CaseRecord {
    pub fn is_failure_candidate(&self) -> bool {
        self.verdict.as_ref().is_some_and(|v| v.is_failure_candidate)
    }

    pub fn category(&self) -> Option<Category> {
        self.verdict.as_ref().map(|v| v.category)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OrganSummary {
    pub cases: usize,
    pub errors: usize,
    pub counts: BTreeMap<Category, usize>,
    pub mean_dice: Option<f64>,
    #[serde(with = "serde_mm::option")]
    pub max_hd_mm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub case_id: String,
    pub organ: String,
    pub category: Category,
    pub dice: f64,
    #[serde(with = "serde_mm")]
    pub hd_mm: f64,
    /// `dice_good - dice` for the organ's thresholds.
    pub dice_deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub records: Vec<CaseRecord>,
    pub summary: BTreeMap<String, OrganSummary>,
    pub candidates: Vec<Candidate>,
    pub config_fingerprint: String,
}

impl BatchReport {
    pub fn from_records(records: Vec<CaseRecord>, thresholds: &ThresholdMap) -> Self {
        let summary = summarize(&records);
        let candidates = rank_candidates(&records, thresholds);
        Self {
            records,
            summary,
            candidates,
            config_fingerprint: thresholds.fingerprint(),
        }
    }

    pub fn error_count(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }
}

fn summarize(records: &[CaseRecord]) -> BTreeMap<String, OrganSummary> {
    let mut out: BTreeMap<String, OrganSummary> = BTreeMap::new();
    let mut dice_sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for r in records {
        let s = out.entry(r.organ.clone()).or_default();
        s.cases += 1;
        match (&r.verdict, &r.metrics) {
            (Some(v), Some(m)) => {
                *s.counts.entry(v.category).or_default() += 1;
                let e = dice_sums.entry(&r.organ).or_default();
                e.0 += m.dice;
                e.1 += 1;
                s.max_hd_mm = Some(s.max_hd_mm.map_or(m.hd_mm, |h| h.max(m.hd_mm)));
            }
            _ => s.errors += 1,
        }
    }
    for (organ, (sum, n)) in dice_sums {
        if let Some(s) = out.get_mut(organ) {
            s.mean_dice = Some(sum / n as f64);
        }
    }
    out
}

/// Lower is more urgent.
fn severity(c: Category) -> u8 {
    match c {
        Category::EmptyPrediction | Category::EmptyGroundTruth => 0,
        Category::MixedFailure => 1,
        Category::OversegFar => 2,
        Category::Underseg => 3,
        Category::OversegNear => 4,
        Category::Borderline => 5,
        Category::Good | Category::BothEmpty => 6,
    }
}

/// Failure candidates ordered by severity class, then larger Dice deficit,
/// then larger Hausdorff distance. Ties keep record order.
pub fn rank_candidates(records: &[CaseRecord], thresholds: &ThresholdMap) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = records
        .iter()
        .filter(|r| r.is_failure_candidate())
        .filter_map(|r| {
            let v = r.verdict.as_ref()?;
            let m = r.metrics.as_ref()?;
            let good = thresholds.get(&r.organ).map_or(1.0, |t| t.dice_good);
            Some(Candidate {
                case_id: r.case_id.clone(),
                organ: r.organ.clone(),
                category: v.category,
                dice: m.dice,
                hd_mm: m.hd_mm,
                dice_deficit: good - m.dice,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        severity(a.category)
            .cmp(&severity(b.category))
            .then_with(|| b.dice_deficit.total_cmp(&a.dice_deficit))
            .then_with(|| b.hd_mm.total_cmp(&a.hd_mm))
            .then(Ordering::Equal)
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format `{other}` (json, csv)")),
        }
    }
}

/// `%g`-style formatting with 6 significant digits; infinity is `inf`.
pub fn format_sig6(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mant, e) = sci.split_once('e').expect("exponent form");
    let exp: i32 = e.parse().expect("exponent");
    if !(-4..6).contains(&exp) {
        let mant = trim_zeros(mant);
        return format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (5 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const CSV_COLUMNS: [&str; 8] = [
    "case_id",
    "organ",
    "dice",
    "hd_mm",
    "hd_pred_to_gt_mm",
    "hd_gt_to_pred_mm",
    "category",
    "is_failure_candidate",
];

pub fn render_report(report: &BatchReport, format: ReportFormat) -> Result<String, PipelineError> {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(report)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| PipelineError::Serialization(e.to_string())),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let ser = |e: csv::Error| PipelineError::Serialization(e.to_string());
            w.write_record(CSV_COLUMNS).map_err(ser)?;
            for r in &report.records {
                let row: [String; 8] = match (&r.metrics, &r.verdict) {
                    (Some(m), Some(v)) => [
                        r.case_id.clone(),
                        r.organ.clone(),
                        format_sig6(m.dice),
                        format_sig6(m.hd_mm),
                        format_sig6(m.hd_pred_to_gt_mm),
                        format_sig6(m.hd_gt_to_pred_mm),
                        v.category.to_string(),
                        v.is_failure_candidate.to_string(),
                    ],
                    _ => [
                        r.case_id.clone(),
                        r.organ.clone(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        "Error".into(),
                        "false".into(),
                    ],
                };
                w.write_record(&row).map_err(ser)?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| PipelineError::Serialization(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| PipelineError::Serialization(e.to_string()))
        }
    }
}

pub fn write_report(report: &BatchReport, format: ReportFormat, path: &Path) -> Result<(), PipelineError> {
    let text = render_report(report, format)?;
    std::fs::write(path, text).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::default_thresholds;
    use crate::volume::PairStatus;

    fn record(id: &str, organ: &str, category: Category, dice: f64, hd: f64) -> CaseRecord {
        CaseRecord {
            case_id: id.into(),
            organ: organ.into(),
            pred_path: format!("{id}_pred.nrrd").into(),
            gt_path: format!("{id}_gt.nrrd").into(),
            metrics: Some(MetricResult {
                dice,
                hd_pred_to_gt_mm: hd,
                hd_gt_to_pred_mm: hd / 2.0,
                hd_mm: hd,
                pred_volume_mm3: 10.0,
                gt_volume_mm3: 10.0,
                status: PairStatus::Ok,
                components: vec![],
            }),
            verdict: Some(CaseVerdict {
                category,
                is_failure_candidate: category.is_failure_candidate(),
                rationale: "r".into(),
            }),
            error: None,
            warnings: vec![],
            wall_time_ms: 0,
        }
    }

    fn error_record(id: &str) -> CaseRecord {
        CaseRecord {
            metrics: None,
            verdict: None,
            error: Some(CaseFailure {
                kind: FailureKind::Io,
                message: "missing".into(),
            }),
            ..record(id, "Breast", Category::Good, 0.0, 0.0)
        }
    }

    #[test]
    fn severity_order_wins() {
        let t = default_thresholds();
        let recs = vec![
            record("b", "Breast", Category::Borderline, 0.85, 4.0),
            record("m", "Breast", Category::MixedFailure, 0.7, 50.0),
        ];
        let c = rank_candidates(&recs, &t);
        assert_eq!(c[0].case_id, "m");
        assert_eq!(c[1].case_id, "b");
    }

    #[test]
    fn larger_deficit_first_then_hd() {
        let t = default_thresholds();
        let recs = vec![
            record("u7", "Breast", Category::Underseg, 0.7, 3.0),
            record("u5", "Breast", Category::Underseg, 0.5, 3.0),
            record("f1", "Breast", Category::OversegFar, 0.95, 120.0),
            record("f2", "Breast", Category::OversegFar, 0.95, 150.0),
            record("f3", "Breast", Category::OversegFar, 0.95, 150.0),
        ];
        let ids: Vec<_> = rank_candidates(&recs, &t).into_iter().map(|c| c.case_id).collect();
        assert_eq!(ids, ["f2", "f3", "f1", "u5", "u7"]);
    }

    #[test]
    fn all_good_has_no_candidates() {
        let t = default_thresholds();
        let recs = vec![record("a", "Breast", Category::Good, 1.0, 0.0)];
        assert!(rank_candidates(&recs, &t).is_empty());
    }

    #[test]
    fn summary_counts_include_errors() {
        let t = default_thresholds();
        let rep = BatchReport::from_records(
            vec![
                record("a", "Breast", Category::Good, 1.0, 0.0),
                record("b", "Breast", Category::Underseg, 0.5, 2.0),
                error_record("c"),
                record("d", "Femur", Category::Good, 0.95, 3.0),
            ],
            &t,
        );
        let b = &rep.summary["Breast"];
        assert_eq!(b.cases, 3);
        assert_eq!(b.errors, 1);
        assert_eq!(b.counts.values().sum::<usize>() + b.errors, b.cases);
        assert_eq!(b.mean_dice, Some(0.75));
        assert_eq!(b.max_hd_mm, Some(2.0));
        assert_eq!(rep.candidates.len(), 1);
        assert_eq!(rep.error_count(), 1);
    }

    #[test]
    fn csv_rows_and_inf() {
        let t = default_thresholds();
        let mut inf = record("e", "Breast", Category::EmptyPrediction, 0.0, f64::INFINITY);
        inf.metrics.as_mut().unwrap().hd_gt_to_pred_mm = f64::INFINITY;
        let rep = BatchReport::from_records(
            vec![
                record("a", "Breast", Category::Good, 1.0, 0.0),
                record("b", "Breast", Category::Underseg, 2.0 / 3.0, 2.5),
                inf,
            ],
            &t,
        );
        let csv = render_report(&rep, ReportFormat::Csv).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(lines[2], "b,Breast,0.666667,2.5,2.5,1.25,Underseg,true");
        assert_eq!(lines[3], "e,Breast,0,inf,inf,inf,EmptyPrediction,true");
    }

    #[test]
    fn json_round_trip() {
        let t = default_thresholds();
        let mut inf = record("e", "Breast", Category::EmptyPrediction, 0.0, f64::INFINITY);
        inf.warnings.push("no spacing".into());
        let rep = BatchReport::from_records(
            vec![record("a", "Breast", Category::OversegNear, 0.9123456789, 17.25), inf, error_record("z")],
            &t,
        );
        let s = render_report(&rep, ReportFormat::Json).unwrap();
        let back: BatchReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, rep);
    }

    #[test]
    fn sig6_formatting() {
        let cases = [
            (1.0, "1"),
            (0.5, "0.5"),
            (0.123456789, "0.123457"),
            (6.0, "6"),
            (103.0, "103"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e+06"),
            (0.0000123456, "1.23456e-05"),
            (9.9999999, "10"),
            (999999.7, "1e+06"),
            (0.0001, "0.0001"),
            (-2.5, "-2.5"),
            (0.0, "0"),
        ];
        for (x, want) in cases {
            assert_eq!(format_sig6(x), want, "{x}");
        }
    }
}
