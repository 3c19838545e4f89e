//! Per-case evaluation and parallel batch processing.

mod manifest;
mod report;

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

pub use manifest::{Manifest, ManifestRow, MANIFEST_COLUMNS};
pub use report::{
    format_sig6, rank_candidates, render_report, write_report, BatchReport, Candidate, CaseFailure,
    CaseRecord, FailureKind, OrganSummary, ReportFormat, CSV_COLUMNS,
};

use crate::classifier::{classify, ThresholdMap};
use crate::error::{MetricsError, PipelineError, VolumeError};
use crate::metrics::evaluate_metrics;
use crate::volume::{read_nrrd, LabelPolicy, MaskVolume};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    pub parallelism: usize,
    /// Record per-case wall time. Off by default so that reports are
    /// byte-identical across runs.
    pub timings: bool,
    pub label_policy: LabelPolicy,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
            timings: false,
            label_policy: LabelPolicy::default(),
        }
    }
}

fn volume_failure(e: &VolumeError) -> FailureKind {
    match e {
        VolumeError::GeometryMismatch { .. } | VolumeError::LengthMismatch { .. } => FailureKind::Data,
        _ => FailureKind::Io,
    }
}

fn fail(kind: FailureKind, message: String) -> CaseFailure {
    CaseFailure { kind, message }
}

fn load(path: &Path, which: &str, policy: LabelPolicy) -> Result<MaskVolume, CaseFailure> {
    read_nrrd(path, policy).map_err(|e| fail(volume_failure(&e), format!("{which}: {e}")))
}

/// Loads, measures and classifies one manifest row. Never fails: problems
/// end up in `CaseRecord::error`.
pub fn evaluate_case(row: &ManifestRow, thresholds: &ThresholdMap, options: &BatchOptions) -> CaseRecord {
    let start = Instant::now();
    let mut record = CaseRecord {
        case_id: row.case_id.clone(),
        organ: row.organ.clone(),
        pred_path: row.pred_path.clone(),
        gt_path: row.gt_path.clone(),
        metrics: None,
        verdict: None,
        error: None,
        warnings: Vec::new(),
        wall_time_ms: 0,
    };
    match run_case(row, thresholds, options, &mut record.warnings) {
        Ok((m, v)) => {
            record.metrics = Some(m);
            record.verdict = Some(v);
        }
        Err(f) => {
            log::warn!("case {}: {}", row.case_id, f.message);
            record.error = Some(f);
        }
    }
    if options.timings {
        record.wall_time_ms = start.elapsed().as_millis() as u64;
    }
    record
}

fn run_case(
    row: &ManifestRow,
    thresholds: &ThresholdMap,
    options: &BatchOptions,
    warnings: &mut Vec<String>,
) -> Result<(crate::metrics::MetricResult, crate::classifier::CaseVerdict), CaseFailure> {
    let t = thresholds
        .resolve(&row.organ)
        .map_err(|e| fail(FailureKind::Config, e.to_string()))?;
    let pred = load(&row.pred_path, "prediction", options.label_policy)?;
    let gt = load(&row.gt_path, "ground truth", options.label_policy)?;
    for w in pred.warnings() {
        warnings.push(format!("prediction: {w}"));
    }
    for w in gt.warnings() {
        warnings.push(format!("ground truth: {w}"));
    }
    let m = evaluate_metrics(&pred, &gt).map_err(|e| match e {
        MetricsError::Geometry(v) => fail(volume_failure(&v), v.to_string()),
        other => fail(FailureKind::Data, other.to_string()),
    })?;
    let v = classify(&m, t).map_err(|e| fail(FailureKind::Config, e.to_string()))?;
    Ok((m, v))
}

/// Evaluates every manifest row on a pool of `options.parallelism` threads.
/// Records come back in manifest order regardless of scheduling.
pub fn batch_evaluate(
    manifest: &Manifest,
    thresholds: &ThresholdMap,
    options: &BatchOptions,
) -> Result<BatchReport, PipelineError> {
    if options.parallelism == 0 {
        return Err(PipelineError::ZeroParallelism);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallelism)
        .build()
        .map_err(|e| PipelineError::ThreadPool(e.to_string()))?;
    let records: Vec<CaseRecord> = pool.install(|| {
        manifest
            .rows
            .par_iter()
            .map(|row| evaluate_case(row, thresholds, options))
            .collect()
    });
    Ok(BatchReport::from_records(records, thresholds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{default_thresholds, Category};
    use crate::volume::{write_nrrd, Encoding, GridGeometry};

    fn ball(g: GridGeometry, c: [f64; 3], r: f64) -> MaskVolume {
        MaskVolume::from_fn(g, move |p| {
            (0..3).map(|k| (p[k] as f64 - c[k]).powi(2)).sum::<f64>() <= r * r
        })
    }

    fn setup(dir: &Path, n: usize) -> Manifest {
        let g = GridGeometry::new([20, 20, 20], [1.0; 3]).unwrap();
        let gt = ball(g, [10.0; 3], 6.0);
        write_nrrd(dir.join("gt.nrrd"), &gt, Encoding::Gzip).unwrap();
        let mut rows = Vec::new();
        for i in 0..n {
            let pred = match i % 3 {
                0 => gt.clone(),
                1 => ball(g, [10.0; 3], 3.0),
                _ => MaskVolume::from_fn(g, |p| gt.get(p) || (p[0] == 1 && p[1] == 1 && p[2] == 1)),
            };
            let name = format!("p{i:03}.nrrd");
            write_nrrd(dir.join(&name), &pred, Encoding::Gzip).unwrap();
            rows.push(ManifestRow {
                case_id: format!("c{i:03}"),
                organ: "Breast".into(),
                pred_path: dir.join(name),
                gt_path: dir.join("gt.nrrd"),
            });
        }
        Manifest { rows }
    }

    #[test]
    fn bad_row_does_not_abort_batch() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = setup(dir.path(), 99);
        m.rows.insert(
            50,
            ManifestRow {
                case_id: "missing".into(),
                organ: "Breast".into(),
                pred_path: dir.path().join("nope.nrrd"),
                gt_path: dir.path().join("gt.nrrd"),
            },
        );
        let opts = BatchOptions {
            parallelism: 4,
            ..Default::default()
        };
        let rep = batch_evaluate(&m, &default_thresholds(), &opts).unwrap();
        assert_eq!(rep.records.len(), 100);
        assert_eq!(rep.error_count(), 1);
        let bad = &rep.records[50];
        assert_eq!(bad.case_id, "missing");
        assert_eq!(bad.error.as_ref().unwrap().kind, FailureKind::Io);
        assert!(bad.verdict.is_none());
        assert_eq!(rep.records.iter().filter(|r| r.verdict.is_some()).count(), 99);
    }

    #[test]
    fn order_and_content_independent_of_parallelism() {
        let dir = tempfile::tempdir().unwrap();
        let m = setup(dir.path(), 12);
        let t = default_thresholds();
        let run = |p| {
            let opts = BatchOptions {
                parallelism: p,
                ..Default::default()
            };
            render_report(&batch_evaluate(&m, &t, &opts).unwrap(), ReportFormat::Json).unwrap()
        };
        let one = run(1);
        assert_eq!(one, run(4));
        assert_eq!(one, run(3));
    }

    #[test]
    fn categories_of_the_fixture_cases() {
        let dir = tempfile::tempdir().unwrap();
        let m = setup(dir.path(), 3);
        let rep = batch_evaluate(&m, &default_thresholds(), &BatchOptions::default()).unwrap();
        assert_eq!(rep.records[0].category(), Some(Category::Good));
        assert_eq!(rep.records[1].category(), Some(Category::Underseg));
        // stray voxel at (1,1,1) is sqrt(3)*9 - 6 ~ 9.6 mm from the ball surface
        assert_eq!(rep.records[2].category(), Some(Category::OversegNear));
        assert_eq!(rep.candidates.len(), 2);
    }

    #[test]
    fn unknown_organ_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = setup(dir.path(), 1);
        m.rows[0].organ = "Spleen".into();
        let rep = batch_evaluate(&m, &default_thresholds(), &BatchOptions::default()).unwrap();
        assert_eq!(rep.records[0].error.as_ref().unwrap().kind, FailureKind::Config);
    }

    #[test]
    fn zero_parallelism_rejected() {
        let opts = BatchOptions {
            parallelism: 0,
            ..Default::default()
        };
        assert!(matches!(
            batch_evaluate(&Manifest::default(), &default_thresholds(), &opts),
            Err(PipelineError::ZeroParallelism)
        ));
    }

    #[test]
    fn geometry_mismatch_is_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let a = MaskVolume::from_fn(GridGeometry::new([4, 4, 4], [1.0; 3]).unwrap(), |p| p[0] == 1);
        let b = MaskVolume::from_fn(GridGeometry::new([4, 4, 5], [1.0; 3]).unwrap(), |p| p[0] == 1);
        write_nrrd(dir.path().join("a.nrrd"), &a, Encoding::Raw).unwrap();
        write_nrrd(dir.path().join("b.nrrd"), &b, Encoding::Raw).unwrap();
        let row = ManifestRow {
            case_id: "x".into(),
            organ: "femur".into(),
            pred_path: dir.path().join("a.nrrd"),
            gt_path: dir.path().join("b.nrrd"),
        };
        let r = evaluate_case(&row, &default_thresholds(), &BatchOptions::default());
        assert_eq!(r.error.unwrap().kind, FailureKind::Data);
    }
}
