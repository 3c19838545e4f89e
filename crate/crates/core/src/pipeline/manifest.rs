use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::PipelineError;

pub const MANIFEST_COLUMNS: [&str; 4] = ["case_id", "organ", "pred_path", "gt_path"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub case_id: String,
    pub organ: String,
    pub pred_path: PathBuf,
    pub gt_path: PathBuf,
}

/// Batch input: CSV with header `case_id,organ,pred_path,gt_path`. Extra
/// columns are ignored; relative paths resolve against the manifest's
/// directory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn from_path(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let bad = |m: String| PipelineError::MalformedManifest(m);
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
        if headers.is_empty() || headers.iter().all(str::is_empty) {
            if text.trim().is_empty() {
                return Ok(Self::default());
            }
            return Err(bad("missing header".into()));
        }
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| bad(format!("missing column `{name}`")))
        };
        let idx = [
            col(MANIFEST_COLUMNS[0])?,
            col(MANIFEST_COLUMNS[1])?,
            col(MANIFEST_COLUMNS[2])?,
            col(MANIFEST_COLUMNS[3])?,
        ];

        let mut seen = HashSet::new();
        let mut rows = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let line = n + 2;
            let rec = rec.map_err(|e| bad(format!("line {line}: {e}")))?;
            let field = |i: usize| rec.get(i).unwrap_or("").to_string();
            let [case_id, organ, pred, gt] = idx.map(field);
            if [&case_id, &organ, &pred, &gt].iter().any(|f| f.is_empty()) {
                return Err(bad(format!("line {line}: empty field")));
            }
            if !seen.insert(case_id.clone()) {
                return Err(bad(format!("line {line}: duplicate case_id `{case_id}`")));
            }
            rows.push(ManifestRow {
                case_id,
                organ,
                pred_path: base_dir.join(pred),
                gt_path: base_dir.join(gt),
            });
        }
        Ok(Self { rows })
    }
}
