//! Batch execution over a directory of trajectory files.

use crate::eval::{misclassification_error, EvaluationReport, SequenceOutcome};
use crate::par;
use crate::pipeline::{segment, SegmentConfig};
use crate::traj::load_trajectories;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

/// Sidecar file mapping sequence names to category tags.
pub const MANIFEST_NAME: &str = "manifest.txt";

/// Category used for sequences absent from the manifest.
pub const DEFAULT_CATEGORY: &str = "uncategorized";

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("cannot read batch directory {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Reads `manifest.txt` if present: one `name category` pair per line, blank
/// lines and `#` comments ignored. Unparseable lines are skipped.
fn read_manifest(dir: &Path) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    let Ok(text) = std::fs::read_to_string(dir.join(MANIFEST_NAME)) else {
        return map;
    };
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        if let (Some(name), Some(category)) = (parts.next(), parts.next()) {
            map.insert(name.to_string(), category.to_string());
        }
    }
    map
}

fn sequence_files(dir: &Path) -> Result<Vec<PathBuf>, BatchError> {
    let entries = std::fs::read_dir(dir).map_err(|source| BatchError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| BatchError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if path.is_file() && name != MANIFEST_NAME && !name.starts_with('.') {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn run_one(
    path: &Path,
    category: &str,
    config: &SegmentConfig,
    motions_override: Option<usize>,
) -> SequenceOutcome {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut outcome = SequenceOutcome {
        sequence: name,
        category: category.to_string(),
        motions: motions_override.unwrap_or(0),
        error_pct: None,
        runtime_ms: 0,
        seed: config.rng_seed,
        note: None,
    };
    let record = match load_trajectories(path) {
        Ok(record) => record,
        Err(e) => {
            outcome.note = Some(format!("load failed: {e}"));
            return outcome;
        }
    };
    outcome.sequence = record.name.clone();
    let mut config = config.clone();
    config.target_motions = motions_override.unwrap_or(record.target_motions);
    outcome.motions = config.target_motions;
    let start = Instant::now();
    let result = segment(&record.traj, &config);
    outcome.runtime_ms = start.elapsed().as_millis() as u64;
    let result = match result {
        Ok(result) => result,
        Err(e) => {
            outcome.note = Some(format!("segmentation failed: {e}"));
            return outcome;
        }
    };
    match &record.traj.labels {
        Some(truth) => match misclassification_error(&result.labels, truth) {
            Ok(e) => outcome.error_pct = Some(e),
            Err(e) => outcome.note = Some(format!("evaluation failed: {e}")),
        },
        None => outcome.note = Some("no ground-truth labels".to_string()),
    }
    outcome
}

/// Segments every sequence file in `dir` (sorted by name, skipping the
/// manifest and dotfiles) and aggregates the outcomes. Sequences run
/// concurrently; per-sequence failures become annotated rows rather than
/// aborting the batch. An empty directory yields an empty report.
pub fn run_batch(
    dir: &Path,
    config: &SegmentConfig,
    motions_override: Option<usize>,
) -> Result<EvaluationReport, BatchError> {
    let manifest = read_manifest(dir);
    let files = sequence_files(dir)?;
    let rows = par::map_indexed(files.len(), |i| {
        let path = &files[i];
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let category = manifest
            .get(&stem)
            .map(String::as_str)
            .unwrap_or(DEFAULT_CATEGORY);
        run_one(path, category, config, motions_override)
    });
    Ok(EvaluationReport::from_rows(rows))
}
