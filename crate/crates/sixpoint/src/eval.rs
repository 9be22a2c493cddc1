//! Segmentation quality metrics and batch reporting.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("label vectors have lengths {got} and {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{labels} distinct labels exceed the permutation search limit of {limit}")]
    TooManyLabels { labels: usize, limit: usize },
}

/// Largest distinct-label count searched exhaustively; 8! = 40320 mappings.
pub const PERMUTATION_LIMIT: usize = 8;

/// Percentage of points whose predicted label disagrees with the ground
/// truth under the best relabeling of the predictions, found by exhaustive
/// search over permutations of the distinct predicted labels.
pub fn misclassification_error(predicted: &[usize], truth: &[usize]) -> Result<f64, EvalError> {
    if predicted.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return Ok(0.0);
    }
    let mut pred_labels: Vec<usize> = predicted.to_vec();
    pred_labels.sort_unstable();
    pred_labels.dedup();
    let mut true_labels: Vec<usize> = truth.to_vec();
    true_labels.sort_unstable();
    true_labels.dedup();
    let k = pred_labels.len().max(true_labels.len());
    if k > PERMUTATION_LIMIT {
        return Err(EvalError::TooManyLabels {
            labels: k,
            limit: PERMUTATION_LIMIT,
        });
    }
    // Contingency counts: how often predicted class i coincides with true
    // class j. The best permutation maximizes the trace of a row reordering.
    let pred_index: BTreeMap<usize, usize> = pred_labels
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, i))
        .collect();
    let true_index: BTreeMap<usize, usize> = true_labels
        .iter()
        .enumerate()
        .map(|(j, &l)| (l, j))
        .collect();
    let mut counts = vec![vec![0usize; k]; k];
    for (&p, &t) in predicted.iter().zip(truth) {
        counts[pred_index[&p]][true_index[&t]] += 1;
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = 0usize;
    // Heap's algorithm over assignments of predicted classes to true classes.
    let mut stack = vec![0usize; k];
    let agreement = |perm: &[usize]| {
        perm.iter()
            .enumerate()
            .map(|(i, &j)| counts[i][j])
            .sum::<usize>()
    };
    best = best.max(agreement(&perm));
    let mut i = 1;
    while i < k {
        if stack[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(stack[i], i);
            }
            best = best.max(agreement(&perm));
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
    Ok(100.0 * (predicted.len() - best) as f64 / predicted.len() as f64)
}

/// Mean, median, and count of a set of error percentages.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub count: usize,
}

pub fn stats(values: &[f64]) -> Option<Stats> {
    let median = crate::score::median(values)?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Some(Stats {
        mean,
        median,
        count: values.len(),
    })
}

/// One evaluated sequence in a batch run.
#[derive(Clone, Debug)]
pub struct SequenceOutcome {
    pub sequence: String,
    pub category: String,
    pub motions: usize,
    /// Misclassification percentage; absent when the run failed.
    pub error_pct: Option<f64>,
    pub runtime_ms: u64,
    pub seed: u64,
    /// Failure description for runs without an error percentage.
    pub note: Option<String>,
}

#[derive(Clone, Debug)]
pub struct EvaluationReport {
    pub rows: Vec<SequenceOutcome>,
    pub overall: Option<Stats>,
    pub per_category: BTreeMap<String, Stats>,
    /// Counts over one hundred one-percent bins; errors of 99% or more land
    /// in the final bin.
    pub histogram: [usize; 100],
    /// Sorted (error, fraction of sequences at or below it) pairs.
    pub cdf: Vec<(f64, f64)>,
}

impl EvaluationReport {
    pub fn from_rows(rows: Vec<SequenceOutcome>) -> Self {
        let mut errors: Vec<f64> = rows.iter().filter_map(|r| r.error_pct).collect();
        errors.sort_by(f64::total_cmp);
        let overall = stats(&errors);
        let mut by_cat: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for row in &rows {
            if let Some(e) = row.error_pct {
                by_cat.entry(row.category.clone()).or_default().push(e);
            }
        }
        let per_category = by_cat
            .into_iter()
            .filter_map(|(c, v)| stats(&v).map(|s| (c, s)))
            .collect();
        let mut histogram = [0usize; 100];
        for &e in &errors {
            histogram[(e.floor() as usize).min(99)] += 1;
        }
        let n = errors.len();
        let cdf = errors
            .iter()
            .enumerate()
            .map(|(i, &e)| (e, (i + 1) as f64 / n as f64))
            .collect();
        EvaluationReport {
            rows,
            overall,
            per_category,
            histogram,
            cdf,
        }
    }

    /// Per-sequence CSV: `sequence,category,motions,error_pct,runtime_ms,seed`
    /// with a blank error field for failed runs.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "sequence,category,motions,error_pct,runtime_ms,seed")?;
        for r in &self.rows {
            let err = r.error_pct.map(|e| format!("{e:.4}")).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.sequence, r.category, r.motions, err, r.runtime_ms, r.seed
            )?;
        }
        Ok(())
    }

    pub fn write_histogram<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_lo,bin_hi,count")?;
        for (i, &count) in self.histogram.iter().enumerate() {
            writeln!(out, "{},{},{}", i, i + 1, count)?;
        }
        Ok(())
    }

    pub fn write_cdf<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "error_pct,fraction_le")?;
        for &(e, f) in &self.cdf {
            writeln!(out, "{e:.4},{f:.6}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> std::io::Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}
