//! Cluster merging: next-best-classification similarity over seed clusters,
//! thresholded connected components, and GEV-mode refinement down to the
//! target motion count.

use crate::gev::{fit_gev_mle, gev_mode};
use crate::par;
use crate::pipeline::classify::PointScores;
use crate::pipeline::{MergeEvent, MergeStage, SegmentConfig};
use crate::score::{matching_score, median};
use crate::traj::TrajectorySet;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Smallest denominator admitted in similarity terms; exact-zero scores on
/// clean data would otherwise produce singular entries.
pub const SCORE_CLAMP: f64 = 1e-9;

/// Symmetric zero-diagonal affinities between live clusters.
#[derive(Clone, Debug)]
pub struct SimilarityMatrix {
    /// Original cluster id of each row.
    pub clusters: Vec<usize>,
    pub entries: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn max_entry(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .fold(0.0, |a: f64, &b| a.max(b))
    }
}

/// Accumulates, for every scored point, one term on the unordered pair (best
/// cluster, runner-up cluster): the reciprocal of the runner-up's score,
/// clamped below by [`SCORE_CLAMP`]. Only live clusters participate.
pub fn nbc_similarity(columns: &[PointScores], live: &[bool]) -> SimilarityMatrix {
    let clusters: Vec<usize> = (0..live.len()).filter(|&j| live[j]).collect();
    let mut row_of = vec![usize::MAX; live.len()];
    for (row, &j) in clusters.iter().enumerate() {
        row_of[j] = row;
    }
    let mm = clusters.len();
    let mut entries = vec![vec![0.0; mm]; mm];
    for col in columns {
        let (Some(best), Some(runner)) = (col.best_live(live), col.runner_up_live(live)) else {
            continue;
        };
        let term = 1.0 / col.scores[runner].max(SCORE_CLAMP);
        let (lo, hi) = {
            let (a, b) = (row_of[best], row_of[runner]);
            if a < b {
                (a, b)
            } else {
                (b, a)
            }
        };
        entries[lo][hi] += term;
    }
    for lo in 0..mm {
        for hi in (lo + 1)..mm {
            entries[hi][lo] = entries[lo][hi];
        }
    }
    SimilarityMatrix { clusters, entries }
}

/// Keeps entries at or above `tau_fraction` times the largest entry (and
/// strictly positive) as graph edges and returns the connected components as
/// sorted lists of original cluster ids, ordered by smallest member.
pub fn threshold_components(similarity: &SimilarityMatrix, tau_fraction: f64) -> Vec<Vec<usize>> {
    let mm = similarity.clusters.len();
    let tau = tau_fraction * similarity.max_entry();
    let mut seen = vec![false; mm];
    let mut components = Vec::new();
    for start in 0..mm {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        let mut comp = Vec::new();
        seen[start] = true;
        while let Some(u) = stack.pop() {
            comp.push(similarity.clusters[u]);
            for v in 0..mm {
                let l = similarity.entries[u][v];
                if !seen[v] && l >= tau && l > 0.0 {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components.sort_by_key(|c| c[0]);
    components
}

/// Draws one mixture bundle: three points uniformly without replacement from
/// each side; a side with fewer than three contributes everything and the
/// remainder comes from the other side. `None` when both sides together hold
/// fewer than six points.
fn sample_mixture(rng: &mut ChaCha8Rng, a: &[usize], b: &[usize]) -> Option<[usize; 6]> {
    if a.len() + b.len() < 6 {
        return None;
    }
    let mut take_a = 3.min(a.len());
    let mut take_b = 3.min(b.len());
    if take_a < 3 {
        take_b = (6 - take_a).min(b.len());
    } else if take_b < 3 {
        take_a = (6 - take_b).min(a.len());
    }
    debug_assert_eq!(take_a + take_b, 6);
    let mut picks = [0usize; 6];
    for (slot, i) in rand::seq::index::sample(rng, a.len(), take_a)
        .iter()
        .enumerate()
    {
        picks[slot] = a[i];
    }
    for (slot, i) in rand::seq::index::sample(rng, b.len(), take_b)
        .iter()
        .enumerate()
    {
        picks[take_a + slot] = b[i];
    }
    Some(picks)
}

fn similarity_statistic(scores: &[f64], fallbacks: &mut usize) -> f64 {
    match fit_gev_mle(scores).and_then(|p| gev_mode(&p)) {
        Ok(mode) => mode,
        Err(_) => {
            *fallbacks += 1;
            median(scores).unwrap_or(f64::MAX)
        }
    }
}

#[derive(Clone, Debug)]
pub struct RefinementOutcome {
    /// Final clusters as sorted point lists.
    pub clusters: Vec<Vec<usize>>,
    pub events: Vec<MergeEvent>,
    pub gev_fallbacks: usize,
}

/// Agglomerative refinement: while more clusters remain than targets, score
/// `mixture_samples` cross-cluster bundles per pair, summarize each pair by
/// the GEV mode of its scores (median on fit failure), and merge the pair
/// with the smallest statistic.
///
/// Bundles are drawn sequentially from the shared generator and scored in
/// parallel, so builds with and without the `parallel` feature merge
/// identically. Pair statistics are cached; a merge invalidates only the
/// merged clusters' entries.
pub fn refinement_merge(
    traj: &TrajectorySet,
    initial: Vec<Vec<usize>>,
    config: &SegmentConfig,
    rng: &mut ChaCha8Rng,
) -> RefinementOutcome {
    let mut next_id = initial.len();
    let mut clusters: Vec<(usize, Vec<usize>)> = initial
        .into_iter()
        .enumerate()
        .map(|(id, mut points)| {
            points.sort_unstable();
            (id, points)
        })
        .collect();
    let mut cache: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut events = Vec::new();
    let mut fallbacks = 0usize;

    while clusters.len() > config.target_motions {
        // Draw bundles for pairs not yet cached, in pair order.
        let mut jobs: Vec<((usize, usize), Vec<[usize; 6]>)> = Vec::new();
        for ai in 0..clusters.len() {
            for bi in (ai + 1)..clusters.len() {
                let (ia, ib) = (clusters[ai].0, clusters[bi].0);
                let key = (ia.min(ib), ia.max(ib));
                if cache.contains_key(&key) {
                    continue;
                }
                let mut bundles = Vec::with_capacity(config.mixture_samples);
                for _ in 0..config.mixture_samples {
                    match sample_mixture(rng, &clusters[ai].1, &clusters[bi].1) {
                        Some(bundle) => bundles.push(bundle),
                        None => break,
                    }
                }
                jobs.push((key, bundles));
            }
        }
        let flat: Vec<&[usize; 6]> = jobs.iter().flat_map(|(_, b)| b.iter()).collect();
        let scores = par::map_indexed(flat.len(), |i| {
            matching_score(&traj.bundle(flat[i]), config.degeneracy_eps).score
        });
        let mut offset = 0;
        for (key, bundles) in &jobs {
            let stat = if bundles.is_empty() {
                // Under six points in total: nothing to draw, merge last.
                f64::MAX
            } else {
                similarity_statistic(&scores[offset..offset + bundles.len()], &mut fallbacks)
            };
            offset += bundles.len();
            cache.insert(*key, stat);
        }

        let (&key, &stat) = cache
            .iter()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("pairs exist");
        let (keep_a, keep_b) = key;
        let a_pos = clusters
            .iter()
            .position(|(id, _)| *id == keep_a)
            .expect("id present");
        let b_pos = clusters
            .iter()
            .position(|(id, _)| *id == keep_b)
            .expect("id present");
        let mut merged_points = clusters[a_pos].1.clone();
        merged_points.extend_from_slice(&clusters[b_pos].1);
        merged_points.sort_unstable();
        events.push(MergeEvent {
            stage: MergeStage::Refinement,
            clusters: vec![keep_a, keep_b],
            statistic: stat,
        });
        clusters.retain(|(id, _)| *id != keep_a && *id != keep_b);
        clusters.push((next_id, merged_points));
        next_id += 1;
        cache.retain(|&(x, y), _| x != keep_a && x != keep_b && y != keep_a && y != keep_b);
    }

    RefinementOutcome {
        clusters: clusters.into_iter().map(|(_, points)| points).collect(),
        events,
        gev_fallbacks: fallbacks,
    }
}
