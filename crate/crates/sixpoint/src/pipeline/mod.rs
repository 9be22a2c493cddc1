//! The segmentation pipeline: spatial seeding, winner-takes-all
//! classification, small-cluster rejection, next-best-classification merging,
//! and mixture-sample refinement down to the target motion count.

pub mod classify;
pub mod merge;
pub mod seed;

pub use classify::{
    classify_points, reject_small_clusters, ClassificationState, PointScores, RankingMatrix,
};
pub use merge::{nbc_similarity, refinement_merge, threshold_components, SimilarityMatrix};
pub use seed::{effective_seed_count, spatial_kmeans_init, SeedCluster, SEED_SIZE};

use crate::geometry::DEFAULT_DEGENERACY_EPS;
use crate::traj::TrajectorySet;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Which frame the spatial seeding runs in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameChoice {
    First,
    Last,
    Index(usize),
}

impl FrameChoice {
    pub fn resolve(self, frames: usize) -> Result<usize, SegmentError> {
        match self {
            FrameChoice::First => Ok(0),
            FrameChoice::Last => Ok(frames - 1),
            FrameChoice::Index(i) if i < frames => Ok(i),
            FrameChoice::Index(i) => Err(SegmentError::FrameOutOfRange { index: i, frames }),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SegmentConfig {
    /// Upper bound on the seed cluster count; the count actually used also
    /// respects the rejection threshold (see [`effective_seed_count`]).
    pub seeds: usize,
    pub frame: FrameChoice,
    /// Fraction of the largest similarity entry kept as a graph edge.
    pub tau_fraction: f64,
    /// Mixture bundles drawn per cluster pair during refinement.
    pub mixture_samples: usize,
    pub target_motions: usize,
    /// Clusters with at most this many total points are rejected.
    pub reject_threshold: usize,
    pub rng_seed: u64,
    pub degeneracy_eps: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            seeds: 20,
            frame: FrameChoice::Last,
            tau_fraction: 0.2,
            mixture_samples: 75,
            target_motions: 2,
            reject_threshold: 7,
            rng_seed: 0,
            degeneracy_eps: DEFAULT_DEGENERACY_EPS,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SegmentError {
    #[error("{points} trajectories cannot host {needed} seed members")]
    TooFewPoints { points: usize, needed: usize },
    #[error("{frames} frames cannot support a signature fit (need {needed})")]
    TooFewFrames { frames: usize, needed: usize },
    #[error("seeding frame {index} out of range for {frames} frames")]
    FrameOutOfRange { index: usize, frames: usize },
    #[error("only {survivors} clusters survived rejection, target is {target}")]
    AllClustersRejected { survivors: usize, target: usize },
    #[error("{components} components after {retries} threshold retries, target is {target}")]
    OverMerged {
        components: usize,
        target: usize,
        retries: usize,
    },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

/// Which pipeline stage produced a merge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MergeStage {
    /// Connected component of the thresholded similarity graph.
    Component,
    /// Smallest GEV-mode pair during refinement.
    Refinement,
}

#[derive(Clone, Debug)]
pub struct MergeEvent {
    pub stage: MergeStage,
    /// Cluster ids combined by this event.
    pub clusters: Vec<usize>,
    /// Threshold fraction for component merges, winning mode for refinement.
    pub statistic: f64,
}

#[derive(Clone, Debug)]
pub struct SegmentationResult {
    /// Final label per trajectory, in `1..=target_motions`.
    pub labels: Vec<usize>,
    /// Classification score at the assigned cluster; 0 for seed members of
    /// surviving clusters, which are never classified.
    pub best_scores: Vec<f64>,
    pub merge_tree: Vec<MergeEvent>,
    /// Seed cluster ids removed by rejection, in removal order.
    pub rejected_seeds: Vec<usize>,
    /// Cluster-pair statistics that fell back from a GEV mode to the median.
    pub gev_fallbacks: usize,
    pub effective_seeds: usize,
    /// Threshold fraction after any over-merge retries.
    pub tau_fraction_used: f64,
    pub rng_seed: u64,
}

fn validate_config(config: &SegmentConfig) -> Result<(), SegmentError> {
    let bad = |m: &str| Err(SegmentError::InvalidConfig(m.into()));
    if config.target_motions == 0 {
        return bad("target_motions must be positive");
    }
    if config.seeds == 0 {
        return bad("seeds must be positive");
    }
    if !(config.tau_fraction > 0.0) || !config.tau_fraction.is_finite() {
        return bad("tau_fraction must be finite and positive");
    }
    if config.mixture_samples == 0 {
        return bad("mixture_samples must be positive");
    }
    if !(config.degeneracy_eps > 0.0) {
        return bad("degeneracy_eps must be positive");
    }
    Ok(())
}

/// Runs the full pipeline on one trajectory set.
///
/// All randomness (K-means restarts, mixture draws) flows from a single
/// generator seeded with `config.rng_seed`, so identical inputs produce
/// identical results.
pub fn segment(
    traj: &TrajectorySet,
    config: &SegmentConfig,
) -> Result<SegmentationResult, SegmentError> {
    validate_config(config)?;
    let n = traj.num_points();
    let frames = traj.num_frames();
    if frames < crate::signature::MIN_OBSERVATIONS {
        return Err(SegmentError::TooFewFrames {
            frames,
            needed: crate::signature::MIN_OBSERVATIONS,
        });
    }
    let m = effective_seed_count(n, config)?;
    let frame = config.frame.resolve(frames)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);

    let seeds = spatial_kmeans_init(traj, m, frame, &mut rng)?;
    let ranking = classify_points(traj, &seeds, config.degeneracy_eps);
    let state = reject_small_clusters(traj, &seeds, ranking, config)?;

    let similarity = nbc_similarity(&state.columns, &state.live);
    let mut tau_fraction = config.tau_fraction;
    let mut components = threshold_components(&similarity, tau_fraction);
    let mut retries = 0;
    while components.len() < config.target_motions {
        if retries == 3 {
            return Err(SegmentError::OverMerged {
                components: components.len(),
                target: config.target_motions,
                retries,
            });
        }
        retries += 1;
        tau_fraction *= 2.0;
        components = threshold_components(&similarity, tau_fraction);
    }

    let mut merge_tree: Vec<MergeEvent> = components
        .iter()
        .filter(|c| c.len() > 1)
        .map(|c| MergeEvent {
            stage: MergeStage::Component,
            clusters: c.clone(),
            statistic: tau_fraction,
        })
        .collect();

    // Intermediate clusters: each component collects its seeds' members plus
    // every point currently assigned to one of its clusters.
    let mut component_of = vec![usize::MAX; m];
    for (ci, comp) in components.iter().enumerate() {
        for &j in comp {
            component_of[j] = ci;
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); components.len()];
    for (j, seed) in seeds.iter().enumerate() {
        if state.live[j] {
            groups[component_of[j]].extend_from_slice(&seed.members);
        }
    }
    for col in &state.columns {
        groups[component_of[state.assignment(col)]].push(col.point);
    }

    let outcome = refinement_merge(traj, groups, config, &mut rng);
    merge_tree.extend(outcome.events);

    let mut final_clusters = outcome.clusters;
    final_clusters.sort_by_key(|c| c[0]);
    let mut labels = vec![0usize; n];
    for (idx, cluster) in final_clusters.iter().enumerate() {
        for &p in cluster {
            labels[p] = idx + 1;
        }
    }
    debug_assert!(labels.iter().all(|&l| l > 0), "every point must be labeled");

    let mut best_scores = vec![0.0; n];
    for col in &state.columns {
        best_scores[col.point] = col.scores[state.assignment(col)];
    }

    Ok(SegmentationResult {
        labels,
        best_scores,
        merge_tree,
        rejected_seeds: state.rejected,
        gev_fallbacks: outcome.gev_fallbacks,
        effective_seeds: m,
        tau_fraction_used: tau_fraction,
        rng_seed: config.rng_seed,
    })
}
