//! Winner-takes-all classification against seed clusters, and size-based
//! rejection of sparsely supported seeds.

use crate::par;
use crate::pipeline::seed::{SeedCluster, SEED_SIZE};
use crate::pipeline::{SegmentConfig, SegmentError};
use crate::score::matching_score;
use crate::traj::TrajectorySet;

/// Score of one query trajectory against one seed: the query replaces the
/// seed's first member and the six-trajectory bundle is scored as usual.
/// Scores only ever involve the query and seed members, never other
/// classified points.
pub fn score_against_seed(traj: &TrajectorySet, point: usize, seed: &SeedCluster, eps: f64) -> f64 {
    let m = &seed.members;
    let bundle = traj.bundle(&[point, m[1], m[2], m[3], m[4], m[5]]);
    matching_score(&bundle, eps).score
}

/// Scores and ranking of one classified point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointScores {
    pub point: usize,
    /// Score against every seed cluster, indexed by cluster id.
    pub scores: Vec<f64>,
    /// Cluster ids by ascending score; ties go to the lower id.
    pub order: Vec<usize>,
}

impl PointScores {
    pub fn new(point: usize, scores: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        Self {
            point,
            scores,
            order,
        }
    }

    /// Best-ranked cluster among the live ones.
    pub fn best_live(&self, live: &[bool]) -> Option<usize> {
        self.order.iter().copied().find(|&j| live[j])
    }

    /// Second-best-ranked live cluster.
    pub fn runner_up_live(&self, live: &[bool]) -> Option<usize> {
        self.order.iter().copied().filter(|&j| live[j]).nth(1)
    }
}

/// One scored column per non-seed point, in point order.
#[derive(Clone, Debug)]
pub struct RankingMatrix {
    pub columns: Vec<PointScores>,
}

/// Scores every non-seed trajectory against every seed. Columns are mutually
/// independent and are computed in parallel.
pub fn classify_points(traj: &TrajectorySet, seeds: &[SeedCluster], eps: f64) -> RankingMatrix {
    let n = traj.num_points();
    let mut is_seed_member = vec![false; n];
    for seed in seeds {
        for &k in &seed.members {
            is_seed_member[k] = true;
        }
    }
    let queries: Vec<usize> = (0..n).filter(|&k| !is_seed_member[k]).collect();
    let columns = par::map_indexed(queries.len(), |qi| {
        let k = queries[qi];
        let scores = seeds
            .iter()
            .map(|s| score_against_seed(traj, k, s, eps))
            .collect();
        PointScores::new(k, scores)
    });
    RankingMatrix { columns }
}

/// Classification state after rejection: every scored point with its full
/// ranking, plus which clusters remain live.
#[derive(Clone, Debug)]
pub struct ClassificationState {
    /// Original non-seed columns, then members of rejected seeds in rejection
    /// order.
    pub columns: Vec<PointScores>,
    pub live: Vec<bool>,
    /// Rejected cluster ids in removal order.
    pub rejected: Vec<usize>,
}

impl ClassificationState {
    /// Current assignment of a scored point: its best live cluster.
    pub fn assignment(&self, column: &PointScores) -> usize {
        column
            .best_live(&self.live)
            .expect("at least one live cluster")
    }
}

/// Removes clusters whose total size (six seed members plus assigned points)
/// is at or below the rejection threshold, smallest first, until none remain.
///
/// Assignees of a removed cluster fall to the next surviving cluster in their
/// existing ranking; the removed seed's own members get fresh score columns
/// and are classified like any other point from then on.
pub fn reject_small_clusters(
    traj: &TrajectorySet,
    seeds: &[SeedCluster],
    ranking: RankingMatrix,
    config: &SegmentConfig,
) -> Result<ClassificationState, SegmentError> {
    let m = seeds.len();
    let mut live = vec![true; m];
    let mut columns = ranking.columns;
    let mut rejected = Vec::new();
    loop {
        let survivors = live.iter().filter(|&&l| l).count();
        if survivors < config.target_motions {
            return Err(SegmentError::AllClustersRejected {
                survivors,
                target: config.target_motions,
            });
        }
        let mut sizes = vec![0usize; m];
        for (j, &alive) in live.iter().enumerate() {
            if alive {
                sizes[j] = SEED_SIZE;
            }
        }
        for col in &columns {
            sizes[col.best_live(&live).expect("live cluster exists")] += 1;
        }
        let victim = (0..m)
            .filter(|&j| live[j] && sizes[j] <= config.reject_threshold)
            .min_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(a.cmp(&b)));
        let Some(victim) = victim else { break };
        live[victim] = false;
        rejected.push(victim);
        let orphans = par::map_indexed(SEED_SIZE, |i| {
            let k = seeds[victim].members[i];
            let scores = seeds
                .iter()
                .map(|s| score_against_seed(traj, k, s, config.degeneracy_eps))
                .collect();
            PointScores::new(k, scores)
        });
        columns.extend(orphans);
    }
    Ok(ClassificationState {
        columns,
        live,
        rejected,
    })
}
