//! Spatial seeding: K-means in one image frame, six trajectories per seed.

use crate::kmeans::kmeans_2d;
use crate::pipeline::{SegmentConfig, SegmentError};
use crate::traj::TrajectorySet;
use rand_chacha::ChaCha8Rng;

/// Members per seed cluster.
pub const SEED_SIZE: usize = 6;

const KMEANS_RESTARTS: usize = 10;

/// One seed cluster around a K-means center. Members are ordered
/// farthest-first from the center, so a query that replaces the first member
/// keeps the five points nearest the center.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedCluster {
    pub id: usize,
    pub members: [usize; SEED_SIZE],
    pub center: [f64; 2],
}

/// Seed count actually used: the configured count, capped so an average
/// cluster clears the rejection threshold with a three-point margin, and
/// floored at the target motion count. Errors when even that many seeds
/// cannot be populated.
pub fn effective_seed_count(n: usize, config: &SegmentConfig) -> Result<usize, SegmentError> {
    let cap = n / (config.reject_threshold + 3);
    let m = config.seeds.min(cap).max(config.target_motions);
    if n < SEED_SIZE * m {
        return Err(SegmentError::TooFewPoints {
            points: n,
            needed: SEED_SIZE * m,
        });
    }
    Ok(m)
}

/// Clusters the chosen frame's point positions into `m` seeds of six.
///
/// K-means runs with seeded random initialization and [`KMEANS_RESTARTS`]
/// restarts; centers are then sorted by position so cluster ids do not depend
/// on which restart won. Members are claimed globally greedily: all
/// (distance, center, point) triples ascending, each center taking the six
/// nearest points still free.
pub fn spatial_kmeans_init(
    traj: &TrajectorySet,
    m: usize,
    frame: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SeedCluster>, SegmentError> {
    let n = traj.num_points();
    if n < SEED_SIZE * m {
        return Err(SegmentError::TooFewPoints {
            points: n,
            needed: SEED_SIZE * m,
        });
    }
    let positions = traj.frame_positions(frame);
    let mut centers = kmeans_2d(&positions, m, KMEANS_RESTARTS, rng).centers;
    centers.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));

    let mut triples: Vec<(f64, usize, usize)> = Vec::with_capacity(m * n);
    for (j, c) in centers.iter().enumerate() {
        for (k, p) in positions.iter().enumerate() {
            let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
            triples.push((d2, j, k));
        }
    }
    triples.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut taken = vec![false; n];
    let mut claimed: Vec<Vec<usize>> = vec![Vec::with_capacity(SEED_SIZE); m];
    let mut filled = 0;
    for &(_, j, k) in &triples {
        if claimed[j].len() < SEED_SIZE && !taken[k] {
            taken[k] = true;
            claimed[j].push(k);
            filled += 1;
            if filled == SEED_SIZE * m {
                break;
            }
        }
    }
    Ok(claimed
        .into_iter()
        .enumerate()
        .map(|(id, mut members)| {
            // Claim order is nearest-first; store farthest-first.
            members.reverse();
            SeedCluster {
                id,
                members: std::array::from_fn(|i| members[i]),
                center: centers[id],
            }
        })
        .collect())
}
