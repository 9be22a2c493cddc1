//! Seeded 2D K-means (Lloyd iterations with random-point initialization and
//! restarts), used for spatial seeding in an image frame.

use rand_chacha::ChaCha8Rng;

const MAX_ITERS: usize = 100;

#[derive(Clone, Debug)]
pub struct KMeansResult {
    pub centers: Vec<[f64; 2]>,
    /// Index of the nearest center per input point; distance ties go to the
    /// lowest center index.
    pub assignment: Vec<usize>,
    /// Sum of squared distances to assigned centers.
    pub inertia: f64,
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn assign(points: &[[f64; 2]], centers: &[[f64; 2]]) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let assignment = points
        .iter()
        .map(|&p| {
            let (mut best, mut best_d) = (0, f64::INFINITY);
            for (j, &c) in centers.iter().enumerate() {
                let d = dist2(p, c);
                if d < best_d {
                    best = j;
                    best_d = d;
                }
            }
            inertia += best_d;
            best
        })
        .collect();
    (assignment, inertia)
}

fn lloyd(points: &[[f64; 2]], mut centers: Vec<[f64; 2]>) -> KMeansResult {
    let k = centers.len();
    let (mut assignment, mut inertia) = assign(points, &centers);
    for _ in 0..MAX_ITERS {
        let mut sums = vec![[0.0; 2]; k];
        let mut counts = vec![0usize; k];
        for (&p, &j) in points.iter().zip(&assignment) {
            sums[j][0] += p[0];
            sums[j][1] += p[1];
            counts[j] += 1;
        }
        for j in 0..k {
            // An emptied cluster keeps its previous center.
            if counts[j] > 0 {
                centers[j] = [sums[j][0] / counts[j] as f64, sums[j][1] / counts[j] as f64];
            }
        }
        let (next, next_inertia) = assign(points, &centers);
        let converged = next == assignment;
        assignment = next;
        inertia = next_inertia;
        if converged {
            break;
        }
    }
    KMeansResult {
        centers,
        assignment,
        inertia,
    }
}

/// K-means over image points with `restarts` seeded random initializations;
/// the run with the lowest inertia wins (ties keep the earliest run).
///
/// Requires `1 <= k <= points.len()`.
pub fn kmeans_2d(
    points: &[[f64; 2]],
    k: usize,
    restarts: usize,
    rng: &mut ChaCha8Rng,
) -> KMeansResult {
    assert!(
        k >= 1 && k <= points.len(),
        "k = {k} out of range for {} points",
        points.len()
    );
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts.max(1) {
        let init: Vec<[f64; 2]> = rand::seq::index::sample(rng, points.len(), k)
            .iter()
            .map(|i| points[i])
            .collect();
        let run = lloyd(points, init);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}
