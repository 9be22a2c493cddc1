//! The bundle matching score: median over frames of the root-sum-square of the
//! six point-to-constraint-line distances, in pixels.

use crate::invariant::frame_distances;
use crate::signature::{
    assemble_observations, condition_frame, estimate_signature, TrajectoryBundle,
};

/// Median with the even-length rule: mean of the two middle values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Aggregates per-frame RSS values into the matching score. An empty list means
/// no frame produced a usable observation; such a bundle matches nothing.
pub fn score_from_frame_rss(rss: &[f64]) -> f64 {
    match median(rss) {
        Some(m) if !m.is_nan() => m,
        _ => f64::INFINITY,
    }
}

/// Outcome of scoring one six-trajectory bundle.
#[derive(Clone, Debug)]
pub struct BundleScore {
    /// Matching score in pixels; `+inf` when the bundle is degenerate in all
    /// but at most three frames.
    pub score: f64,
    pub signature: Option<crate::invariant::MotionSignature>,
    pub ill_conditioned: bool,
    /// Frames excluded from the signature fit as degenerate.
    pub degenerate_frames: usize,
}

/// Scores a bundle: estimate the signature by total least squares over all
/// usable frames, then take the median over frames of the pixel-space RSS of
/// the six constraint-line distances.
///
/// Distances are computed in each frame's conditioned coordinates and divided
/// by the isotropic conditioning scale, which converts them back to pixels.
pub fn matching_score(bundle: &TrajectoryBundle, eps: f64) -> BundleScore {
    let obs = match assemble_observations(bundle, eps) {
        Ok(obs) => obs,
        Err(crate::signature::EstimationError::InsufficientObservations { usable, .. }) => {
            return BundleScore {
                score: f64::INFINITY,
                signature: None,
                ill_conditioned: false,
                degenerate_frames: bundle.num_frames() - usable,
            }
        }
        Err(_) => {
            return BundleScore {
                score: f64::INFINITY,
                signature: None,
                ill_conditioned: true,
                degenerate_frames: 0,
            }
        }
    };
    let degenerate_frames = obs.skipped_frames.len();
    let Ok((s, report)) = estimate_signature(&obs) else {
        return BundleScore {
            score: f64::INFINITY,
            signature: None,
            ill_conditioned: true,
            degenerate_frames,
        };
    };

    let mut rss = Vec::with_capacity(bundle.num_frames());
    for px in &bundle.frames {
        let Some(cond) = condition_frame(px) else {
            continue;
        };
        let Ok(d) = frame_distances(&cond.frame, &s, eps) else {
            continue;
        };
        rss.push(d.rss() / cond.scale);
    }
    BundleScore {
        score: score_from_frame_rss(&rss),
        signature: Some(s),
        ill_conditioned: report.ill_conditioned,
        degenerate_frames,
    }
}
