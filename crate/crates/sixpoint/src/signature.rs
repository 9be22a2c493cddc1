//! Total least squares estimation of the motion signature from B frame
//! observations of a six-trajectory bundle.

use crate::geometry::HomPoint2;
use crate::invariant::{compute_z, MotionSignature, SixPointFrame, DEGENERATE_Z_EPS};
use nalgebra::DMatrix;
use thiserror::Error;

/// Minimum usable frame observations for a signature fit.
pub const MIN_OBSERVATIONS: usize = 4;

/// Ratio of the two smallest singular values below which the null direction is
/// considered ambiguous.
pub const CONDITION_RATIO: f64 = 10.0;

/// Six pixel trajectories over F frames, in bundle order.
#[derive(Clone, Debug)]
pub struct TrajectoryBundle {
    pub frames: Vec<[[f64; 2]; 6]>,
}

impl TrajectoryBundle {
    pub fn new(frames: Vec<[[f64; 2]; 6]>) -> Self {
        Self { frames }
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }
}

/// One frame after isotropic conditioning: zero centroid, RMS radius sqrt(2).
/// A conditioned distance divided by `scale` is a pixel distance.
#[derive(Clone, Copy, Debug)]
pub struct ConditionedFrame {
    pub frame: SixPointFrame,
    pub scale: f64,
}

/// Conditions one frame of six pixels. Returns `None` when the points carry no
/// spatial extent at all (all six coincide), which leaves no scale to fix.
pub fn condition_frame(px: &[[f64; 2]; 6]) -> Option<ConditionedFrame> {
    let cx = px.iter().map(|p| p[0]).sum::<f64>() / 6.0;
    let cy = px.iter().map(|p| p[1]).sum::<f64>() / 6.0;
    let rms = (px
        .iter()
        .map(|p| (p[0] - cx).powi(2) + (p[1] - cy).powi(2))
        .sum::<f64>()
        / 6.0)
        .sqrt();
    if rms < 1e-30 || !rms.is_finite() {
        return None;
    }
    let scale = std::f64::consts::SQRT_2 / rms;
    let frame = SixPointFrame {
        points: std::array::from_fn(|k| {
            HomPoint2::from_pixel((px[k][0] - cx) * scale, (px[k][1] - cy) * scale)
        }),
    };
    Some(ConditionedFrame { frame, scale })
}

/// True when any two of the six points are projectively coincident within `eps`
/// (relative cross-product test).
pub fn frame_has_coincident_points(frame: &SixPointFrame, eps: f64) -> bool {
    for i in 0..6 {
        for j in (i + 1)..6 {
            let a = frame.points[i].0;
            let b = frame.points[j].0;
            let denom = a.norm() * b.norm();
            if denom == 0.0 || a.cross(&b).norm() < eps * denom {
                return true;
            }
        }
    }
    false
}

/// Stacked unit-normalized invariant vectors, one row per usable frame.
#[derive(Clone, Debug)]
pub struct ObservationMatrix {
    pub rows: DMatrix<f64>,
    /// Original frame index of each row.
    pub frame_indices: Vec<usize>,
    /// Frames excluded as degenerate (coincident points, vanishing z, or no
    /// conditionable extent).
    pub skipped_frames: Vec<usize>,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EstimationError {
    #[error("only {usable} usable frame observations, need at least {needed}")]
    InsufficientObservations { usable: usize, needed: usize },
    #[error("singular value decomposition did not converge")]
    SvdFailure,
}

/// Builds the observation matrix of a bundle.
///
/// Each frame is conditioned, checked for degeneracy (coincident point pair, or
/// invariant vector with norm below the z threshold), and contributes one
/// unit-normalized z row. `eps` is the projective degeneracy tolerance.
pub fn assemble_observations(
    bundle: &TrajectoryBundle,
    eps: f64,
) -> Result<ObservationMatrix, EstimationError> {
    let mut rows: Vec<[f64; 5]> = Vec::with_capacity(bundle.frames.len());
    let mut frame_indices = Vec::new();
    let mut skipped_frames = Vec::new();
    for (t, px) in bundle.frames.iter().enumerate() {
        let Some(cond) = condition_frame(px) else {
            skipped_frames.push(t);
            continue;
        };
        if frame_has_coincident_points(&cond.frame, eps) {
            skipped_frames.push(t);
            continue;
        }
        let z = compute_z(&cond.frame);
        let norm = z.norm();
        if norm < DEGENERATE_Z_EPS || !norm.is_finite() {
            skipped_frames.push(t);
            continue;
        }
        rows.push(std::array::from_fn(|i| z.0[i] / norm));
        frame_indices.push(t);
    }
    if rows.len() < MIN_OBSERVATIONS {
        return Err(EstimationError::InsufficientObservations {
            usable: rows.len(),
            needed: MIN_OBSERVATIONS,
        });
    }
    let rows = DMatrix::from_fn(rows.len(), 5, |r, c| rows[r][c]);
    Ok(ObservationMatrix {
        rows,
        frame_indices,
        skipped_frames,
    })
}

/// Well-posedness diagnostic of a signature estimate.
#[derive(Clone, Copy, Debug)]
pub struct ConditionReport {
    /// Singular values in descending order, zero-padded when B = 4.
    pub singular_values: [f64; 5],
    pub ill_conditioned: bool,
}

/// Total least squares signature: the right singular vector of the smallest
/// singular value, sign fixed so the first nonzero component is positive.
///
/// The ill-conditioned flag is raised when the two smallest singular values are
/// within a factor [`CONDITION_RATIO`] of each other, or when the fourth one
/// also (numerically) vanishes; either way the null direction is ambiguous.
pub fn estimate_signature(
    obs: &ObservationMatrix,
) -> Result<(MotionSignature, ConditionReport), EstimationError> {
    let b = obs.rows.nrows();
    // Thin SVD of a 4x5 matrix has no room for the null direction among its
    // right singular vectors; a zero row changes nothing else.
    let m = if b >= 5 {
        obs.rows.clone()
    } else {
        let mut padded = DMatrix::zeros(5, 5);
        padded.view_mut((0, 0), (b, 5)).copy_from(&obs.rows);
        padded
    };
    let svd = m
        .try_svd(false, true, f64::EPSILON, 10_000)
        .ok_or(EstimationError::SvdFailure)?;
    let v_t = svd.v_t.as_ref().ok_or(EstimationError::SvdFailure)?;

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let mut sv = [0.0; 5];
    for (rank, &i) in order.iter().enumerate() {
        sv[rank] = svd.singular_values[i];
    }

    let smallest = order[order.len() - 1];
    let mut s: [f64; 5] = std::array::from_fn(|i| v_t[(smallest, i)]);
    let lead = s.iter().find(|v| v.abs() > 1e-9).copied().unwrap_or(0.0);
    if lead < 0.0 {
        for v in &mut s {
            *v = -*v;
        }
    }

    let ill_conditioned = sv[3] < CONDITION_RATIO * sv[4] || sv[3] <= 1e-10 * sv[0];
    Ok((
        MotionSignature(s),
        ConditionReport {
            singular_values: sv,
            ill_conditioned,
        },
    ))
}
