//! Six-point projective invariants, motion signatures, constraint lines and
//! per-frame residual distances.
//!
//! For six image points `y_1..y_6` of a rigid configuration there is a unit
//! vector `s`, computable from the canonical 3D coordinates of the points, with
//! `z . s = 0` in every frame, where `z` is a vector of five products of point
//! triple determinants. Each component of `z` uses every point exactly once, so
//! `z . s` is linear in each individual point; freezing the other five points
//! therefore turns `y_k -> z . s` into a line `l_k` with `l_k . y_k = z . s`.

use crate::geometry::{det3, point_line_distance, Canonical3, GeometryError, HomLine2, HomPoint2};
use nalgebra::Vector3;
use thiserror::Error;

/// Frames whose invariant vector has norm below this (computed on conditioned
/// coordinates) are treated as degenerate and excluded from signature fitting.
pub const DEGENERATE_Z_EPS: f64 = 1e-10;

/// Six homogeneous image points of one frame, in bundle order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SixPointFrame {
    pub points: [HomPoint2; 6],
}

impl SixPointFrame {
    pub fn from_pixels(px: &[[f64; 2]; 6]) -> Self {
        Self {
            points: std::array::from_fn(|k| HomPoint2::from_pixel(px[k][0], px[k][1])),
        }
    }
}

/// The five-component invariant vector `z` of one frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantVector(pub [f64; 5]);

impl InvariantVector {
    pub fn dot(&self, s: &MotionSignature) -> f64 {
        (0..5).map(|i| self.0[i] * s.0[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Unit-normalized motion signature `s` of a six-point configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionSignature(pub [f64; 5]);

impl MotionSignature {
    /// Wraps raw components, unit-normalizing them. Intended for tests and for
    /// adapters that obtain a signature from an external source.
    pub fn from_raw(raw: [f64; 5]) -> Option<Self> {
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            Some(Self(std::array::from_fn(|i| raw[i] / norm)))
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SignatureError {
    #[error("signature vanishes for these canonical coordinates (norm {norm:.3e})")]
    ZeroSignature { norm: f64 },
}

/// Invariant vector of one frame, five products of point-triple determinants.
pub fn compute_z(frame: &SixPointFrame) -> InvariantVector {
    let y = &frame.points;
    // 1-based closure so the index sets read like the derivation.
    let d = |i: usize, j: usize, k: usize| det3(&y[i - 1], &y[j - 1], &y[k - 1]);
    InvariantVector([
        d(1, 2, 6) * d(3, 5, 4),
        d(1, 3, 6) * d(2, 4, 5),
        d(1, 4, 6) * d(2, 5, 3),
        d(1, 4, 5) * d(2, 6, 3),
        d(1, 3, 5) * d(2, 4, 6),
    ])
}

/// Motion signature from canonical coordinates `(X, Y, Z, T)` of the sixth point.
///
/// Fails when all five components vanish, which happens exactly when the sixth
/// point coincides with the fifth in the canonical basis (all coordinates equal).
pub fn signature_from_canonical(c: &Canonical3) -> Result<MotionSignature, SignatureError> {
    let (x, y, z, t) = (c.0.x, c.0.y, c.0.z, c.0.w);
    let zt = z * t;
    let raw = [x * y - zt, x * z - zt, x * t - zt, y * z - zt, y * t - zt];
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    // The components are quadratic in the coordinates, so the zero test is
    // relative to the squared scale of the representative.
    if norm < 1e-12 * c.0.norm_squared() {
        return Err(SignatureError::ZeroSignature { norm });
    }
    Ok(MotionSignature(std::array::from_fn(|i| raw[i] / norm)))
}

/// One constraint line with its degeneracy flag.
#[derive(Clone, Copy, Debug)]
pub struct ConstraintLine {
    pub line: HomLine2,
    pub degenerate: bool,
}

/// Constraint lines `l_1..l_6` of a frame for a given signature.
///
/// `l_k` is obtained by evaluating the multilinear map `y_k -> z . s` at the
/// three standard basis points, so `l_k . y_k = z . s` holds identically for
/// every k. A line is flagged degenerate when its norm falls below `eps`.
pub fn compute_lines(frame: &SixPointFrame, s: &MotionSignature, eps: f64) -> [ConstraintLine; 6] {
    std::array::from_fn(|k| {
        let mut coords = Vector3::zeros();
        for c in 0..3 {
            let mut pts = frame.points;
            let mut e = Vector3::zeros();
            e[c] = 1.0;
            pts[k] = HomPoint2(e);
            coords[c] = compute_z(&SixPointFrame { points: pts }).dot(s);
        }
        ConstraintLine {
            line: HomLine2(coords),
            degenerate: coords.norm() < eps,
        }
    })
}

/// Per-point distances of one frame and their degeneracy marks.
#[derive(Clone, Copy, Debug)]
pub struct FrameDistances {
    pub distances: [f64; 6],
    pub degenerate: [bool; 6],
}

impl FrameDistances {
    /// Root-sum-square of the six distances.
    pub fn rss(&self) -> f64 {
        self.distances.iter().map(|d| d * d).sum::<f64>().sqrt()
    }
}

/// Euclidean distance of every point to its constraint line.
///
/// Degenerate lines (including lines without a finite direction) contribute a
/// zero distance with the corresponding mark set. Points at infinity are not
/// meaningful image observations and are rejected outright.
pub fn frame_distances(
    frame: &SixPointFrame,
    s: &MotionSignature,
    eps: f64,
) -> Result<FrameDistances, GeometryError> {
    let lines = compute_lines(frame, s, eps);
    let mut distances = [0.0; 6];
    let mut degenerate = [false; 6];
    for k in 0..6 {
        if lines[k].degenerate {
            degenerate[k] = true;
            continue;
        }
        match point_line_distance(&frame.points[k], &lines[k].line, eps) {
            Ok(d) => distances[k] = d,
            Err(GeometryError::LineAtInfinity { .. }) => degenerate[k] = true,
            Err(e) => return Err(e),
        }
    }
    Ok(FrameDistances {
        distances,
        degenerate,
    })
}
