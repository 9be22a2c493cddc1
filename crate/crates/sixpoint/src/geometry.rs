//! Homogeneous 2D/3D primitives and the canonical projective basis.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use thiserror::Error;

/// Default tolerance for degeneracy checks on scale-normalized inputs.
pub const DEFAULT_DEGENERACY_EPS: f64 = 1e-12;

/// Homogeneous 2D image point `(x, y, w)`, not all zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomPoint2(pub Vector3<f64>);

impl HomPoint2 {
    pub fn new(x: f64, y: f64, w: f64) -> Self {
        Self(Vector3::new(x, y, w))
    }

    /// Lifts a pixel coordinate to homogeneous form with `w = 1`.
    pub fn from_pixel(x: f64, y: f64) -> Self {
        Self(Vector3::new(x, y, 1.0))
    }
}

/// Homogeneous 2D line `(a, b, c)` with incidence `ax + by + cw = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomLine2(pub Vector3<f64>);

/// Homogeneous 3D point `(x, y, z, w)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomPoint3(pub Vector4<f64>);

impl HomPoint3 {
    pub fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self(Vector4::new(x, y, z, w))
    }

    /// Lifts an affine 3D point to homogeneous form with `w = 1`.
    pub fn from_affine(x: f64, y: f64, z: f64) -> Self {
        Self(Vector4::new(x, y, z, 1.0))
    }
}

/// Coordinates `(X, Y, Z, T)` of a point in the canonical projective basis
/// spanned by five reference points. Defined up to a common scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Canonical3(pub Vector4<f64>);

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("points are projectively coincident (normalized cross norm {norm:.3e} < {eps:.3e})")]
    CoincidentPoints { norm: f64, eps: f64 },
    #[error("line is at infinity (normalized direction norm {norm:.3e} < {eps:.3e})")]
    LineAtInfinity { norm: f64, eps: f64 },
    #[error("point is at infinity (normalized w magnitude {w:.3e} < {eps:.3e})")]
    PointAtInfinity { w: f64, eps: f64 },
    #[error(
        "reference points are projectively degenerate (4x4 determinant {det:.3e} < {eps:.3e})"
    )]
    DegenerateBasis { det: f64, eps: f64 },
}

/// Determinant of three stacked homogeneous image points.
///
/// Antisymmetric under argument swaps and linear in each argument; zero exactly
/// when the three points are collinear.
pub fn det3(a: &HomPoint2, b: &HomPoint2, c: &HomPoint2) -> f64 {
    Matrix3::from_columns(&[a.0, b.0, c.0]).determinant()
}

/// Line through two points as their cross product.
///
/// The returned representative satisfies `l . a = 0` and `l . b = 0` exactly by
/// construction. Fails when the points are projectively coincident, judged on
/// unit-normalized inputs against `eps`.
pub fn line_through(a: &HomPoint2, b: &HomPoint2, eps: f64) -> Result<HomLine2, GeometryError> {
    let cross = a.0.cross(&b.0);
    let denom = a.0.norm() * b.0.norm();
    let norm = if denom > 0.0 {
        cross.norm() / denom
    } else {
        0.0
    };
    if norm < eps {
        return Err(GeometryError::CoincidentPoints { norm, eps });
    }
    Ok(HomLine2(cross))
}

/// Euclidean image distance from a finite point to a line.
///
/// The point is normalized to third coordinate 1 and the line to unit norm over
/// its first two components, so the result is the usual `|ax + by + c| / hypot(a, b)`
/// regardless of the scales of the representatives.
pub fn point_line_distance(y: &HomPoint2, l: &HomLine2, eps: f64) -> Result<f64, GeometryError> {
    let ynorm = y.0.norm();
    let w = y.0.z.abs();
    if ynorm == 0.0 || w < eps * ynorm {
        return Err(GeometryError::PointAtInfinity {
            w: if ynorm > 0.0 { w / ynorm } else { 0.0 },
            eps,
        });
    }
    let lnorm = l.0.norm();
    let dir = l.0.xy().norm();
    if lnorm == 0.0 || dir < eps * lnorm {
        return Err(GeometryError::LineAtInfinity {
            norm: if lnorm > 0.0 { dir / lnorm } else { 0.0 },
            eps,
        });
    }
    Ok((y.0.dot(&l.0) / y.0.z).abs() / dir)
}

/// Canonical coordinates of the sixth point in the basis defined by the first five.
///
/// Builds the homography sending points 1..4 to the unit points of `P^3` and
/// point 5 to `(1, 1, 1, 1)` by scaling the basis columns, then applies its
/// inverse to point 6. Degeneracy of the reference configuration is detected on
/// unit-normalized copies so `eps` is scale-free; the returned representative
/// keeps the scale induced by the raw inputs.
pub fn canonical_coords(points: &[HomPoint3; 6], eps: f64) -> Result<Canonical3, GeometryError> {
    let unit: Vec<Vector4<f64>> = points.iter().map(|p| p.0.normalize()).collect();
    let m_unit = Matrix4::from_columns(&[unit[0], unit[1], unit[2], unit[3]]);
    let d0 = m_unit.determinant();
    if d0.abs() < eps {
        return Err(GeometryError::DegenerateBasis { det: d0.abs(), eps });
    }
    for i in 0..4 {
        let mut mi = m_unit;
        mi.set_column(i, &unit[4]);
        let di = mi.determinant();
        if di.abs() < eps {
            return Err(GeometryError::DegenerateBasis { det: di.abs(), eps });
        }
    }

    let m = Matrix4::from_columns(&[points[0].0, points[1].0, points[2].0, points[3].0]);
    let lu = m.lu();
    let lambda = lu
        .solve(&points[4].0)
        .ok_or(GeometryError::DegenerateBasis { det: 0.0, eps })?;
    let scaled = Matrix4::from_columns(&[
        points[0].0 * lambda.x,
        points[1].0 * lambda.y,
        points[2].0 * lambda.z,
        points[3].0 * lambda.w,
    ]);
    let coords = scaled
        .lu()
        .solve(&points[5].0)
        .ok_or(GeometryError::DegenerateBasis { det: 0.0, eps })?;
    Ok(Canonical3(coords))
}
