//! Manifold primitives: rotation matrices on SO(3), unit vectors on the
//! two-sphere, the hat/vee isomorphism, the exponential map, and the
//! projections that restore the constraints after numeric drift.
//!
//! All operations are pure value computations and safe to call from any
//! number of threads.

use crate::{Mat3, Vec3};
use core::fmt;
#[cfg(not(feature = "std"))]
use nalgebra::ComplexField;

/// Orthogonality / determinant tolerance for [`RotationMatrix`] validation.
pub const ROTATION_TOL: f64 = 1e-10;
/// Unit-norm tolerance for [`UnitVector`] validation.
pub const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeomError {
    /// `vee` was applied to a matrix that is not skew-symmetric.
    NotSkewSymmetric { asymmetry: f64 },
    /// A direction vector is too short to normalize.
    DegenerateVector { norm: f64 },
    /// A 3×3 matrix failed the SO(3) invariants.
    NotARotation { orthogonality_error: f64, determinant: f64 },
    /// A vector failed the unit-norm invariant.
    NotUnitNorm { norm: f64 },
}

impl fmt::Display for GeomError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeomError::NotSkewSymmetric { asymmetry } => {
                write!(f, "matrix is not skew-symmetric (|m + m^T| = {asymmetry:e})")
            }
            GeomError::DegenerateVector { norm } => {
                write!(f, "vector norm {norm:e} is too small to normalize")
            }
            GeomError::NotARotation { orthogonality_error, determinant } => write!(
                f,
                "matrix is not a rotation (|R^T R - I| = {orthogonality_error:e}, det = {determinant})"
            ),
            GeomError::NotUnitNorm { norm } => {
                write!(f, "vector norm {norm} is not 1 within {UNIT_TOL:e}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GeomError {}

/// A 3×3 matrix kept on SO(3): `R^T R = I` and `det R = 1` within
/// [`ROTATION_TOL`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    pub fn identity() -> Self {
        RotationMatrix(Mat3::identity())
    }

    /// Wraps a matrix after checking the SO(3) invariants.
    pub fn from_matrix(m: Mat3) -> Result<Self, GeomError> {
        let ortho = (m.transpose() * m - Mat3::identity()).norm();
        let det = m.determinant();
        if ortho > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL {
            return Err(GeomError::NotARotation { orthogonality_error: ortho, determinant: det });
        }
        Ok(RotationMatrix(m))
    }

    /// Projects a nearly orthogonal matrix back onto SO(3).
    ///
    /// Newton iteration for the polar factor, `R ← (R + R^{-T})/2`; it
    /// converges quadratically and preserves the determinant sign, so the
    /// O(dt⁴) drift left by an integrator step is removed in one or two
    /// sweeps.
    pub fn project(m: Mat3) -> Self {
        let mut r = m;
        for _ in 0..10 {
            let err = (r.transpose() * r - Mat3::identity()).norm();
            if err < 1e-15 {
                break;
            }
            let Some(inv) = r.try_inverse() else { break };
            r = (r + inv.transpose()) * 0.5;
        }
        RotationMatrix(r)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// Frobenius distance of `R^T R` from the identity.
    pub fn orthogonality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Mat3::identity()).norm()
    }
}

/// A 3-vector constrained to unit norm within [`UNIT_TOL`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector(Vec3);

impl UnitVector {
    /// Wraps a vector that is already unit-norm.
    pub fn new(v: Vec3) -> Result<Self, GeomError> {
        let n = v.norm();
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(GeomError::NotUnitNorm { norm: n });
        }
        Ok(UnitVector(v))
    }

    /// Normalizes an arbitrary vector; fails if it is degenerate.
    pub fn normalize(v: Vec3) -> Result<Self, GeomError> {
        let n = v.norm();
        if n <= 1e-6 {
            return Err(GeomError::DegenerateVector { norm: n });
        }
        Ok(UnitVector(v / n))
    }

    /// Inertial third axis `e₃` (the gravity direction).
    pub fn e3() -> Self {
        UnitVector(Vec3::z())
    }

    pub fn vector(&self) -> &Vec3 {
        &self.0
    }
}

/// Hat map: `hat(v) w = v × w`, sending R³ to the skew-symmetric matrices.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Vee map, the inverse of [`hat`].
///
/// Fails with [`GeomError::NotSkewSymmetric`] if `|m + m^T| ≥ 1e-8`.
pub fn vee(m: &Mat3) -> Result<Vec3, GeomError> {
    let asym = (m + m.transpose()).norm();
    if asym >= 1e-8 {
        return Err(GeomError::NotSkewSymmetric { asymmetry: asym });
    }
    Ok(Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]))
}

/// Exponential map from R³ onto SO(3) (rotation by `|v|` radians about `v`).
///
/// Rodrigues closed form, with the series expansion of `sin θ/θ` and
/// `(1 − cos θ)/θ²` below `θ = 1e-6` to avoid 0/0 near the identity.
pub fn exp_so3(v: &Vec3) -> RotationMatrix {
    let theta = v.norm();
    let (a, b) = if theta < 1e-6 {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    let vh = hat(v);
    RotationMatrix(Mat3::identity() + vh * a + vh * vh * b)
}

/// Restores the S² constraint pair after numeric drift: returns
/// `(q/|q|, w − (q̂·w) q̂)` so that `|q| = 1` and `q · w = 0`.
pub fn renormalize(q: &Vec3, w: &Vec3) -> Result<(UnitVector, Vec3), GeomError> {
    let q_unit = UnitVector::normalize(*q)?;
    let qv = q_unit.vector();
    let w_tan = w - qv * qv.dot(w);
    Ok((q_unit, w_tan))
}
