//! Three-dimensional vector algebra and spherical coordinates.
//!
//! Spherical points use the physics convention: `theta` is the polar angle
//! measured from the +z axis and `phi` is the azimuth measured
//! counterclockwise from +x. Vector components in the local basis are
//! ordered `(r, theta, phi)`.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A Cartesian triple.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    /// Builds a vector, rejecting NaN and infinite components.
    pub fn checked(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Vec3::new(x, y, z);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidParameter(format!(
                "non-finite vector ({x}, {y}, {z})"
            )))
        }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Right-handed cross product `self ^ o`.
    #[inline]
    pub fn wedge(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0).then(|| self / n)
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    #[inline]
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// A 3x3 real matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat3 {
    pub rows: [[f64; 3]; 3],
}

impl Mat3 {
    pub const fn new(rows: [[f64; 3]; 3]) -> Self {
        Mat3 { rows }
    }

    pub const fn zero() -> Self {
        Mat3::new([[0.0; 3]; 3])
    }

    pub const fn identity() -> Self {
        Mat3::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Matrix whose `j`-th column is `cols[j]`.
    pub fn from_columns(cols: [Vec3; 3]) -> Self {
        let mut rows = [[0.0; 3]; 3];
        for (j, c) in cols.iter().enumerate() {
            rows[0][j] = c.x;
            rows[1][j] = c.y;
            rows[2][j] = c.z;
        }
        Mat3::new(rows)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::from_array(self.rows[i])
    }

    pub fn column(&self, j: usize) -> Vec3 {
        Vec3::new(self.rows[0][j], self.rows[1][j], self.rows[2][j])
    }

    pub fn trace(&self) -> f64 {
        self.rows[0][0] + self.rows[1][1] + self.rows[2][2]
    }

    pub fn transpose(&self) -> Mat3 {
        let r = &self.rows;
        Mat3::new([
            [r[0][0], r[1][0], r[2][0]],
            [r[0][1], r[1][1], r[2][1]],
            [r[0][2], r[1][2], r[2][2]],
        ])
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }

    pub fn is_finite(&self) -> bool {
        self.rows.iter().flatten().all(|a| a.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.rows.iter().flatten().fold(0.0_f64, |m, a| m.max(a.abs()))
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        self.mul_vec(v)
    }
}

/// A point in spherical coordinates, normalized so that `r >= 0`,
/// `theta` lies in `[0, pi]` and `phi` in `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl SphericalPoint {
    pub fn new(r: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(r.is_finite() && theta.is_finite() && phi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite spherical point ({r}, {theta}, {phi})"
            )));
        }
        if r < 0.0 {
            return Err(Error::InvalidParameter(format!("negative radius {r}")));
        }
        Ok(SphericalPoint {
            r,
            theta: theta.clamp(0.0, PI),
            phi: reduce_angle(phi),
        })
    }

    /// True when the point sits on the polar axis, where the local basis
    /// vectors `theta_hat` and `phi_hat` are undefined.
    pub fn on_axis(&self) -> bool {
        self.theta == 0.0 || self.theta == PI
    }
}

/// Reduces an angle into `[0, 2 pi)`.
pub fn reduce_angle(phi: f64) -> f64 {
    let a = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Right-handed cross product `b ^ c`.
pub fn wedge(b: Vec3, c: Vec3) -> Vec3 {
    b.wedge(c)
}

/// Scalar triple product `(b ^ c) . d`.
pub fn scalar_triple(b: Vec3, c: Vec3, d: Vec3) -> f64 {
    b.wedge(c).dot(d)
}

/// Residual of the trace identity
/// `[(Ab)^c].d + [b^(Ac)].d + [b^c].(Ad) - Tr(A) [(b^c).d]`,
/// which vanishes for every matrix and every triple of vectors.
pub fn triple_identity_residual(a: &Mat3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
    let lhs = scalar_triple(a.mul_vec(b), c, d)
        + scalar_triple(b, a.mul_vec(c), d)
        + scalar_triple(b, c, a.mul_vec(d));
    lhs - a.trace() * scalar_triple(b, c, d)
}

pub fn spherical_to_cartesian(p: SphericalPoint) -> Vec3 {
    let (st, ct) = p.theta.sin_cos();
    let (sp, cp) = p.phi.sin_cos();
    Vec3::new(p.r * st * cp, p.r * st * sp, p.r * ct)
}

pub fn cartesian_to_spherical(v: Vec3) -> SphericalPoint {
    let r = v.norm();
    let theta = if r > 0.0 {
        (v.z / r).clamp(-1.0, 1.0).acos()
    } else {
        0.0
    };
    SphericalPoint {
        r,
        theta,
        phi: reduce_angle(v.y.atan2(v.x)),
    }
}

/// The orthonormal local basis `(r_hat, theta_hat, phi_hat)` at `p`.
pub fn spherical_basis(p: SphericalPoint) -> Result<[Vec3; 3]> {
    if p.on_axis() {
        return Err(Error::PoleSingularity { theta: p.theta });
    }
    let (st, ct) = p.theta.sin_cos();
    let (sp, cp) = p.phi.sin_cos();
    Ok([
        Vec3::new(st * cp, st * sp, ct),
        Vec3::new(ct * cp, ct * sp, -st),
        Vec3::new(-sp, cp, 0.0),
    ])
}

/// Maps `(v_r, v_theta, v_phi)` components at `p` to Cartesian components.
pub fn spherical_vector_to_cartesian(p: SphericalPoint, v_sph: Vec3) -> Result<Vec3> {
    let [er, et, ep] = spherical_basis(p)?;
    Ok(er * v_sph.x + et * v_sph.y + ep * v_sph.z)
}

/// Projects a Cartesian vector onto the local spherical basis at `p`.
pub fn cartesian_vector_to_spherical(p: SphericalPoint, v: Vec3) -> Result<Vec3> {
    let [er, et, ep] = spherical_basis(p)?;
    Ok(Vec3::new(v.dot(er), v.dot(et), v.dot(ep)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn wedge_examples() {
        assert_eq!(wedge(Vec3::X, Vec3::Y), Vec3::Z);
        let b = Vec3::new(1.3, -2.0, 0.5);
        assert_eq!(wedge(b, b), Vec3::ZERO);
        assert_eq!(
            wedge(Vec3::new(1.0, 2.0, 3.0), Vec3::new(4.0, 5.0, 6.0)),
            Vec3::new(-3.0, 6.0, -3.0)
        );
    }

    #[test]
    fn scalar_triple_examples() {
        assert_eq!(scalar_triple(Vec3::X, Vec3::Y, Vec3::Z), 1.0);
        let b = Vec3::new(0.2, 0.7, -1.1);
        let c = Vec3::new(-3.0, 0.1, 0.4);
        assert_eq!(scalar_triple(b, b, c), 0.0);
        assert_eq!(scalar_triple(b, c, b), 0.0);
        assert_eq!(scalar_triple(c, b, b), 0.0);
        let v = scalar_triple(
            Vec3::new(1.0, 2.0, 3.0),
            Vec3::new(4.0, 5.0, 6.0),
            Vec3::new(7.0, 8.0, 10.0),
        );
        assert_eq!(v, -3.0);
    }

    #[test]
    fn trace_identity_for_identity_and_zero_matrices() {
        let b = Vec3::new(0.3, -0.2, 0.9);
        let c = Vec3::new(-0.5, 0.8, 0.1);
        let d = Vec3::new(0.7, 0.6, -0.4);
        assert!(triple_identity_residual(&Mat3::identity(), b, c, d).abs() < 1e-15);
        assert_eq!(triple_identity_residual(&Mat3::zero(), b, c, d), 0.0);
    }

    #[test]
    fn spherical_examples() {
        let p = SphericalPoint::new(1.0, PI / 2.0, 0.0).unwrap();
        assert!(close(spherical_to_cartesian(p), Vec3::X, 1e-16));
        let theta_hat = spherical_vector_to_cartesian(p, Vec3::Y).unwrap();
        assert!(close(theta_hat, Vec3::new(0.0, 0.0, -1.0), 1e-16));
    }

    #[test]
    fn spherical_point_normalization() {
        let p = SphericalPoint::new(2.0, 4.0, -0.5).unwrap();
        assert_eq!(p.theta, PI);
        assert!((p.phi - (TAU - 0.5)).abs() < 1e-15);
        assert!(SphericalPoint::new(-1.0, 0.0, 0.0).is_err());
        assert!(SphericalPoint::new(f64::NAN, 0.0, 0.0).is_err());
        assert_eq!(reduce_angle(-1e-300), 0.0);
    }

    #[test]
    fn vector_conversion_rejects_poles() {
        let north = SphericalPoint::new(1.0, 0.0, 0.3).unwrap();
        let south = SphericalPoint::new(1.0, PI, 0.3).unwrap();
        assert!(matches!(
            spherical_vector_to_cartesian(north, Vec3::X),
            Err(Error::PoleSingularity { .. })
        ));
        assert!(spherical_vector_to_cartesian(south, Vec3::X).is_err());
    }

    #[test]
    fn checked_rejects_nonfinite() {
        assert!(Vec3::checked(1.0, f64::INFINITY, 0.0).is_err());
        assert!(Vec3::checked(1.0, 2.0, 3.0).is_ok());
    }

    fn vec_strategy() -> impl Strategy<Value = Vec3> {
        (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn wedge_anticommutes(b in vec_strategy(), c in vec_strategy()) {
            let s = wedge(b, c) + wedge(c, b);
            prop_assert_eq!(s, Vec3::ZERO);
        }

        #[test]
        fn lagrange_identity(b in vec_strategy(), c in vec_strategy()) {
            let lhs = wedge(b, c).norm_sq() + b.dot(c).powi(2);
            let rhs = b.norm_sq() * c.norm_sq();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }

        #[test]
        fn round_trip_off_axis(
            r in 0.1..5.0f64,
            theta in 0.01..(PI - 0.01),
            phi in 0.0..TAU,
        ) {
            let p = SphericalPoint::new(r, theta, phi).unwrap();
            let x = spherical_to_cartesian(p);
            let back = spherical_to_cartesian(cartesian_to_spherical(x));
            prop_assert!((back - x).max_abs() <= 1e-14 * r.max(1.0));
        }

        #[test]
        fn vector_conversion_preserves_norm(
            theta in 0.01..(PI - 0.01),
            phi in 0.0..TAU,
            v in vec_strategy(),
        ) {
            let p = SphericalPoint::new(1.0, theta, phi).unwrap();
            let w = spherical_vector_to_cartesian(p, v).unwrap();
            prop_assert!((w.norm() - v.norm()).abs() <= 1e-13 * v.norm().max(1.0));
            let back = cartesian_vector_to_spherical(p, w).unwrap();
            prop_assert!((back - v).max_abs() <= 1e-13 * v.norm().max(1.0));
        }
    }
}
