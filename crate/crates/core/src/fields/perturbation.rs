use crate::geometry::{SphericalPoint, Vec3};

use super::PerturbationModel;

/// `r rho sin(3 phi) = r^2 sin(theta) sin(3 phi)`, written without the
/// azimuth so that it stays regular on the polar axis.
#[inline]
fn r2_sin_theta_sin3phi_over_r(x: Vec3) -> f64 {
    let rho2 = x.x * x.x + x.y * x.y;
    if rho2 == 0.0 {
        return 0.0;
    }
    // rho sin(3 phi) = (3 rho^2 y - 4 y^3) / rho^2
    x.y * (3.0 * rho2 - 4.0 * x.y * x.y) / rho2
}

/// Radial perturbation `g = r^2 sin(theta) sin(3 phi) cos(4 t) r_hat`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RadialGr;

impl PerturbationModel for RadialGr {
    fn name(&self) -> String {
        "gr".into()
    }

    #[inline]
    fn evaluate(&self, x: Vec3, t: f64) -> Vec3 {
        // r^2 sin(theta) sin(3 phi) r_hat = [rho sin(3 phi)] * x
        x * (r2_sin_theta_sin3phi_over_r(x) * (4.0 * t).cos())
    }
}

/// `g_r` of [`RadialGr`] in spherical components `(g_r, 0, 0)`.
pub fn perturbation_gr_eval(p: SphericalPoint, t: f64) -> Vec3 {
    let gr = p.r * p.r * p.theta.sin() * (3.0 * p.phi).sin() * (4.0 * t).cos();
    Vec3::new(gr, 0.0, 0.0)
}

/// The null perturbation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZeroPerturbation;

impl PerturbationModel for ZeroPerturbation {
    fn name(&self) -> String {
        "none".into()
    }

    fn evaluate(&self, _x: Vec3, _t: f64) -> Vec3 {
        Vec3::ZERO
    }

    fn bound_hint(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Same magnitude as [`RadialGr`] but pointing along `theta_hat`, i.e.
/// tangent to every sphere.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ThetaOnly;

impl PerturbationModel for ThetaOnly {
    fn name(&self) -> String {
        "theta-only".into()
    }

    fn evaluate(&self, x: Vec3, t: f64) -> Vec3 {
        let rho2 = x.x * x.x + x.y * x.y;
        if rho2 == 0.0 {
            return Vec3::ZERO;
        }
        let r = x.norm();
        let rho = rho2.sqrt();
        let magnitude = r * r2_sin_theta_sin3phi_over_r(x) * (4.0 * t).cos();
        let theta_hat = Vec3::new(x.x * x.z / (r * rho), x.y * x.z / (r * rho), -rho / r);
        theta_hat * magnitude
    }
}

/// Steady radial perturbation `g_r = r^2 sin(theta) (2 + sin 3 phi)`,
/// strictly positive off the axis.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PositiveRadial;

impl PerturbationModel for PositiveRadial {
    fn name(&self) -> String {
        "positive-radial".into()
    }

    fn evaluate(&self, x: Vec3, _t: f64) -> Vec3 {
        let rho = (x.x * x.x + x.y * x.y).sqrt();
        x * (2.0 * rho + r2_sin_theta_sin3phi_over_r(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cartesian_vector_to_spherical, spherical_to_cartesian};
    use std::f64::consts::{PI, TAU};

    #[test]
    fn gr_examples() {
        let p = SphericalPoint::new(1.0, PI / 2.0, PI / 6.0).unwrap();
        let v = perturbation_gr_eval(p, 0.0);
        assert!((v.x - 1.0).abs() < 1e-15);
        assert_eq!((v.y, v.z), (0.0, 0.0));
        assert!(perturbation_gr_eval(p, PI / 8.0).x.abs() < 1e-15);
        let pole = SphericalPoint::new(1.0, 0.0, 0.4).unwrap();
        assert_eq!(perturbation_gr_eval(pole, 0.3).x, 0.0);
        assert_eq!(RadialGr.evaluate(Vec3::Z, 0.3), Vec3::ZERO);
    }

    #[test]
    fn cartesian_forms_match_spherical() {
        for i in 0..40 {
            let theta = 0.05 + 3.0 * (i as f64) / 40.0;
            let phi = TAU * ((i * 7 % 40) as f64) / 40.0;
            let p = SphericalPoint::new(1.3, theta, phi).unwrap();
            let x = spherical_to_cartesian(p);
            let t = 0.37;
            let gr = cartesian_vector_to_spherical(p, RadialGr.evaluate(x, t)).unwrap();
            let expected = perturbation_gr_eval(p, t);
            assert!((gr - expected).max_abs() < 1e-13);

            let th = cartesian_vector_to_spherical(p, ThetaOnly.evaluate(x, t)).unwrap();
            assert!(th.x.abs() < 1e-13 && th.z.abs() < 1e-13);
            assert!((th.y - expected.x).abs() < 1e-13);

            let pos = cartesian_vector_to_spherical(p, PositiveRadial.evaluate(x, t)).unwrap();
            let want = 1.69 * theta.sin() * (2.0 + (3.0 * phi).sin());
            assert!((pos.x - want).abs() < 1e-13 && pos.x > 0.0);
        }
    }
}
