use crate::error::{Error, Result};
use crate::geometry::{SphericalPoint, Vec3};

use super::{CoordinateSystem, FieldModel};

/// Hill's spherical vortex, optionally with azimuthal swirl.
///
/// Both variants have the form
/// `f = cos(theta) F(r) r_hat + sin(theta) G(r) theta_hat + sin(theta) H(r) phi_hat`
/// with an interior branch for `r <= 1` and an exterior branch for `r > 1`.
/// The unit sphere is a heteroclinic manifold joining saddles at the poles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillVortex {
    rossby: Option<f64>,
}

impl HillVortex {
    pub fn classical() -> Self {
        HillVortex { rossby: None }
    }

    /// Swirling vortex with Rossby number `r0 > 0`.
    pub fn swirl(r0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Rossby number must be positive and finite, got {r0}"
            )));
        }
        Ok(HillVortex { rossby: Some(r0) })
    }

    pub fn rossby(&self) -> Option<f64> {
        self.rossby
    }

    /// Azimuthal angular velocity `dphi/dt` on the sphere.
    pub fn swirl_rate(&self) -> f64 {
        self.rossby.map_or(0.0, |r0| -0.5 / r0)
    }

    /// Radial profiles `(F, G, H)`.
    fn profiles(&self, r: f64) -> (f64, f64, f64) {
        let h = self.rossby.map_or(0.0, |r0| -r / (2.0 * r0));
        if r <= 1.0 {
            let r2 = r * r;
            return (1.5 * (1.0 - r2), -1.5 * (1.0 - 2.0 * r2), h);
        }
        match self.rossby {
            None => {
                let r3 = r * r * r;
                (-(1.0 - 1.0 / r3), 1.0 + 0.5 / r3, 0.0)
            }
            Some(r0) => {
                let (sn, cs) = ((r - 1.0) / r0).sin_cos();
                let r2 = r * r;
                let f = -(1.0 - cs / r2 + r0 * sn / (r2 * r));
                let g = (2.0 * r + cs / r + (1.0 / r0 - r0 / r2) * sn) / (2.0 * r);
                (f, g, h)
            }
        }
    }

    /// Velocity as `(v_r, v_theta, v_phi)` components at `p`.
    pub fn spherical_components(&self, p: SphericalPoint) -> Vec3 {
        let (f, g, h) = self.profiles(p.r);
        let (st, ct) = p.theta.sin_cos();
        Vec3::new(ct * f, st * g, st * h)
    }
}

impl FieldModel for HillVortex {
    fn name(&self) -> String {
        match self.rossby {
            None => "hill-classical".into(),
            Some(r0) => format!("hill-swirl(R0={r0})"),
        }
    }

    fn velocity(&self, x: Vec3) -> Vec3 {
        let r2 = x.norm_sq();
        let rho2 = x.x * x.x + x.y * x.y;
        let omega = self.swirl_rate();
        if r2 <= 1.0 {
            // interior branch is polynomial in Cartesian form
            return Vec3::new(
                1.5 * x.x * x.z - omega * x.y,
                1.5 * x.y * x.z + omega * x.x,
                1.5 * (1.0 - x.z * x.z - 2.0 * rho2),
            );
        }
        let r = r2.sqrt();
        let (f, g, h) = self.profiles(r);
        let radial = x * (f * x.z / r2);
        let polar = Vec3::new(x.x * x.z, x.y * x.z, -rho2) * (g / r2);
        let azimuthal = Vec3::new(-x.y, x.x, 0.0) * (h / r);
        radial + polar + azimuthal
    }

    fn region(&self, x: Vec3) -> u8 {
        u8::from(x.norm_sq() > 1.0)
    }

    fn volume_preserving(&self) -> bool {
        true
    }

    fn coordinate_system(&self) -> CoordinateSystem {
        CoordinateSystem::Spherical
    }
}

/// Classical Hill's vortex velocity in spherical components.
pub fn hill_classical_eval(p: SphericalPoint) -> Vec3 {
    HillVortex::classical().spherical_components(p)
}

/// Swirling Hill's vortex velocity in spherical components.
pub fn hill_swirl_eval(p: SphericalPoint, r0: f64) -> Result<Vec3> {
    Ok(HillVortex::swirl(r0)?.spherical_components(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{spherical_to_cartesian, spherical_vector_to_cartesian};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn sp(r: f64, t: f64, p: f64) -> SphericalPoint {
        SphericalPoint::new(r, t, p).unwrap()
    }

    #[test]
    fn classical_on_sphere_is_tangential() {
        for &theta in &[0.1, 0.7, PI / 2.0, 2.9] {
            let v = hill_classical_eval(sp(1.0, theta, 0.4));
            assert!(v.x.abs() < 1e-15);
            assert!((v.y - 1.5 * theta.sin()).abs() < 1e-15);
            assert_eq!(v.z, 0.0);
        }
        assert_eq!(hill_classical_eval(sp(1.0, 0.0, 1.0)), Vec3::ZERO);
    }

    #[test]
    fn classical_interior_example() {
        let v = hill_classical_eval(sp(0.5, PI / 2.0, 0.0));
        assert!(v.x.abs() < 1e-16);
        assert!((v.y + 0.75).abs() < 1e-15);
    }

    #[test]
    fn swirl_examples() {
        let v = hill_swirl_eval(sp(1.0, PI / 2.0, 0.0), 0.1).unwrap();
        assert!((v.z + 5.0).abs() < 1e-14);
        for &theta in &[0.3, 1.2, 2.5] {
            let c = hill_classical_eval(sp(1.0, theta, 2.0));
            let s = hill_swirl_eval(sp(1.0, theta, 2.0), 0.1).unwrap();
            assert_eq!(c.x, s.x);
            assert_eq!(c.y, s.y);
        }
        assert!(hill_swirl_eval(sp(1.0, 1.0, 0.0), 0.0).is_err());
        assert!(HillVortex::swirl(-1.0).is_err());
    }

    #[test]
    fn large_rossby_recovers_classical() {
        let swirl = HillVortex::swirl(1e6).unwrap();
        let classical = HillVortex::classical();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = sp(rng.random_range(0.05..3.0), rng.random_range(0.05..3.1), rng.random_range(0.0..TAU));
            let a = classical.spherical_components(p);
            let b = swirl.spherical_components(p);
            assert!((a - b).norm() <= 1e-5 * a.norm().max(1e-3), "{p:?}");
        }
    }

    #[test]
    fn cartesian_matches_spherical_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for field in [HillVortex::classical(), HillVortex::swirl(0.1).unwrap()] {
            for _ in 0..500 {
                let p = sp(rng.random_range(0.01..3.0), rng.random_range(0.01..3.13), rng.random_range(0.0..TAU));
                let expected = spherical_vector_to_cartesian(p, field.spherical_components(p)).unwrap();
                let got = field.velocity(spherical_to_cartesian(p));
                assert!((got - expected).max_abs() < 1e-12 * expected.norm().max(1.0), "{p:?}");
            }
        }
    }

    fn random_point(rng: &mut ChaCha8Rng) -> Vec3 {
        loop {
            let p = sp(rng.random_range(0.05..2.5), rng.random_range(0.0..PI), rng.random_range(0.0..TAU));
            // keep FD stencils off the branch interface
            if (p.r - 1.0).abs() > 1e-4 {
                return spherical_to_cartesian(p);
            }
        }
    }

    #[test]
    fn divergence_free_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for field in [HillVortex::classical(), HillVortex::swirl(0.1).unwrap()] {
            let mut worst = 0.0_f64;
            for _ in 0..1000 {
                let x = random_point(&mut rng);
                worst = worst.max(field.jacobian(x).trace().abs());
                assert_eq!(field.divergence(x), 0.0);
            }
            assert!(worst <= 1e-8, "{}: max |div| = {worst:e}", field.name());
        }
    }

    #[test]
    fn continuous_across_unit_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for field in [HillVortex::classical(), HillVortex::swirl(0.1).unwrap()] {
            for _ in 0..200 {
                let theta = rng.random_range(0.0..PI);
                let phi = rng.random_range(0.0..TAU);
                let inner = field.spherical_components(sp(1.0, theta, phi));
                let outer = field.spherical_components(sp(1.0 + 1e-12, theta, phi));
                assert!((inner - outer).max_abs() < 1e-10);
                assert!(inner.x.abs() < 1e-15, "radial component on the sphere");
                assert!(outer.x.abs() < 1e-10);
            }
        }
    }
}
