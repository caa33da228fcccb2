//! Randomised invariants across the public API.

use melnikov3d::fields::{FieldModel, HillVortex, RadialGr};
use melnikov3d::geometry::{
    cartesian_to_spherical, spherical_to_cartesian, spherical_vector_to_cartesian, triple_identity_residual, wedge,
    Mat3, SphericalPoint, Vec3,
};
use melnikov3d::melnikov::melnikov_heteroclinic;
use melnikov3d::quadrature::QuadratureSpec;
use melnikov3d::trajectory::{hill_chart_classical, hill_chart_swirl, ManifoldChart};
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vec3> {
    (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn mat3() -> impl Strategy<Value = Mat3> {
    prop::array::uniform3(prop::array::uniform3(-10.0..10.0f64)).prop_map(Mat3::new)
}

fn hill(swirl: bool) -> HillVortex {
    if swirl {
        HillVortex::swirl(0.1).unwrap()
    } else {
        HillVortex::classical()
    }
}

proptest! {
    #[test]
    fn trace_identity(a in mat3(), b in vec3(), c in vec3(), d in vec3()) {
        let scale = (a.trace() * wedge(b, c).dot(d)).abs() + 1.0;
        let size = a.max_abs() * b.norm() * c.norm() * d.norm();
        prop_assert!(triple_identity_residual(&a, b, c, d).abs() <= 1e-12 * scale.max(size));
    }

    #[test]
    fn wedge_is_antisymmetric_and_satisfies_lagrange(b in vec3(), c in vec3()) {
        let s = wedge(b, c) + wedge(c, b);
        prop_assert!(s.max_abs() <= f64::EPSILON * b.norm() * c.norm());
        let lhs = wedge(b, c).norm_sq() + b.dot(c).powi(2);
        let rhs = b.norm_sq() * c.norm_sq();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn spherical_vectors_keep_their_length(
        r in 0.1..5.0f64,
        theta in 0.01..3.13f64,
        phi in -3.0..3.0f64,
        v in vec3(),
    ) {
        let p = SphericalPoint::new(r, theta, phi).unwrap();
        let back = cartesian_to_spherical(spherical_to_cartesian(p));
        prop_assert!((back.r - r).abs() < 1e-12 && (back.theta - theta).abs() < 1e-12);
        let w = spherical_vector_to_cartesian(p, v).unwrap();
        prop_assert!((w.norm() - v.norm()).abs() <= 1e-13 * v.norm().max(1.0));
    }

    #[test]
    fn hill_fields_are_divergence_free(x in vec3(), swirl in any::<bool>()) {
        let x = x * 0.2;
        prop_assume!(x.norm() > 1e-3 && (x.norm() - 1.0).abs() > 1e-3);
        prop_assume!(x.x.hypot(x.y) > 1e-3);
        prop_assert!(hill(swirl).divergence(x).abs() <= 1e-8);
    }

    #[test]
    fn unit_sphere_is_invariant(theta in 0.01..3.13f64, phi in -3.0..3.0f64, swirl in any::<bool>()) {
        let h = hill(swirl);
        let p = SphericalPoint::new(1.0, theta, phi).unwrap();
        let x = spherical_to_cartesian(p);
        prop_assert!(h.velocity(x).dot(x).abs() < 1e-12);
        let inside = h.velocity(x * (1.0 - 1e-12));
        let outside = h.velocity(x * (1.0 + 1e-12));
        prop_assert!((inside - outside).norm() < 1e-10);
    }

    #[test]
    fn chart_points_follow_the_flow(p in -3.0..3.0f64, alpha in 0.0..1.0f64, swirl in any::<bool>()) {
        let chart = if swirl { hill_chart_swirl(0.1).unwrap() } else { hill_chart_classical() };
        let h = 1e-5;
        let dp = (chart.point(p + h, alpha) - chart.point(p - h, alpha)) * (0.5 / h);
        let f = chart.field().velocity(chart.point(p, alpha));
        prop_assert!((dp - f).norm() < 1e-7 * f.norm().max(1.0));
        // alpha + 1.0 itself rounds, so exact equality is out of reach
        prop_assert!((chart.point(p, alpha) - chart.point(p, alpha + 1.0)).norm() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// For volume-preserving flows `M` depends on `p` and `t` only through
    /// `p - t`.
    #[test]
    fn melnikov_shift(p in -2.0..2.0f64, alpha in 0.0..1.0f64, t in -1.0..1.0f64, s in -3.0..3.0f64, swirl in any::<bool>()) {
        let chart = if swirl { hill_chart_swirl(0.1).unwrap() } else { hill_chart_classical() };
        let q = QuadratureSpec::default();
        let a = melnikov_heteroclinic(&chart, &RadialGr, p, alpha, t, &q).unwrap().value;
        let b = melnikov_heteroclinic(&chart, &RadialGr, p + s, alpha, t + s, &q).unwrap().value;
        let tol = q.abs_tol + q.rel_tol * a.abs().max(b.abs());
        prop_assert!((a - b).abs() <= 2.0 * tol, "{} vs {}", a, b);
    }
}
