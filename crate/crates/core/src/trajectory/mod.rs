//! Trajectory integration and `(p, alpha)` parameterizations of
//! two-dimensional invariant manifolds.

mod generic;
mod hill_chart;
mod integrator;
mod interp;

pub use generic::{generic_chart_from_saddle, GenericChart, GenericChartOptions, Section};
pub use hill_chart::{hill_chart_classical, hill_chart_swirl, HillChart};
pub use integrator::{
    integrate, integrate_system, integrate_until, rk4_fixed, IntegratorOptions, IntegratorStats,
    OdeSystem, Trajectory,
};
pub use interp::AlphaInterpolation;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldModel, SaddleSpectrum};
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChartKind {
    Unstable,
    Stable,
    Heteroclinic,
}

impl std::fmt::Display for ChartKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ChartKind::Unstable => "unstable",
            ChartKind::Stable => "stable",
            ChartKind::Heteroclinic => "heteroclinic",
        })
    }
}

/// Orientation of `alpha` relative to the chart's reference convention.
/// Signs of Melnikov values flip with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Standard,
    Reversed,
}

/// Valid `p` interval (either end may be infinite); `alpha` is periodic
/// with period one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartDomain {
    pub p_min: f64,
    pub p_max: f64,
    pub orientation: Orientation,
}

impl ChartDomain {
    pub fn contains(&self, p: f64) -> bool {
        p >= self.p_min && p <= self.p_max
    }
}

/// Everything the Melnikov integrand needs at one chart point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartSample {
    pub point: Vec3,
    pub velocity: Vec3,
    pub alpha_partial: Vec3,
    /// `Phi(p, alpha)` with `Phi(p) - Phi(tau) = int_tau^p div f dxi`.
    pub divergence_potential: f64,
}

impl ChartSample {
    /// `f ∧ x_alpha`.
    pub fn normal(&self) -> Vec3 {
        self.velocity.wedge(self.alpha_partial)
    }
}

/// A parameterization `x(p, alpha)` of a two-dimensional invariant manifold
/// by trajectories: `p` is time along a trajectory, `alpha` in S^1 labels
/// the trajectory.
pub trait ManifoldChart: Send + Sync {
    fn id(&self) -> String;

    fn kind(&self) -> ChartKind;

    fn field(&self) -> &dyn FieldModel;

    fn domain(&self) -> ChartDomain;

    fn point(&self, p: f64, alpha: f64) -> Vec3;

    fn alpha_partial(&self, p: f64, alpha: f64) -> Vec3;

    fn divergence_potential(&self, p: f64, alpha: f64) -> f64;

    /// `int_tau^p div f(x(xi, alpha)) dxi`.
    fn divergence_integral(&self, tau: f64, p: f64, alpha: f64) -> f64 {
        if self.field().volume_preserving() {
            return 0.0;
        }
        self.divergence_potential(p, alpha) - self.divergence_potential(tau, alpha)
    }

    fn sample(&self, p: f64, alpha: f64) -> ChartSample {
        let point = self.point(p, alpha);
        ChartSample {
            point,
            velocity: self.field().velocity(point),
            alpha_partial: self.alpha_partial(p, alpha),
            divergence_potential: if self.field().volume_preserving() {
                0.0
            } else {
                self.divergence_potential(p, alpha)
            },
        }
    }

    /// Saddle approached as `p -> -inf`, if the chart reaches it.
    fn upstream_spectrum(&self) -> Option<&SaddleSpectrum>;

    /// Saddle approached as `p -> +inf`, if the chart reaches it.
    fn downstream_spectrum(&self) -> Option<&SaddleSpectrum>;
}

/// `f(x(p, alpha)) ∧ x_alpha(p, alpha)`, normal to the manifold.
pub fn chart_normal(chart: &dyn ManifoldChart, p: f64, alpha: f64) -> Result<Vec3> {
    let dom = chart.domain();
    if !dom.contains(p) || !alpha.is_finite() {
        return Err(Error::OutsideChart {
            p,
            alpha,
            p_min: dom.p_min,
            p_max: dom.p_max,
        });
    }
    let n = chart.sample(p, alpha).normal();
    let norm = n.norm();
    if !(norm >= 1e-12) {
        return Err(Error::DegenerateNormal { p, alpha, norm });
    }
    Ok(n)
}

/// Writes chart points as CSV rows `p,alpha,x,y,z,r,theta,phi`.
pub fn write_chart_csv<W: std::io::Write>(
    chart: &dyn ManifoldChart,
    ps: &[f64],
    alphas: &[f64],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "p,alpha,x,y,z,r,theta,phi")?;
    for &p in ps {
        for &a in alphas {
            let x = chart.point(p, a);
            let s = crate::geometry::cartesian_to_spherical(x);
            writeln!(
                out,
                "{p},{a},{},{},{},{},{},{}",
                x.x, x.y, x.z, s.r, s.theta, s.phi
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::wedge;
    use proptest::prelude::*;

    fn charts() -> Vec<Box<dyn ManifoldChart>> {
        vec![
            Box::new(hill_chart_classical()),
            Box::new(hill_chart_swirl(0.1).unwrap()),
            Box::new(hill_chart_swirl(0.7).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn chart_points_are_trajectories(p in -4.0..4.0f64, alpha in 0.0..1.0f64) {
            for chart in charts() {
                let h = 1e-5;
                let dp = (chart.point(p + h, alpha) - chart.point(p - h, alpha)) * (0.5 / h);
                let f = chart.field().velocity(chart.point(p, alpha));
                prop_assert!((dp - f).norm() < 1e-7 * f.norm().max(1.0), "{}", chart.id());
            }
        }

        #[test]
        fn normal_orthogonality(p in -3.0..3.0f64, alpha in 0.0..1.0f64) {
            for chart in charts() {
                let s = chart.sample(p, alpha);
                let n = chart_normal(chart.as_ref(), p, alpha).unwrap();
                let scale = n.norm() * s.velocity.norm().max(s.alpha_partial.norm());
                prop_assert!(n.dot(s.velocity).abs() <= 1e-12 * scale);
                prop_assert!(n.dot(s.alpha_partial).abs() <= 1e-12 * scale);
                // outward
                prop_assert!(n.dot(s.point) > 0.0);
            }
        }

        #[test]
        fn divergence_integral_is_additive(tau in -5.0..5.0f64, s in -5.0..5.0f64, p in -5.0..5.0f64, alpha in 0.0..1.0f64) {
            for chart in charts() {
                let whole = chart.divergence_integral(tau, p, alpha);
                let split = chart.divergence_integral(tau, s, alpha) + chart.divergence_integral(s, p, alpha);
                prop_assert_eq!(whole, 0.0);
                prop_assert!((whole - split).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn classical_normal_magnitude() {
        let chart = hill_chart_classical();
        for &p in &[-2.0, -0.5, 0.0, 0.3, 1.7] {
            for &a in &[0.05, 0.4, 0.9] {
                let n = chart_normal(&chart, p, a).unwrap();
                let sech = 1.0 / (1.5 * p).cosh();
                let expected = 3.0 * std::f64::consts::PI * sech * sech;
                assert!((n.norm() - expected).abs() < 1e-12 * expected);
                let rhat = chart.point(p, a).normalized().unwrap();
                assert!((n - rhat * expected).norm() < 1e-12);
            }
        }
        let n0 = chart_normal(&chart, 0.0, 0.0).unwrap();
        assert!((n0.norm() - 9.42477796076938).abs() < 1e-12);
        assert_eq!(n0, wedge(chart.field().velocity(Vec3::X), chart.alpha_partial(0.0, 0.0)));
    }

    #[test]
    fn degenerate_normal_far_out() {
        let chart = hill_chart_classical();
        assert!(matches!(
            chart_normal(&chart, 30.0, 0.2),
            Err(Error::DegenerateNormal { .. })
        ));
    }

    #[test]
    fn chart_csv_dump() {
        let mut buf = Vec::new();
        write_chart_csv(&hill_chart_classical(), &[0.0], &[0.0, 0.25], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "p,alpha,x,y,z,r,theta,phi");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,0,1,0,"));
    }
}
