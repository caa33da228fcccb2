use std::f64::consts::TAU;

use crate::error::Result;
use crate::fields::{classify_saddle, FieldModel, HillVortex, SaddleSpectrum};
use crate::geometry::Vec3;

use super::{ChartDomain, ChartKind, ChartSample, ManifoldChart, Orientation};

/// Analytic chart of the unit sphere of Hill's vortex,
/// `x(p, alpha) = (1, arccos(-tanh(3p/2)), 2 pi alpha + omega p)` in
/// spherical coordinates, where `omega` is the swirl rate (zero for the
/// classical vortex). `p = 0` is the equator.
#[derive(Debug, Clone)]
pub struct HillChart {
    field: HillVortex,
    upstream: SaddleSpectrum,
    downstream: SaddleSpectrum,
}

pub fn hill_chart_classical() -> HillChart {
    HillChart::new(HillVortex::classical())
}

pub fn hill_chart_swirl(r0: f64) -> Result<HillChart> {
    Ok(HillChart::new(HillVortex::swirl(r0)?))
}

impl HillChart {
    pub fn new(field: HillVortex) -> Self {
        let upstream = classify_saddle(&field, Vec3::Z, 1e-8).expect("north pole is a saddle");
        let downstream = classify_saddle(&field, -Vec3::Z, 1e-8).expect("south pole is a saddle");
        HillChart {
            field,
            upstream,
            downstream,
        }
    }

    pub fn hill(&self) -> &HillVortex {
        &self.field
    }

    /// `(cos theta, sin theta, phi)` of the chart point.
    #[inline]
    pub fn angles(&self, p: f64, alpha: f64) -> (f64, f64, f64) {
        let h = 1.5 * p;
        let cos_theta = -h.tanh();
        let sin_theta = 1.0 / h.cosh();
        let phi = TAU * alpha.rem_euclid(1.0) + self.field.swirl_rate() * p;
        (cos_theta, sin_theta, phi)
    }
}

impl ManifoldChart for HillChart {
    fn id(&self) -> String {
        format!("hill-analytic[{}]", self.field.name())
    }

    fn kind(&self) -> ChartKind {
        ChartKind::Heteroclinic
    }

    fn field(&self) -> &dyn FieldModel {
        &self.field
    }

    fn domain(&self) -> ChartDomain {
        ChartDomain {
            p_min: f64::NEG_INFINITY,
            p_max: f64::INFINITY,
            orientation: Orientation::Standard,
        }
    }

    #[inline]
    fn point(&self, p: f64, alpha: f64) -> Vec3 {
        let (ct, st, phi) = self.angles(p, alpha);
        let (sp, cp) = phi.sin_cos();
        Vec3::new(st * cp, st * sp, ct)
    }

    #[inline]
    fn alpha_partial(&self, p: f64, alpha: f64) -> Vec3 {
        let (_, st, phi) = self.angles(p, alpha);
        let (sp, cp) = phi.sin_cos();
        Vec3::new(-sp, cp, 0.0) * (TAU * st)
    }

    fn divergence_potential(&self, _p: f64, _alpha: f64) -> f64 {
        0.0
    }

    #[inline]
    fn sample(&self, p: f64, alpha: f64) -> ChartSample {
        let (ct, st, phi) = self.angles(p, alpha);
        let (sp, cp) = phi.sin_cos();
        let point = Vec3::new(st * cp, st * sp, ct);
        ChartSample {
            point,
            velocity: self.field.velocity(point),
            alpha_partial: Vec3::new(-sp, cp, 0.0) * (TAU * st),
            divergence_potential: 0.0,
        }
    }

    fn upstream_spectrum(&self) -> Option<&SaddleSpectrum> {
        Some(&self.upstream)
    }

    fn downstream_spectrum(&self) -> Option<&SaddleSpectrum> {
        Some(&self.downstream)
    }
}
