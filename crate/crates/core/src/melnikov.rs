//! Unstable, stable and heteroclinic Melnikov functions, displacements and
//! perturbed-surface points.
//!
//! All three integrals share the integrand
//! `exp[int_tau^p div f] (f ∧ x_alpha)(tau) · g(x(tau), tau + t - p)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{PerturbationModel, SaddleCase};
use crate::geometry::Vec3;
use crate::quadrature::{find_tail_cut, integrate_adaptive, QuadratureSpec, TailCut};
use crate::trajectory::{chart_normal, ChartKind, ManifoldChart};

/// A Melnikov value with its error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MelnikovValue {
    pub value: f64,
    /// Quadrature error estimate plus estimated discarded tails.
    pub error_estimate: f64,
    pub evaluations: usize,
    /// Distance below `p` at which the lower tail was cut.
    pub lower_radius: Option<f64>,
    /// Distance above `p` at which the upper tail was cut.
    pub upper_radius: Option<f64>,
}

/// Whether the divergence weight `exp[int_tau^p div f]` is applied. Only
/// diagnostics should drop it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weighting {
    Exact,
    Omitted,
}

/// The Melnikov integrand at fixed `(p, alpha, t)`.
pub struct MelnikovIntegrand<'a> {
    chart: &'a dyn ManifoldChart,
    perturbation: &'a dyn PerturbationModel,
    p: f64,
    alpha: f64,
    t: f64,
    phi_p: f64,
    weighted: bool,
}

impl<'a> MelnikovIntegrand<'a> {
    pub fn new(
        chart: &'a dyn ManifoldChart,
        perturbation: &'a dyn PerturbationModel,
        p: f64,
        alpha: f64,
        t: f64,
        weighting: Weighting,
    ) -> Result<Self> {
        if !(p.is_finite() && alpha.is_finite() && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite Melnikov arguments (p = {p}, alpha = {alpha}, t = {t})"
            )));
        }
        let dom = chart.domain();
        if !dom.contains(p) {
            return Err(Error::OutsideChart {
                p,
                alpha,
                p_min: dom.p_min,
                p_max: dom.p_max,
            });
        }
        let weighted = weighting == Weighting::Exact && !chart.field().volume_preserving();
        let phi_p = if weighted {
            chart.divergence_potential(p, alpha)
        } else {
            0.0
        };
        Ok(MelnikovIntegrand {
            chart,
            perturbation,
            p,
            alpha,
            t,
            phi_p,
            weighted,
        })
    }

    /// Integrand value at `tau`.
    #[inline]
    pub fn eval(&self, tau: f64) -> f64 {
        let s = self.chart.sample(tau, self.alpha);
        let g = self.perturbation.evaluate(s.point, tau + self.t - self.p);
        let base = s.normal().dot(g);
        if self.weighted {
            (self.phi_p - s.divergence_potential).exp() * base
        } else {
            base
        }
    }

    /// `exp[int_tau^p div f] |f ∧ x_alpha|` at `tau`, the quantity bounded
    /// by `C exp(lambda_s (p - tau))` on the unstable side.
    pub fn weighted_normal(&self, tau: f64) -> f64 {
        let s = self.chart.sample(tau, self.alpha);
        let w = if self.weighted {
            (self.phi_p - s.divergence_potential).exp()
        } else {
            1.0
        };
        w * s.normal().norm()
    }

    fn lower_rate(&self) -> f64 {
        self.chart
            .upstream_spectrum()
            .filter(|s| s.case == SaddleCase::Case1)
            .map_or(1.0, |s| s.isolated.abs())
    }

    fn upper_rate(&self) -> f64 {
        self.chart
            .downstream_spectrum()
            .filter(|s| s.case == SaddleCase::Case2)
            .map_or(1.0, |s| s.isolated.abs())
    }

    fn lower_cut(&self, quad: &QuadratureSpec) -> Result<TailCut> {
        let rate = self.lower_rate();
        // always reach past the chart origin, where the bulk of the integrand sits
        let min_reach = self.p.max(0.0) + 1.0 / rate;
        let limit = self.p - self.chart.domain().p_min;
        find_tail_cut(&mut |tau| self.eval(tau), self.p, -1.0, rate, min_reach, limit, quad)
    }

    fn upper_cut(&self, quad: &QuadratureSpec) -> Result<TailCut> {
        let rate = self.upper_rate();
        let min_reach = (-self.p).max(0.0) + 1.0 / rate;
        let limit = self.chart.domain().p_max - self.p;
        find_tail_cut(&mut |tau| self.eval(tau), self.p, 1.0, rate, min_reach, limit, quad)
    }

    fn integrate(&self, a: f64, b: f64, quad: &QuadratureSpec) -> Result<crate::quadrature::QuadResult> {
        // quarter-unit initial panels resolve the oscillation of typical perturbations
        let panels = (((b - a) * 4.0).ceil() as usize).clamp(4, 4096);
        integrate_adaptive(&mut |tau| self.eval(tau), a, b, quad, panels)
    }

    pub fn unstable(&self, quad: &QuadratureSpec) -> Result<MelnikovValue> {
        let cut = self.lower_cut(quad)?;
        let r = self.integrate(self.p - cut.radius, self.p, quad)?;
        Ok(MelnikovValue {
            value: r.value,
            error_estimate: r.error_estimate + cut.remainder,
            evaluations: r.evaluations,
            lower_radius: Some(cut.radius),
            upper_radius: None,
        })
    }

    pub fn stable(&self, quad: &QuadratureSpec) -> Result<MelnikovValue> {
        let cut = self.upper_cut(quad)?;
        let r = self.integrate(self.p, self.p + cut.radius, quad)?;
        Ok(MelnikovValue {
            value: -r.value,
            error_estimate: r.error_estimate + cut.remainder,
            evaluations: r.evaluations,
            lower_radius: None,
            upper_radius: Some(cut.radius),
        })
    }

    /// Whole-line integral in a single adaptive pass.
    pub fn heteroclinic(&self, quad: &QuadratureSpec) -> Result<MelnikovValue> {
        let lo = self.lower_cut(quad)?;
        let hi = self.upper_cut(quad)?;
        let r = self.integrate(self.p - lo.radius, self.p + hi.radius, quad)?;
        Ok(MelnikovValue {
            value: r.value,
            error_estimate: r.error_estimate + lo.remainder + hi.remainder,
            evaluations: r.evaluations,
            lower_radius: Some(lo.radius),
            upper_radius: Some(hi.radius),
        })
    }
}

fn require_kind(chart: &dyn ManifoldChart, allowed: &[ChartKind], op: &str) -> Result<()> {
    if allowed.contains(&chart.kind()) {
        Ok(())
    } else {
        Err(Error::WrongChartKind {
            kind: chart.kind().to_string(),
            op: op.into(),
        })
    }
}

/// `M^u(p, alpha, t)`: integral over `(-inf, p]`.
pub fn melnikov_unstable(
    chart: &dyn ManifoldChart,
    perturbation: &dyn PerturbationModel,
    p: f64,
    alpha: f64,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<MelnikovValue> {
    require_kind(chart, &[ChartKind::Unstable, ChartKind::Heteroclinic], "unstable Melnikov function")?;
    MelnikovIntegrand::new(chart, perturbation, p, alpha, t, Weighting::Exact)?.unstable(quad)
}

/// `M^s(p, alpha, t)`: minus the integral over `[p, inf)`.
pub fn melnikov_stable(
    chart: &dyn ManifoldChart,
    perturbation: &dyn PerturbationModel,
    p: f64,
    alpha: f64,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<MelnikovValue> {
    require_kind(chart, &[ChartKind::Stable, ChartKind::Heteroclinic], "stable Melnikov function")?;
    MelnikovIntegrand::new(chart, perturbation, p, alpha, t, Weighting::Exact)?.stable(quad)
}

/// `M(p, alpha, t)` over the whole line, for heteroclinic charts.
pub fn melnikov_heteroclinic(
    chart: &dyn ManifoldChart,
    perturbation: &dyn PerturbationModel,
    p: f64,
    alpha: f64,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<MelnikovValue> {
    require_kind(chart, &[ChartKind::Heteroclinic], "heteroclinic Melnikov function")?;
    MelnikovIntegrand::new(chart, perturbation, p, alpha, t, Weighting::Exact)?.heteroclinic(quad)
}

/// Leading-order normal displacement `eps M / |f ∧ x_alpha|`.
pub fn displacement(chart: &dyn ManifoldChart, m_value: f64, p: f64, alpha: f64, eps: f64) -> Result<f64> {
    let n = chart_normal(chart, p, alpha)?;
    Ok(eps * m_value / n.norm())
}

/// Which perturbed manifold a surface point approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceKind {
    Unstable,
    Stable,
}

/// `x(p, alpha) + eps M (f ∧ x_alpha) / |f ∧ x_alpha|^2`, with `M = M^u`
/// or `M^s` according to `kind`.
#[allow(clippy::too_many_arguments)]
pub fn perturbed_surface_point(
    chart: &dyn ManifoldChart,
    kind: SurfaceKind,
    perturbation: &dyn PerturbationModel,
    p: f64,
    alpha: f64,
    t: f64,
    eps: f64,
    quad: &QuadratureSpec,
) -> Result<Vec3> {
    let n = chart_normal(chart, p, alpha)?;
    let base = chart.point(p, alpha);
    if eps == 0.0 {
        return Ok(base);
    }
    let m = match kind {
        SurfaceKind::Unstable => melnikov_unstable(chart, perturbation, p, alpha, t, quad)?,
        SurfaceKind::Stable => melnikov_stable(chart, perturbation, p, alpha, t, quad)?,
    };
    Ok(base + n * (eps * m.value / n.norm_sq()))
}

/// Least-squares fit of `log y = intercept + rate * s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits `log y` against `s` by least squares; points with `y <= 0` are skipped.
pub fn fit_log_linear(s: &[f64], y: &[f64]) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = s
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > 0.0 && v.is_finite())
        .map(|(&s, &v)| (s, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let rate = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(DecayFit {
        rate,
        intercept: my - rate * mx,
        r_squared,
    })
}

/// What to measure along the lower tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayQuantity {
    /// `exp[int div f] |f ∧ x_alpha|`.
    WeightedNormal,
    /// Windowed maximum of the full integrand magnitude.
    IntegrandEnvelope,
}

/// Fits the exponential decay rate of the lower (unstable-side) tail over
/// offsets `s = p - tau` in `[s_min, s_max]`.
#[allow(clippy::too_many_arguments)]
pub fn fit_decay_rate(
    chart: &dyn ManifoldChart,
    perturbation: &dyn PerturbationModel,
    p: f64,
    alpha: f64,
    t: f64,
    s_min: f64,
    s_max: f64,
    quantity: DecayQuantity,
) -> Result<DecayFit> {
    if !(s_max > s_min && s_min >= 0.0) {
        return Err(Error::InvalidParameter("decay fit needs 0 <= s_min < s_max".into()));
    }
    let integrand = MelnikovIntegrand::new(chart, perturbation, p, alpha, t, Weighting::Exact)?;
    let n = 40;
    let width = (s_max - s_min) / n as f64;
    let mut s = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let lo = s_min + width * i as f64;
        match quantity {
            DecayQuantity::WeightedNormal => {
                let c = lo + 0.5 * width;
                s.push(c);
                y.push(integrand.weighted_normal(p - c));
            }
            DecayQuantity::IntegrandEnvelope => {
                let m = (0..32)
                    .map(|k| {
                        let off = lo + width * k as f64 / 31.0;
                        (off, integrand.eval(p - off).abs())
                    })
                    .fold((lo, 0.0_f64), |a, b| if b.1 > a.1 { b } else { a });
                s.push(m.0);
                y.push(m.1);
            }
        }
    }
    fit_log_linear(&s, &y).ok_or_else(|| Error::InvalidParameter("integrand vanishes on the fit window".into()))
}
