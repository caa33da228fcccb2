//! Direct-integration check of the Melnikov displacement.
//!
//! A point is seeded on the unperturbed manifold deep in the linear
//! regime of its saddle, the perturbed flow is integrated up to the chart
//! point, and the endpoint's offset is projected on the unit normal. The
//! difference from `eps M^u / |f ∧ x_alpha|` (or the stable analogue) is
//! expected to be `O(eps^2)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::PerturbationModel;
use crate::melnikov::{fit_log_linear, melnikov_stable, melnikov_unstable, SurfaceKind};
use crate::quadrature::QuadratureSpec;
use crate::trajectory::{chart_normal, integrate_system, IntegratorOptions, ManifoldChart, OdeSystem};

/// Integrator tolerance of oracle runs.
pub const ORACLE_TOL: f64 = 1e-12;

/// Minimum launch depth in units of the saddle's e-folding time.
pub const MIN_LAUNCH_DEPTH: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementSample {
    pub kind: SurfaceKind,
    pub p: f64,
    pub alpha: f64,
    pub t: f64,
    pub eps: f64,
    pub p_launch: f64,
    pub measured_d: f64,
    pub predicted_d: f64,
    /// Change in `measured_d` when launching one unit deeper.
    pub seeding_error_estimate: f64,
}

impl DisplacementSample {
    pub fn error(&self) -> f64 {
        (self.measured_d - self.predicted_d).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub eps: Vec<f64>,
    pub errors: Vec<f64>,
    /// `None` when saturated.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
    /// Some error sat below the noise floor, so no slope is reported.
    pub saturated: bool,
}

fn launch_rate(chart: &dyn ManifoldChart, kind: SurfaceKind) -> Result<f64> {
    let spectrum = match kind {
        SurfaceKind::Unstable => chart.upstream_spectrum(),
        SurfaceKind::Stable => chart.downstream_spectrum(),
    };
    spectrum
        .map(|s| s.pair_rate())
        .filter(|r| *r > 0.0)
        .ok_or_else(|| Error::InvalidParameter(format!("chart {} has no {kind:?} saddle spectrum", chart.id())))
}

/// Normal displacement of the perturbed trajectory launched from
/// `x(p_launch, alpha)`. `p_launch < p` measures the unstable manifold
/// (forward from time `t - (p - p_launch)`), `p_launch > p` the stable one
/// (backward from `t + (p_launch - p)`).
#[allow(clippy::too_many_arguments)]
pub fn measure_displacement(
    chart: &dyn ManifoldChart,
    perturbation: &dyn PerturbationModel,
    eps: f64,
    p: f64,
    alpha: f64,
    t: f64,
    p_launch: f64,
    quad: &QuadratureSpec,
) -> Result<DisplacementSample> {
    let kind = if p_launch < p {
        SurfaceKind::Unstable
    } else {
        SurfaceKind::Stable
    };
    let rate = launch_rate(chart, kind)?;
    let depth = (p - p_launch).abs();
    if depth < MIN_LAUNCH_DEPTH / rate {
        return Err(Error::InvalidParameter(format!(
            "launch at p = {p_launch} is only {depth} from p = {p}; need at least {}",
            MIN_LAUNCH_DEPTH / rate
        )));
    }
    let dom = chart.domain();
    if !dom.contains(p_launch) || !dom.contains(p) {
        return Err(Error::OutsideChart {
            p: p_launch,
            alpha,
            p_min: dom.p_min,
            p_max: dom.p_max,
        });
    }
    let n = chart_normal(chart, p, alpha)?;
    let unit = n / n.norm();
    let target = chart.point(p, alpha);
    let deeper = if kind == SurfaceKind::Unstable {
        p_launch - 1.0
    } else {
        p_launch + 1.0
    };
    let measure = |pl: f64| -> Result<f64> {
        let system = OdeSystem::perturbed(chart.field(), Some(perturbation), eps);
        let x0 = chart.point(pl, alpha);
        let traj = integrate_system(&system, x0, t - (p - pl), t, &IntegratorOptions::with_tol(ORACLE_TOL))?;
        Ok((traj.final_state() - target).dot(unit))
    };
    let measured_d = measure(p_launch)?;
    let seeding = if dom.contains(deeper) {
        (measure(deeper)? - measured_d).abs()
    } else {
        f64::NAN
    };
    let m = match kind {
        SurfaceKind::Unstable => melnikov_unstable(chart, perturbation, p, alpha, t, quad)?,
        SurfaceKind::Stable => melnikov_stable(chart, perturbation, p, alpha, t, quad)?,
    };
    Ok(DisplacementSample {
        kind,
        p,
        alpha,
        t,
        eps,
        p_launch,
        measured_d,
        predicted_d: eps * m.value / n.norm(),
        seeding_error_estimate: seeding,
    })
}

/// Samples at every `eps` in parallel.
#[allow(clippy::too_many_arguments)]
pub fn measure_displacements(
    chart: &dyn ManifoldChart,
    perturbation: &dyn PerturbationModel,
    eps_list: &[f64],
    p: f64,
    alpha: f64,
    t: f64,
    p_launch: f64,
    quad: &QuadratureSpec,
) -> Result<Vec<DisplacementSample>> {
    eps_list
        .par_iter()
        .map(|&e| measure_displacement(chart, perturbation, e, p, alpha, t, p_launch, quad))
        .collect()
}

/// Errors at or below this are integrator noise.
pub const NOISE_FLOOR: f64 = 1e-11;

/// Least-squares slope of `log|measured - predicted|` against `log eps`.
pub fn fit_order(samples: &[DisplacementSample]) -> Result<OrderFit> {
    let eps: Vec<f64> = samples.iter().map(|s| s.eps).collect();
    let errors: Vec<f64> = samples.iter().map(DisplacementSample::error).collect();
    fit_order_raw(&eps, &errors)
}

/// [`fit_order`] on bare `(eps, error)` lists.
pub fn fit_order_raw(eps: &[f64], errors: &[f64]) -> Result<OrderFit> {
    if eps.len() < 3 || eps.len() != errors.len() {
        return Err(Error::InvalidParameter("an order fit needs at least 3 samples".into()));
    }
    if eps.iter().any(|&e| !(e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("eps values must be positive and strictly decreasing".into()));
    }
    if eps[0] / eps[eps.len() - 1] < 10.0 * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter("eps values must span at least a decade".into()));
    }
    let saturated = errors.iter().any(|&e| !(e > NOISE_FLOOR));
    let fit = if saturated {
        None
    } else {
        let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
        // fit_log_linear fits log y against its first argument
        fit_log_linear(&x, errors)
    };
    Ok(OrderFit {
        eps: eps.to_vec(),
        errors: errors.to_vec(),
        slope: fit.map(|f| f.rate),
        intercept: fit.map(|f| f.intercept),
        r_squared: fit.map(|f| f.r_squared),
        saturated,
    })
}
