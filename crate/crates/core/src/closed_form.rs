//! Closed-form Melnikov functions for Hill's vortex under the `gr`
//! perturbation, used as oracles by the grid, CLI and acceptance layers.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::{FieldParams, DEFAULT_ROSSBY};

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// `int_0^inf sech^3(3 tau / 2) cos(4 tau) dtau = (73 pi / 54) sech(4 pi / 3)`.
pub fn hill_base_integral() -> f64 {
    73.0 * PI / 54.0 * sech(4.0 * PI / 3.0)
}

/// Amplitude `(73 pi^2 / 9) sech(4 pi / 3)` of the classical Melnikov function.
pub fn hill_classical_amplitude() -> f64 {
    6.0 * PI * hill_base_integral()
}

/// `M(p, alpha, t) = amplitude * sin(6 pi alpha) cos(4 (p - t))`.
pub fn hill_classical_melnikov(p: f64, alpha: f64, t: f64) -> f64 {
    hill_classical_amplitude() * (6.0 * PI * alpha).sin() * (4.0 * (p - t)).cos()
}

/// Leading-order volume of one classical lobe over `alpha in (0, 1/6)`
/// and one half-period in `p`, divided by `eps`. Equal to the base integral.
pub fn hill_lobe_volume_per_eps() -> f64 {
    hill_base_integral()
}

/// Coefficients `(A, B)` of the swirling vortex,
/// `A = int_0^inf sech^3(3 tau/2) cos(3 tau/(2 R0)) cos(4 tau) dtau` and
/// `B = int_0^inf sech^3(3 tau/2) sin(3 tau/(2 R0)) sin(4 tau) dtau`.
pub fn swirl_coefficients(r0: f64) -> Result<(f64, f64)> {
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(Error::InvalidParameter(format!("Rossby number must be positive, got {r0}")));
    }
    let minus = (73.0 * r0 * r0 - 48.0 * r0 + 9.0) * sech(PI * (8.0 * r0 - 3.0) / (6.0 * r0));
    let plus = (73.0 * r0 * r0 + 48.0 * r0 + 9.0) * sech(PI * (8.0 * r0 + 3.0) / (6.0 * r0));
    let scale = PI / (108.0 * r0 * r0);
    Ok((scale * (minus + plus), scale * (minus - plus)))
}

/// Swirling-vortex Melnikov function
/// `6 pi [A sin(6 pi alpha) cos 4(p - t) - B cos(6 pi alpha) sin 4(p - t)]`
/// for the chart with `phi = 2 pi alpha - p / (2 R0)`.
pub fn hill_swirl_melnikov(r0: f64, p: f64, alpha: f64, t: f64) -> Result<f64> {
    let (a, b) = swirl_coefficients(r0)?;
    Ok(swirl_melnikov_with(a, b, p, alpha, t))
}

/// Same as [`hill_swirl_melnikov`] with precomputed coefficients.
pub fn swirl_melnikov_with(a: f64, b: f64, p: f64, alpha: f64, t: f64) -> f64 {
    let (sa, ca) = (6.0 * PI * alpha).sin_cos();
    let (sp, cp) = (4.0 * (p - t)).sin_cos();
    6.0 * PI * (a * sa * cp - b * ca * sp)
}

/// Pointwise amplitude `6 pi sqrt(A^2 sin^2 6 pi alpha + B^2 cos^2 6 pi alpha)`
/// of the swirling Melnikov function in `p`.
pub fn swirl_local_amplitude(a: f64, b: f64, alpha: f64) -> f64 {
    let (sa, ca) = (6.0 * PI * alpha).sin_cos();
    6.0 * PI * (a * a * sa * sa + b * b * ca * ca).sqrt()
}

/// Residual of the swirl zero set `cot 4(p - t) = (B / A) cot(6 pi alpha)`
/// written without poles, `sin(4(p - t) - psi(alpha))` with `psi` the phase
/// of `(A sin 6 pi alpha, B cos 6 pi alpha)`. Vanishes exactly on the zeros.
pub fn swirl_zero_residual(a: f64, b: f64, p: f64, alpha: f64, t: f64) -> f64 {
    let (sa, ca) = (6.0 * PI * alpha).sin_cos();
    let (x, y) = (a * sa, b * ca);
    let norm = x.hypot(y);
    if norm == 0.0 {
        return 0.0;
    }
    let (sp, cp) = (4.0 * (p - t)).sin_cos();
    (x * cp - y * sp) / norm
}

/// Classical zero longitudes `alpha = k / 6` in `[0, 1)`.
pub fn hill_zero_longitudes() -> [f64; 6] {
    [0.0, 1.0 / 6.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 5.0 / 6.0]
}

/// Classical zero latitudes `p_k = t + (2k + 1) pi / 8` inside `[p_lo, p_hi]`.
pub fn hill_zero_latitudes(t: f64, p_lo: f64, p_hi: f64) -> Vec<f64> {
    let k0 = ((p_lo - t) * 8.0 / PI - 1.0) / 2.0;
    let mut k = k0.ceil() as i64;
    let mut out = Vec::new();
    loop {
        let pk = t + (2 * k + 1) as f64 * PI / 8.0;
        if pk > p_hi {
            break;
        }
        if pk >= p_lo {
            out.push(pk);
        }
        k += 1;
    }
    out
}

/// Heteroclinic `M(p, alpha, t)` in closed form.
pub type ClosedForm = Box<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// The closed form registered for a model/perturbation pair, if any.
/// Names and parameters are those of the field registry.
pub fn registered_closed_form(model: &str, params: &FieldParams, perturbation: &str) -> Result<Option<ClosedForm>> {
    Ok(match (model, perturbation) {
        (_, "none") => Some(Box::new(|_, _, _| 0.0)),
        ("hill-classical", "gr") => Some(Box::new(hill_classical_melnikov)),
        ("hill-swirl", "gr") => {
            let (a, b) = swirl_coefficients(params.get("R0").copied().unwrap_or(DEFAULT_ROSSBY))?;
            Some(Box::new(move |p, alpha, t| swirl_melnikov_with(a, b, p, alpha, t)))
        }
        _ => None,
    })
}
