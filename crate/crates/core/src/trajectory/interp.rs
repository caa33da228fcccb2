//! Periodic interpolation on the uniform nodes `alpha_j = j / n`.
//!
//! Both schemes are linear in the data, so they are expressed as weight
//! vectors: `value = sum w_j v_j`, `derivative = sum dw_j v_j`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaInterpolation {
    /// Band-limited trigonometric interpolant (spectrally accurate).
    #[default]
    Trigonometric,
    /// Interpolating periodic cubic spline.
    PeriodicCubic,
}

#[derive(Debug, Clone)]
pub(crate) struct PeriodicInterpolator {
    n: usize,
    kind: AlphaInterpolation,
    /// Circulant row mapping node values to spline second derivatives.
    spline_row: Vec<f64>,
}

impl PeriodicInterpolator {
    pub fn new(n: usize, kind: AlphaInterpolation) -> Self {
        assert!(n >= 4 && n.is_multiple_of(2), "need an even node count >= 4");
        let spline_row = match kind {
            AlphaInterpolation::Trigonometric => Vec::new(),
            AlphaInterpolation::PeriodicCubic => spline_row(n),
        };
        PeriodicInterpolator { n, kind, spline_row }
    }

    /// Fills `w` and `dw` (length `n`) for evaluation at `alpha`.
    pub fn weights(&self, alpha: f64, w: &mut [f64], dw: &mut [f64]) {
        match self.kind {
            AlphaInterpolation::Trigonometric => self.trig_weights(alpha, w, dw),
            AlphaInterpolation::PeriodicCubic => self.spline_weights(alpha, w, dw),
        }
    }

    fn trig_weights(&self, alpha: f64, w: &mut [f64], dw: &mut [f64]) {
        let n = self.n;
        let nf = n as f64;
        for j in 0..n {
            let mut x = alpha - j as f64 / nf;
            x -= x.round();
            if x.abs() < 1e-7 {
                // series of sin(N pi x) cot(pi x) / N about the node
                let u = PI * x;
                let c = (nf * nf + 2.0) / 6.0;
                w[j] = 1.0 - c * u * u;
                dw[j] = -2.0 * PI * c * u;
            } else {
                let (s, c) = (PI * x).sin_cos();
                let (sn, cn) = (nf * PI * x).sin_cos();
                w[j] = sn * c / (nf * s);
                dw[j] = PI * (cn * c / s - sn / (nf * s * s));
            }
        }
    }

    fn spline_weights(&self, alpha: f64, w: &mut [f64], dw: &mut [f64]) {
        let n = self.n;
        let h = 1.0 / n as f64;
        let a = alpha.rem_euclid(1.0) * n as f64;
        let j = (a.floor() as usize).min(n - 1);
        let t = a - j as f64;
        let j1 = (j + 1) % n;
        let u = 1.0 - t;
        // S = u v_j + t v_j1 + h^2/6 [(u^3 - u) M_j + (t^3 - t) M_j1]
        let cj = h * h / 6.0 * (u * u * u - u);
        let cj1 = h * h / 6.0 * (t * t * t - t);
        let dj = h / 6.0 * -(3.0 * u * u - 1.0);
        let dj1 = h / 6.0 * (3.0 * t * t - 1.0);
        for k in 0..n {
            let gj = self.spline_row[(k + n - j) % n];
            let gj1 = self.spline_row[(k + n - j1) % n];
            w[k] = cj * gj + cj1 * gj1;
            dw[k] = dj * gj + dj1 * gj1;
        }
        w[j] += u;
        w[j1] += t;
        dw[j] -= 1.0 / h;
        dw[j1] += 1.0 / h;
    }
}

/// `M = G v` for the periodic spline second derivatives, `G` circulant with
/// eigenvalues `(6/h^2)(2 cos th - 2)/(4 + 2 cos th)`.
fn spline_row(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let h = 1.0 / nf;
    let lambdas: Vec<f64> = (0..n)
        .map(|k| {
            let c = (2.0 * PI * k as f64 / nf).cos();
            6.0 / (h * h) * (2.0 * c - 2.0) / (4.0 + 2.0 * c)
        })
        .collect();
    (0..n)
        .map(|m| {
            lambdas
                .iter()
                .enumerate()
                .map(|(k, l)| l * (2.0 * PI * (k * m % n) as f64 / nf).cos())
                .sum::<f64>()
                / nf
        })
        .collect()
}
