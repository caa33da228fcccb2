//! Melnikov values sampled on a `(p, alpha)` grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::PerturbationModel;
use crate::melnikov::MelnikovIntegrand;
use crate::melnikov::Weighting;
use crate::quadrature::QuadratureSpec;
use crate::trajectory::{ChartKind, ManifoldChart};

/// Which Melnikov function a grid holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MelnikovKind {
    Unstable,
    Stable,
    Heteroclinic,
}

impl MelnikovKind {
    /// The full-line function on heteroclinic charts, otherwise the one
    /// matching the chart.
    pub fn for_chart(kind: ChartKind) -> Self {
        match kind {
            ChartKind::Unstable => MelnikovKind::Unstable,
            ChartKind::Stable => MelnikovKind::Stable,
            ChartKind::Heteroclinic => MelnikovKind::Heteroclinic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub chart: String,
    pub perturbation: String,
    pub function: MelnikovKind,
    pub quadrature: Option<QuadratureSpec>,
}

/// `M(p_i, alpha_j, t)` on a strictly increasing `p` grid and the uniform
/// periodic grid `alpha_j = j / n_alpha`. Arrays are row-major with `p` as
/// the slow index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelnikovField {
    pub t: f64,
    pub p: Vec<f64>,
    pub alpha: Vec<f64>,
    pub values: Vec<f64>,
    pub dm_dp: Vec<f64>,
    pub dm_dalpha: Vec<f64>,
    /// Per-node quadrature error estimates (zero for synthetic fields).
    pub errors: Vec<f64>,
    pub provenance: Provenance,
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo + h * i as f64 }).collect()
}

fn check_grid(p: &[f64], n_alpha: usize) -> Result<()> {
    if p.len() < 8 || n_alpha < 8 {
        return Err(Error::InvalidParameter(format!(
            "grid needs at least 8 nodes per axis (got {} x {n_alpha})",
            p.len()
        )));
    }
    if p.iter().any(|x| !x.is_finite()) || p.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("p grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

impl MelnikovField {
    /// Builds a field from node values, computing the gradients.
    pub fn from_values(
        t: f64,
        p: Vec<f64>,
        n_alpha: usize,
        values: Vec<f64>,
        errors: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        check_grid(&p, n_alpha)?;
        if values.len() != p.len() * n_alpha || errors.len() != values.len() {
            return Err(Error::InvalidParameter("value array does not match the grid".into()));
        }
        let alpha = (0..n_alpha).map(|j| j as f64 / n_alpha as f64).collect();
        let mut field = MelnikovField {
            t,
            p,
            alpha,
            values,
            dm_dp: Vec::new(),
            dm_dalpha: Vec::new(),
            errors,
            provenance,
        };
        field.compute_gradients();
        Ok(field)
    }

    /// Samples a closure `f(p, alpha)` on the grid.
    pub fn from_fn(t: f64, p: Vec<f64>, n_alpha: usize, label: &str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_grid(&p, n_alpha)?;
        let values = p
            .iter()
            .flat_map(|&pi| (0..n_alpha).map(move |j| (pi, j as f64 / n_alpha as f64)))
            .map(|(pi, a)| f(pi, a))
            .collect::<Vec<_>>();
        let errors = vec![0.0; values.len()];
        let provenance = Provenance {
            chart: label.into(),
            perturbation: label.into(),
            function: MelnikovKind::Heteroclinic,
            quadrature: None,
        };
        Self::from_values(t, p, n_alpha, values, errors, provenance)
    }

    pub fn n_p(&self) -> usize {
        self.p.len()
    }

    pub fn n_alpha(&self) -> usize {
        self.alpha.len()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.alpha.len() + j % self.alpha.len()
    }

    /// Value at `p_i`, `alpha_j`; `j` wraps periodically.
    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.index(i, j)]
    }

    pub fn alpha_step(&self) -> f64 {
        1.0 / self.alpha.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_gradient(&self) -> f64 {
        self.dm_dp
            .iter()
            .zip(&self.dm_dalpha)
            .fold(0.0, |m, (a, b)| m.max(a.abs() + b.abs()))
    }

    /// Bilinear interpolation of `M` at `(p, alpha)`, `alpha` taken mod 1.
    /// Returns `None` outside the `p` range.
    pub fn interpolate(&self, p: f64, alpha: f64) -> Option<f64> {
        let (i, u) = self.locate_p(p)?;
        let a = alpha.rem_euclid(1.0) * self.n_alpha() as f64;
        let j = (a.floor() as usize).min(self.n_alpha() - 1);
        let v = a - j as f64;
        let f00 = self.value(i, j);
        let f01 = self.value(i, j + 1);
        let f10 = self.value(i + 1, j);
        let f11 = self.value(i + 1, j + 1);
        Some((1.0 - u) * ((1.0 - v) * f00 + v * f01) + u * ((1.0 - v) * f10 + v * f11))
    }

    /// Cell row containing `p` and the local coordinate in `[0, 1]`.
    pub fn locate_p(&self, p: f64) -> Option<(usize, f64)> {
        let n = self.p.len();
        if !(p >= self.p[0] && p <= self.p[n - 1]) {
            return None;
        }
        let i = self.p.partition_point(|&x| x <= p).clamp(1, n - 1) - 1;
        Some((i, (p - self.p[i]) / (self.p[i + 1] - self.p[i])))
    }

    // Central differences; second-order one-sided at the p ends and
    // periodic in alpha.
    fn compute_gradients(&mut self) {
        let (np, na) = (self.n_p(), self.n_alpha());
        let ha = self.alpha_step();
        let mut dp = vec![0.0; np * na];
        let mut da = vec![0.0; np * na];
        for i in 0..np {
            for j in 0..na {
                let k = self.index(i, j);
                da[k] = (self.value(i, j + 1) - self.value(i, j + na - 1)) / (2.0 * ha);
                dp[k] = if i == 0 {
                    one_sided(&self.p[0..3], [self.value(0, j), self.value(1, j), self.value(2, j)])
                } else if i == np - 1 {
                    -one_sided(
                        &[-self.p[np - 1], -self.p[np - 2], -self.p[np - 3]],
                        [self.value(np - 1, j), self.value(np - 2, j), self.value(np - 3, j)],
                    )
                } else {
                    let (h0, h1) = (self.p[i] - self.p[i - 1], self.p[i + 1] - self.p[i]);
                    let (f0, f1, f2) = (self.value(i - 1, j), self.value(i, j), self.value(i + 1, j));
                    // second-order on nonuniform spacing
                    (h0 * h0 * (f2 - f1) + h1 * h1 * (f1 - f0)) / (h0 * h1 * (h0 + h1))
                };
            }
        }
        self.dm_dp = dp;
        self.dm_dalpha = da;
    }
}

/// Derivative at `x[0]` of the quadratic through three points.
fn one_sided(x: &[f64], f: [f64; 3]) -> f64 {
    let (h1, h2) = (x[1] - x[0], x[2] - x[0]);
    (-(h1 + h2) / (h1 * h2)) * f[0] + h2 / (h1 * (h2 - h1)) * f[1] - h1 / (h2 * (h2 - h1)) * f[2]
}

/// Fills a [`MelnikovField`] over `n_p` evenly spaced `p` in `p_range`
/// and `n_alpha` periodic `alpha`. Nodes are evaluated in parallel.
#[allow(clippy::too_many_arguments)]
pub fn build_melnikov_grid(
    chart: &dyn ManifoldChart,
    perturbation: &dyn PerturbationModel,
    t: f64,
    p_range: (f64, f64),
    n_p: usize,
    n_alpha: usize,
    quad: &QuadratureSpec,
) -> Result<MelnikovField> {
    let function = MelnikovKind::for_chart(chart.kind());
    build_melnikov_grid_on(chart, perturbation, function, t, linspace(p_range.0, p_range.1, n_p), n_alpha, quad)
}

/// As [`build_melnikov_grid`] with an explicit `p` grid and function.
pub fn build_melnikov_grid_on(
    chart: &dyn ManifoldChart,
    perturbation: &dyn PerturbationModel,
    function: MelnikovKind,
    t: f64,
    p: Vec<f64>,
    n_alpha: usize,
    quad: &QuadratureSpec,
) -> Result<MelnikovField> {
    check_grid(&p, n_alpha)?;
    quad.validate()?;
    let allowed = match function {
        MelnikovKind::Unstable => [ChartKind::Unstable, ChartKind::Heteroclinic],
        MelnikovKind::Stable => [ChartKind::Stable, ChartKind::Heteroclinic],
        MelnikovKind::Heteroclinic => [ChartKind::Heteroclinic; 2],
    };
    if !allowed.contains(&chart.kind()) {
        return Err(Error::WrongChartKind {
            kind: chart.kind().to_string(),
            op: format!("{function:?} Melnikov grid").to_lowercase(),
        });
    }
    let dom = chart.domain();
    if !(dom.contains(p[0]) && dom.contains(p[p.len() - 1])) {
        return Err(Error::OutsideChart {
            p: if dom.contains(p[0]) { p[p.len() - 1] } else { p[0] },
            alpha: 0.0,
            p_min: dom.p_min,
            p_max: dom.p_max,
        });
    }
    let nodes: Vec<(f64, f64)> = p
        .iter()
        .flat_map(|&pi| (0..n_alpha).map(move |j| (pi, j as f64 / n_alpha as f64)))
        .collect();
    let results: Vec<(f64, f64)> = nodes
        .par_iter()
        .map(|&(pi, a)| {
            let m = MelnikovIntegrand::new(chart, perturbation, pi, a, t, Weighting::Exact)?;
            let v = match function {
                MelnikovKind::Unstable => m.unstable(quad)?,
                MelnikovKind::Stable => m.stable(quad)?,
                MelnikovKind::Heteroclinic => m.heteroclinic(quad)?,
            };
            Ok((v.value, v.error_estimate))
        })
        .collect::<Result<_>>()?;
    let (values, errors) = results.into_iter().unzip();
    let provenance = Provenance {
        chart: chart.id(),
        perturbation: perturbation.name(),
        function,
        quadrature: Some(*quad),
    };
    MelnikovField::from_values(t, p, n_alpha, values, errors, provenance)
}
