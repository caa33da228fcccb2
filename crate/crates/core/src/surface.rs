//! Structured meshes of the leading-order perturbed manifolds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fields::PerturbationModel;
use crate::geometry::Vec3;
use crate::melnikov::{melnikov_stable, melnikov_unstable, SurfaceKind};
use crate::quadrature::QuadratureSpec;
use crate::trajectory::{chart_normal, ManifoldChart};

/// Where the first-order surface is trusted. The unstable surface is
/// parameterised over `p <= p_limit, t <= t_limit`, the stable one over
/// `p >= p_limit, t >= t_limit`. Nodes whose displacement exceeds
/// `relative_limit` times their distance to the far saddle are flagged as
/// well, since the expansion degenerates as the chart runs into it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityWindow {
    pub p_limit: Option<f64>,
    pub t_limit: Option<f64>,
    pub relative_limit: f64,
}

impl Default for ValidityWindow {
    fn default() -> Self {
        ValidityWindow {
            p_limit: None,
            t_limit: None,
            relative_limit: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceNode {
    pub p: f64,
    pub alpha: f64,
    pub unperturbed: Vec3,
    pub perturbed: Vec3,
    pub melnikov: f64,
    /// Signed normal displacement `eps M / |f ∧ x_alpha|`.
    pub displacement: f64,
    /// Outside the validity window.
    pub flagged: bool,
}

/// Nodes on an `n_p x n_alpha` grid, row-major with `p` slow. `alpha`
/// columns are periodic, so the mesh is a cylinder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMesh {
    pub kind: SurfaceKind,
    pub t: f64,
    pub eps: f64,
    pub n_p: usize,
    pub n_alpha: usize,
    pub nodes: Vec<SurfaceNode>,
}

impl SurfaceMesh {
    /// Two triangles per cell, wrapping in `alpha`; indices into `nodes`.
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        let na = self.n_alpha;
        let mut out = Vec::with_capacity(2 * (self.n_p - 1) * na);
        for i in 0..self.n_p.saturating_sub(1) {
            for j in 0..na {
                let a = i * na + j;
                let b = i * na + (j + 1) % na;
                let c = (i + 1) * na + (j + 1) % na;
                let d = (i + 1) * na + j;
                out.push([a, b, c]);
                out.push([a, c, d]);
            }
        }
        out
    }
}

fn far_saddle(chart: &dyn ManifoldChart, kind: SurfaceKind) -> Option<Vec3> {
    match kind {
        SurfaceKind::Unstable => chart.downstream_spectrum(),
        SurfaceKind::Stable => chart.upstream_spectrum(),
    }
    .map(|s| s.location)
}

/// Evaluates `x(p, alpha) + eps M (f ∧ x_alpha) / |f ∧ x_alpha|^2` at every
/// node, with `M = M^u` or `M^s` according to `kind`.
#[allow(clippy::too_many_arguments)]
pub fn perturbed_surface_mesh(
    chart: &dyn ManifoldChart,
    kind: SurfaceKind,
    perturbation: &dyn PerturbationModel,
    ps: &[f64],
    n_alpha: usize,
    t: f64,
    eps: f64,
    quad: &QuadratureSpec,
    window: &ValidityWindow,
) -> Result<SurfaceMesh> {
    let far = far_saddle(chart, kind);
    let nodes: Vec<(f64, f64)> = ps
        .iter()
        .flat_map(|&p| (0..n_alpha).map(move |j| (p, j as f64 / n_alpha as f64)))
        .collect();
    let nodes = nodes
        .par_iter()
        .map(|&(p, alpha)| {
            let n = chart_normal(chart, p, alpha)?;
            let base = chart.point(p, alpha);
            let m = match kind {
                SurfaceKind::Unstable => melnikov_unstable(chart, perturbation, p, alpha, t, quad)?,
                SurfaceKind::Stable => melnikov_stable(chart, perturbation, p, alpha, t, quad)?,
            }
            .value;
            let displacement = eps * m / n.norm();
            let perturbed = if eps == 0.0 {
                base
            } else {
                base + n * (eps * m / n.norm_sq())
            };
            let outside = |limit: Option<f64>, x: f64| match (kind, limit) {
                (SurfaceKind::Unstable, Some(l)) => x > l,
                (SurfaceKind::Stable, Some(l)) => x < l,
                _ => false,
            };
            let near_far = far.is_some_and(|s| displacement.abs() > window.relative_limit * (base - s).norm());
            Ok(SurfaceNode {
                p,
                alpha,
                unperturbed: base,
                perturbed,
                melnikov: m,
                displacement,
                flagged: outside(window.p_limit, p) || outside(window.t_limit, t) || near_far,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SurfaceMesh {
        kind,
        t,
        eps,
        n_p: ps.len(),
        n_alpha,
        nodes,
    })
}
