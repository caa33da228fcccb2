//! Zero contours of a [`MelnikovField`] by marching squares.
//!
//! Nodes with `M >= 0` count as positive. Ambiguous (saddle) cells are
//! resolved by the sign of the cell-centre average: a non-negative centre
//! joins the two positive corners. Edge ids wrap in `alpha`, so polylines
//! crossing `alpha = 1` are stitched into one.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fields::PerturbationModel;
use crate::grid::{MelnikovField, MelnikovKind, Provenance};
use crate::melnikov::{MelnikovIntegrand, Weighting};
use crate::quadrature::QuadratureSpec;
use crate::trajectory::ManifoldChart;

/// A grid edge: `Alpha { i, j }` joins nodes `(i, j)` and `(i, j + 1)`
/// (constant `p`), `P { i, j }` joins `(i, j)` and `(i + 1, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "along")]
pub enum GridEdge {
    Alpha { i: usize, j: usize },
    P { i: usize, j: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourVertex {
    pub p: f64,
    /// In `[0, 1)`.
    pub alpha: f64,
    pub edge: GridEdge,
    /// Gradient `(dM/dp, dM/dalpha)` interpolated along the edge.
    pub gradient: (f64, f64),
    pub transverse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub id: usize,
    pub closed: bool,
    pub vertices: Vec<ContourVertex>,
    /// Cells `(i, j)` the polyline passes through, in order.
    pub cells: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSet {
    pub t: f64,
    pub grad_threshold: f64,
    pub polylines: Vec<Polyline>,
    pub source: Provenance,
}

impl ContourSet {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &ContourVertex> {
        self.polylines.iter().flat_map(|l| l.vertices.iter())
    }
}

#[inline]
fn positive(v: f64) -> bool {
    v >= 0.0
}

struct Extractor<'a> {
    field: &'a MelnikovField,
    threshold: f64,
}

impl Extractor<'_> {
    fn ends(&self, e: GridEdge) -> ((usize, usize), (usize, usize)) {
        let na = self.field.n_alpha();
        match e {
            GridEdge::Alpha { i, j } => ((i, j), (i, (j + 1) % na)),
            GridEdge::P { i, j } => ((i, j), (i + 1, j)),
        }
    }

    fn vertex(&self, e: GridEdge) -> ContourVertex {
        let f = self.field;
        let (a, b) = self.ends(e);
        let (fa, fb) = (f.value(a.0, a.1), f.value(b.0, b.1));
        let s = if fa == fb { 0.5 } else { fa / (fa - fb) };
        let lerp = |arr: &[f64]| (1.0 - s) * arr[f.index(a.0, a.1)] + s * arr[f.index(b.0, b.1)];
        let (p, alpha) = match e {
            GridEdge::Alpha { i, j } => (f.p[i], ((j as f64 + s) / f.n_alpha() as f64).rem_euclid(1.0)),
            GridEdge::P { i, j } => (f.p[i] + s * (f.p[i + 1] - f.p[i]), f.alpha[j]),
        };
        let gradient = (lerp(&f.dm_dp), lerp(&f.dm_dalpha));
        ContourVertex {
            p,
            alpha,
            edge: e,
            gradient,
            transverse: gradient.0.abs() + gradient.1.abs() > self.threshold,
        }
    }

    /// Segments of cell `(i, j)` as pairs of crossed edges.
    fn cell_segments(&self, i: usize, j: usize, out: &mut Vec<(GridEdge, GridEdge)>) {
        let f = self.field;
        let j1 = (j + 1) % f.n_alpha();
        // corners counter-clockwise in (alpha, p): (i,j), (i,j1), (i+1,j1), (i+1,j)
        let v = [f.value(i, j), f.value(i, j1), f.value(i + 1, j1), f.value(i + 1, j)];
        let edges = [
            GridEdge::Alpha { i, j },
            GridEdge::P { i, j: j1 },
            GridEdge::Alpha { i: i + 1, j },
            GridEdge::P { i, j },
        ];
        let s: Vec<bool> = v.iter().map(|&x| positive(x)).collect();
        let crossed: Vec<usize> = (0..4).filter(|&k| s[k] != s[(k + 1) % 4]).collect();
        match crossed.len() {
            2 => out.push((edges[crossed[0]], edges[crossed[1]])),
            4 => {
                let centre = positive(v.iter().sum::<f64>() / 4.0);
                // edge k joins corner k and k+1; pair edges around the
                // corners whose sign differs from the centre
                if s[0] != centre {
                    out.push((edges[3], edges[0]));
                    out.push((edges[1], edges[2]));
                } else {
                    out.push((edges[0], edges[1]));
                    out.push((edges[2], edges[3]));
                }
            }
            _ => {}
        }
    }
}

/// Zero contours of `field`. A vertex is transverse iff
/// `|dM/dp| + |dM/dalpha| > grad_threshold` there.
pub fn zero_contours(field: &MelnikovField, grad_threshold: f64) -> ContourSet {
    let ex = Extractor {
        field,
        threshold: grad_threshold,
    };
    let (np, na) = (field.n_p(), field.n_alpha());
    // segment list and edge -> segment incidence
    let mut segs: Vec<((GridEdge, GridEdge), (usize, usize))> = Vec::new();
    let mut buf = Vec::new();
    for i in 0..np - 1 {
        for j in 0..na {
            buf.clear();
            ex.cell_segments(i, j, &mut buf);
            segs.extend(buf.iter().map(|&s| (s, (i, j))));
        }
    }
    let mut incident: HashMap<GridEdge, Vec<usize>> = HashMap::new();
    for (k, ((a, b), _)) in segs.iter().enumerate() {
        incident.entry(*a).or_default().push(k);
        incident.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segs.len()];
    let mut polylines = Vec::new();
    let other = |k: usize, e: GridEdge| if segs[k].0 .0 == e { segs[k].0 .1 } else { segs[k].0 .0 };
    let next_seg = |e: GridEdge, used: &[bool]| incident[&e].iter().copied().find(|&k| !used[k]);
    for start in 0..segs.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segs[start].0;
        // walk forward from b, then backward from a
        let mut fwd = vec![b];
        let mut fwd_cells = vec![segs[start].1];
        let mut e = b;
        let mut closed = false;
        while let Some(k) = next_seg(e, &used) {
            used[k] = true;
            e = other(k, e);
            fwd_cells.push(segs[k].1);
            if e == a {
                closed = true;
                break;
            }
            fwd.push(e);
        }
        let mut back = Vec::new();
        let mut back_cells = Vec::new();
        if !closed {
            let mut e = a;
            while let Some(k) = next_seg(e, &used) {
                used[k] = true;
                e = other(k, e);
                back_cells.push(segs[k].1);
                back.push(e);
            }
        }
        back.reverse();
        back_cells.reverse();
        let edges: Vec<GridEdge> = back.into_iter().chain(std::iter::once(a)).chain(fwd).collect();
        let cells = back_cells.into_iter().chain(fwd_cells).collect();
        polylines.push(Polyline {
            id: polylines.len(),
            closed,
            vertices: edges.into_iter().map(|e| ex.vertex(e)).collect(),
            cells,
        });
    }
    ContourSet {
        t: field.t,
        grad_threshold,
        polylines,
        source: field.provenance.clone(),
    }
}

/// Moves every vertex to a root of the true Melnikov function along its
/// grid edge (Illinois false position, re-evaluating `M` by quadrature).
/// Vertices whose edge values do not bracket a root are left in place.
pub fn refine_contours(
    contours: &mut ContourSet,
    field: &MelnikovField,
    chart: &dyn ManifoldChart,
    perturbation: &dyn PerturbationModel,
    quad: &QuadratureSpec,
    max_iter: usize,
) -> Result<()> {
    let t = field.t;
    let function = field.provenance.function;
    let eval = |p: f64, a: f64| -> Result<f64> {
        let m = MelnikovIntegrand::new(chart, perturbation, p, a, t, Weighting::Exact)?;
        Ok(match function {
            MelnikovKind::Unstable => m.unstable(quad)?,
            MelnikovKind::Stable => m.stable(quad)?,
            MelnikovKind::Heteroclinic => m.heteroclinic(quad)?,
        }
        .value)
    };
    let na = field.n_alpha();
    for line in &mut contours.polylines {
        for v in &mut line.vertices {
            // parameterise the edge by s in [0, 1]
            let (f0, f1, point): (f64, f64, Box<dyn Fn(f64) -> (f64, f64)>) = match v.edge {
                GridEdge::Alpha { i, j } => {
                    let (p, a0) = (field.p[i], field.alpha[j]);
                    let h = 1.0 / na as f64;
                    (field.value(i, j), field.value(i, j + 1), Box::new(move |s| (p, a0 + s * h)))
                }
                GridEdge::P { i, j } => {
                    let (p0, p1, a) = (field.p[i], field.p[i + 1], field.alpha[j]);
                    (field.value(i, j), field.value(i + 1, j), Box::new(move |s| (p0 + s * (p1 - p0), a)))
                }
            };
            if f0 == 0.0 || f1 == 0.0 || (f0 > 0.0) == (f1 > 0.0) {
                continue;
            }
            let (mut s0, mut s1, mut g0, mut g1) = (0.0, 1.0, f0, f1);
            let mut side = 0i8;
            let mut s = 0.5;
            for _ in 0..max_iter {
                s = (s0 * g1 - s1 * g0) / (g1 - g0);
                let (p, a) = point(s);
                let g = eval(p, a)?;
                if g == 0.0 || (s1 - s0).abs() < 1e-14 {
                    break;
                }
                if (g > 0.0) == (g1 > 0.0) {
                    s1 = s;
                    g1 = g;
                    if side == -1 {
                        g0 *= 0.5;
                    }
                    side = -1;
                } else {
                    s0 = s;
                    g0 = g;
                    if side == 1 {
                        g1 *= 0.5;
                    }
                    side = 1;
                }
            }
            let (p, a) = point(s);
            v.p = p;
            v.alpha = a.rem_euclid(1.0);
        }
    }
    Ok(())
}
