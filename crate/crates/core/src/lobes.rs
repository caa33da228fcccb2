//! Sign-definite regions of a [`MelnikovField`] and their leading-order
//! lobe volumes `eps ∬ |M| dp dalpha`.
//!
//! Regions are edge-connected components of grid nodes sharing the sign
//! of `M`. Nodes with `|M| <= 1e-12 max|M|` are zeros and belong to no
//! region, so zero lines lying on grid lines separate regions. Diagonal
//! neighbours never connect: an ambiguous cell is where two zero curves
//! cross at grid scale and the lobes pinch off there.
//!
//! For volumes each cell is split into four triangles by its centre, which
//! carries the average of the corner values, and `M` is integrated exactly
//! as a piecewise-linear function clipped at its zero set.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::contour::ContourSet;
use crate::error::{Error, Result};
use crate::grid::MelnikovField;

/// Relative size below which a node value counts as zero.
pub const ZERO_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LobeReport {
    pub region_id: usize,
    pub sign: Sign,
    /// Cells `(i, j)` with at least one corner in the region.
    pub cells: Vec<(usize, usize)>,
    /// Member cells that the zero set passes through.
    pub boundary_cells: Vec<(usize, usize)>,
    pub boundary_contours: Vec<usize>,
    /// Touches the first or last `p` row, so the region may continue past
    /// the grid and its volume is unreliable.
    pub unbounded: bool,
    pub p_extent: (f64, f64),
    pub volume_leading: Option<f64>,
    pub volume_error_estimate: Option<f64>,
    /// Richardson extrapolation of the fine and coarse volumes.
    pub volume_extrapolated: Option<f64>,
    pub t: f64,
    pub eps: Option<f64>,
}

/// Region labels of the grid nodes.
#[derive(Debug, Clone)]
pub struct Segmentation {
    n_alpha: usize,
    labels: Vec<Option<usize>>,
    signs: Vec<Sign>,
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

fn sign_of(v: f64) -> Option<Sign> {
    if v > 0.0 {
        Some(Sign::Positive)
    } else if v < 0.0 {
        Some(Sign::Negative)
    } else {
        None
    }
}

fn centre_value(f: &MelnikovField, i: usize, j: usize) -> f64 {
    0.25 * (f.value(i, j) + f.value(i, j + 1) + f.value(i + 1, j) + f.value(i + 1, j + 1))
}

impl Segmentation {
    pub fn new(f: &MelnikovField) -> Self {
        let (np, na) = (f.n_p(), f.n_alpha());
        let snap = ZERO_SNAP * f.max_abs();
        let node_sign: Vec<Option<Sign>> = f
            .values
            .iter()
            .map(|&v| if v.abs() <= snap { None } else { sign_of(v) })
            .collect();
        let mut dsu = Dsu((0..np * na).collect());
        let node = |i: usize, j: usize| i * na + j % na;
        for i in 0..np {
            for j in 0..na {
                let k = node(i, j);
                if node_sign[k].is_none() {
                    continue;
                }
                let right = node(i, j + 1);
                if node_sign[right] == node_sign[k] {
                    dsu.union(k, right);
                }
                if i + 1 < np && node_sign[node(i + 1, j)] == node_sign[k] {
                    dsu.union(k, node(i + 1, j));
                }
            }
        }
        let mut ids = BTreeMap::new();
        let mut labels = vec![None; np * na];
        let mut signs = Vec::new();
        for k in 0..np * na {
            let Some(s) = node_sign[k] else { continue };
            let r = dsu.find(k);
            let next = ids.len();
            let id = *ids.entry(r).or_insert_with(|| {
                signs.push(s);
                next
            });
            labels[k] = Some(id);
        }
        Segmentation {
            n_alpha: na,
            labels,
            signs,
        }
    }

    pub fn region_count(&self) -> usize {
        self.signs.len()
    }

    /// Region of node `(i, j)`, `None` for zero nodes.
    pub fn node_label(&self, i: usize, j: usize) -> Option<usize> {
        self.labels[i * self.n_alpha + j % self.n_alpha]
    }

    pub fn sign(&self, region: usize) -> Sign {
        self.signs[region]
    }

    /// Region containing `(p, alpha)`, judged by the sign of the
    /// interpolant there.
    pub fn label_at(&self, f: &MelnikovField, p: f64, alpha: f64) -> Option<usize> {
        let (i, u) = f.locate_p(p)?;
        let a = alpha.rem_euclid(1.0) * self.n_alpha as f64;
        let j = (a.floor() as usize).min(self.n_alpha - 1);
        let v = a - j as f64;
        let (x, y) = (v - 0.5, u - 0.5);
        let k = if y <= -x.abs() {
            0
        } else if x >= y.abs() {
            1
        } else if y >= x.abs() {
            2
        } else {
            3
        };
        let tri = &triangles(f, i, j)[k];
        let [(x0, y0), (x1, y1)] = [tri.a, tri.b];
        let (x2, y2) = (0.5, 0.5);
        let det = (y1 - y2) * (x0 - x2) + (x2 - x1) * (y0 - y2);
        let l0 = ((y1 - y2) * (v - x2) + (x2 - x1) * (u - y2)) / det;
        let l1 = ((y2 - y0) * (v - x2) + (x0 - x2) * (u - y2)) / det;
        let val = l0 * tri.values[0] + l1 * tri.values[1] + (1.0 - l0 - l1) * tri.values[2];
        self.owner(f, i, j, tri, sign_of(val)?)
    }

    /// Region receiving the `want`-signed part of a triangle: a corner of
    /// the triangle with that sign, else any such corner of the cell.
    fn owner(&self, f: &MelnikovField, i: usize, j: usize, tri: &Tri, want: Sign) -> Option<usize> {
        let of = |c: (usize, usize)| {
            self.node_label(c.0, c.1)
                .filter(|_| sign_of(f.value(c.0, c.1)) == Some(want))
        };
        tri.corners
            .iter()
            .find_map(|&c| of(c))
            .or_else(|| [(i, j), (i, j + 1), (i + 1, j), (i + 1, j + 1)].into_iter().find_map(of))
    }
}

/// One of the four triangles of a cell. `a` and `b` are its corner
/// offsets `(alpha, p)` in cell units; the third vertex is the centre.
struct Tri {
    a: (f64, f64),
    b: (f64, f64),
    corners: [(usize, usize); 2],
    values: [f64; 3],
}

fn triangles(f: &MelnikovField, i: usize, j: usize) -> [Tri; 4] {
    let c = centre_value(f, i, j);
    let n = [(i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j)];
    let off = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
    std::array::from_fn(|k| {
        let (ca, cb) = (n[k], n[(k + 1) % 4]);
        Tri {
            a: off[k],
            b: off[(k + 1) % 4],
            corners: [ca, cb],
            values: [f.value(ca.0, ca.1), f.value(cb.0, cb.1), c],
        }
    })
}

/// `∫ max(f, 0)` over a triangle of the given area with linear `f`.
fn positive_part(area: f64, v: [f64; 3]) -> f64 {
    let pos: Vec<f64> = v.iter().copied().filter(|&x| x > 0.0).collect();
    match pos.len() {
        0 => 0.0,
        3 => area * (v[0] + v[1] + v[2]) / 3.0,
        1 => {
            let a = pos[0];
            let others: Vec<f64> = v.iter().copied().filter(|&x| x <= 0.0).collect();
            area * a * a * a / (3.0 * (a - others[0]) * (a - others[1]))
        }
        _ => {
            let neg = v.iter().copied().find(|&x| x <= 0.0).unwrap();
            let others: Vec<f64> = pos;
            let neg_part = area * neg * neg * neg / (3.0 * (neg - others[0]) * (neg - others[1]));
            area * (v[0] + v[1] + v[2]) / 3.0 - neg_part
        }
    }
}

/// `∬ |M|` over every region, indexed by region id.
fn region_integrals(f: &MelnikovField, seg: &Segmentation) -> Vec<f64> {
    let mut out = vec![0.0; seg.region_count()];
    let ha = f.alpha_step();
    for i in 0..f.n_p() - 1 {
        let area = (f.p[i + 1] - f.p[i]) * ha / 4.0;
        for j in 0..f.n_alpha() {
            for t in triangles(f, i, j) {
                let pos = positive_part(area, t.values);
                let neg = positive_part(area, t.values.map(|x| -x));
                for (want, part) in [(Sign::Positive, pos), (Sign::Negative, neg)] {
                    if part > 0.0 {
                        if let Some(r) = seg.owner(f, i, j, &t, want) {
                            out[r] += part;
                        }
                    }
                }
            }
        }
    }
    out
}

fn cell_labels(seg: &Segmentation, i: usize, j: usize) -> Vec<usize> {
    [(i, j), (i, j + 1), (i + 1, j), (i + 1, j + 1)]
        .into_iter()
        .filter_map(|(a, b)| seg.node_label(a, b))
        .collect()
}

/// Segments `field` into sign-definite regions; volumes are left empty.
pub fn lobe_regions(field: &MelnikovField, contours: &ContourSet) -> Vec<LobeReport> {
    let seg = Segmentation::new(field);
    let (np, na) = (field.n_p(), field.n_alpha());
    let mut cells: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); seg.region_count()];
    let mut boundary: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); seg.region_count()];
    let mut unbounded = vec![false; seg.region_count()];
    let mut extent = vec![(f64::INFINITY, f64::NEG_INFINITY); seg.region_count()];
    for i in 0..np - 1 {
        for j in 0..na {
            let labels = cell_labels(&seg, i, j);
            let mixed = labels.len() < 4 || labels.iter().any(|&l| seg.sign(l) != seg.sign(labels[0]));
            for &l in &labels {
                cells[l].insert((i, j));
                if mixed {
                    boundary[l].insert((i, j));
                }
            }
        }
    }
    for i in 0..np {
        for j in 0..na {
            let Some(l) = seg.node_label(i, j) else { continue };
            if i == 0 || i == np - 1 {
                unbounded[l] = true;
            }
            extent[l].0 = extent[l].0.min(field.p[i]);
            extent[l].1 = extent[l].1.max(field.p[i]);
        }
    }
    let mut contour_cells: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for line in &contours.polylines {
        for &c in &line.cells {
            contour_cells.entry(c).or_default().push(line.id);
        }
    }
    (0..seg.region_count())
        .map(|r| {
            let ids: BTreeSet<usize> = boundary[r]
                .iter()
                .filter_map(|c| contour_cells.get(c))
                .flatten()
                .copied()
                .collect();
            LobeReport {
                region_id: r,
                sign: seg.sign(r),
                cells: cells[r].iter().copied().collect(),
                boundary_cells: boundary[r].iter().copied().collect(),
                boundary_contours: ids.into_iter().collect(),
                unbounded: unbounded[r],
                p_extent: extent[r],
                volume_leading: None,
                volume_error_estimate: None,
                volume_extrapolated: None,
                t: field.t,
                eps: None,
            }
        })
        .collect()
}

/// `∬ |M|` over one region of `field` (no `eps` factor).
pub fn region_integral(field: &MelnikovField, region_id: usize) -> Result<f64> {
    let seg = Segmentation::new(field);
    region_integrals(field, &seg)
        .get(region_id)
        .copied()
        .ok_or_else(|| Error::InvalidParameter(format!("no region {region_id} in this field")))
}

/// Every other `p` row and `alpha` column of `field`.
fn coarsen(field: &MelnikovField) -> Result<MelnikovField> {
    let rows: Vec<usize> = (0..field.n_p()).step_by(2).collect();
    let na = field.n_alpha() / 2;
    let p = rows.iter().map(|&i| field.p[i]).collect();
    let values = rows
        .iter()
        .flat_map(|&i| (0..na).map(move |j| field.value(i, 2 * j)))
        .collect::<Vec<_>>();
    let errors = vec![0.0; values.len()];
    MelnikovField::from_values(field.t, p, na, values, errors, field.provenance.clone())
}

/// Fills `volume_leading = eps ∬_R |M|` and an error estimate from the
/// difference with the same region on the grid coarsened by two
/// (`|fine - coarse| / 3`, the second-order Richardson estimate), along
/// with the extrapolated volume `fine + (fine - coarse) / 3`.
pub fn lobe_volume(field: &MelnikovField, region: &LobeReport, eps: f64) -> Result<LobeReport> {
    if region.unbounded {
        return Err(Error::InvalidParameter(format!(
            "region {} touches the p boundary of the grid; its volume is unreliable",
            region.region_id
        )));
    }
    if !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("eps must be finite, got {eps}")));
    }
    let seg = Segmentation::new(field);
    let fine = region_integrals(field, &seg)[region.region_id];
    let coarse = coarse_integral(field, &seg, region.region_id);
    let mut out = region.clone();
    out.volume_leading = Some(eps.abs() * fine);
    out.volume_error_estimate = coarse.map(|c| eps.abs() * (fine - c).abs() / 3.0);
    out.volume_extrapolated = coarse.map(|c| eps.abs() * (fine + (fine - c) / 3.0));
    out.eps = Some(eps);
    Ok(out)
}

/// Integral of the matching region on the coarsened grid, matched through
/// the region's largest-|M| node at even indices.
fn coarse_integral(field: &MelnikovField, seg: &Segmentation, region: usize) -> Option<f64> {
    if !field.n_alpha().is_multiple_of(2) || field.n_p() < 16 || field.n_alpha() < 16 {
        return None;
    }
    let coarse = coarsen(field).ok()?;
    let cseg = Segmentation::new(&coarse);
    let mut best: Option<(f64, usize, usize)> = None;
    for i in (0..field.n_p()).step_by(2) {
        for j in (0..field.n_alpha()).step_by(2) {
            if seg.node_label(i, j) == Some(region) {
                let v = field.value(i, j).abs();
                if best.is_none_or(|b| v > b.0) {
                    best = Some((v, i / 2, j / 2));
                }
            }
        }
    }
    let (_, ci, cj) = best?;
    Some(region_integrals(&coarse, &cseg)[cseg.node_label(ci, cj)?])
}
