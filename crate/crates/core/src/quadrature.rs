//! Globally adaptive quadrature on finite intervals plus truncation of
//! exponentially decaying tails.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy")]
pub enum Truncation {
    /// Cut every infinite tail at this distance from `p`.
    Fixed { radius: f64 },
    /// March out in windows of width `1/rate` until the integrand envelope
    /// drops below `abs_tol`.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PanelRule {
    AdaptiveSimpson,
    GaussLegendre32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub truncation: Truncation,
    pub rule: PanelRule,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            truncation: Truncation::Adaptive,
            rule: PanelRule::AdaptiveSimpson,
            max_subdivisions: 50_000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quadrature tolerances must be positive (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if let Truncation::Fixed { radius } = self.truncation {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(Error::InvalidParameter(format!("truncation radius {radius} must be positive")));
            }
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter("max_subdivisions must be positive".into()));
        }
        Ok(())
    }

    /// Same settings with both tolerances scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        QuadratureSpec {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub subdivisions: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// Rule-specific cached samples.
    cache: [f64; 5],
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Simpson panel on `[a, b]` from samples at a, a+h/4, a+h/2, a+3h/4, b.
fn simpson_panel(a: f64, b: f64, s: [f64; 5]) -> Panel {
    let h = b - a;
    let coarse = h / 6.0 * (s[0] + 4.0 * s[2] + s[4]);
    let fine = h / 12.0 * (s[0] + 4.0 * s[1] + 2.0 * s[2] + 4.0 * s[3] + s[4]);
    Panel {
        a,
        b,
        value: fine + (fine - coarse) / 15.0,
        error: (fine - coarse).abs() / 15.0,
        cache: s,
    }
}

fn gauss_legendre_32() -> &'static ([f64; 32], [f64; 32]) {
    static RULE: OnceLock<([f64; 32], [f64; 32])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = 32;
        let mut x = [0.0; 32];
        let mut w = [0.0; 32];
        for i in 0..n / 2 {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let wi = 2.0 / ((1.0 - z * z) * dp * dp);
            x[i] = -z;
            x[n - 1 - i] = z;
            w[i] = wi;
            w[n - 1 - i] = wi;
        }
        (x, w)
    })
}

fn gauss_legendre(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, evals: &mut usize) -> f64 {
    let (x, w) = gauss_legendre_32();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut sum = 0.0;
    for i in 0..32 {
        sum += w[i] * f(c + h * x[i]);
    }
    *evals += 32;
    sum * h
}

/// A Gauss–Legendre panel stores its value as the sum over two halves and
/// the difference to the whole-panel rule as its error.
fn gl_panel(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, whole: f64, evals: &mut usize) -> Panel {
    let m = 0.5 * (a + b);
    let l = gauss_legendre(f, a, m, evals);
    let r = gauss_legendre(f, m, b, evals);
    Panel {
        a,
        b,
        value: l + r,
        error: (whole - l - r).abs(),
        cache: [l, r, 0.0, 0.0, 0.0],
    }
}

/// Integrates `f` over `[a, b]` with at least `min_panels` initial panels,
/// refining the panel with the largest error estimate until the total is
/// below `max(abs_tol, rel_tol * |int f|)`.
pub fn integrate_adaptive(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
    min_panels: usize,
) -> Result<QuadResult> {
    spec.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter("integration limits must be finite".into()));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
            subdivisions: 0,
        });
    }
    let n0 = min_panels.max(1);
    let mut evals = 0usize;
    let mut heap = BinaryHeap::with_capacity(4 * n0);
    match spec.rule {
        PanelRule::AdaptiveSimpson => {
            let h = (b - a) / n0 as f64;
            let mut left = f(a);
            evals += 1;
            for i in 0..n0 {
                let pa = a + h * i as f64;
                let pb = if i + 1 == n0 { b } else { a + h * (i + 1) as f64 };
                let hh = pb - pa;
                let s1 = f(pa + 0.25 * hh);
                let s2 = f(pa + 0.5 * hh);
                let s3 = f(pa + 0.75 * hh);
                let s4 = f(pb);
                evals += 4;
                heap.push(simpson_panel(pa, pb, [left, s1, s2, s3, s4]));
                left = s4;
            }
        }
        PanelRule::GaussLegendre32 => {
            let h = (b - a) / n0 as f64;
            for i in 0..n0 {
                let pa = a + h * i as f64;
                let pb = if i + 1 == n0 { b } else { a + h * (i + 1) as f64 };
                let whole = gauss_legendre(f, pa, pb, &mut evals);
                heap.push(gl_panel(f, pa, pb, whole, &mut evals));
            }
        }
    }

    let mut subdivisions = 0usize;
    loop {
        let (value, error) = heap.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.value, acc.1 + p.error));
        let target = spec.abs_tol.max(spec.rel_tol * value.abs());
        if !value.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                subdivisions,
                error: f64::NAN,
            });
        }
        if error <= target {
            return Ok(QuadResult {
                value,
                error_estimate: error,
                evaluations: evals,
                subdivisions,
            });
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::QuadratureNonConvergence { subdivisions, error });
        }
        // refine a batch of the worst panels before re-summing
        let batch = (heap.len() / 8).max(1);
        for _ in 0..batch {
            let worst = heap.pop().expect("non-empty");
            let m = 0.5 * (worst.a + worst.b);
            match spec.rule {
                PanelRule::AdaptiveSimpson => {
                    let s = worst.cache;
                    let ql = 0.25 * (m - worst.a);
                    let l1 = f(worst.a + ql);
                    let l3 = f(worst.a + 3.0 * ql);
                    let r1 = f(m + ql);
                    let r3 = f(m + 3.0 * ql);
                    evals += 4;
                    heap.push(simpson_panel(worst.a, m, [s[0], l1, s[1], l3, s[2]]));
                    heap.push(simpson_panel(m, worst.b, [s[2], r1, s[3], r3, s[4]]));
                }
                PanelRule::GaussLegendre32 => {
                    let [l, r, ..] = worst.cache;
                    heap.push(gl_panel(f, worst.a, m, l, &mut evals));
                    heap.push(gl_panel(f, m, worst.b, r, &mut evals));
                }
            }
            subdivisions += 1;
        }
    }
}

/// Envelope of `|f|` over `[lo, hi]` from `samples` evenly spaced points.
fn envelope(f: &mut dyn FnMut(f64) -> f64, lo: f64, hi: f64, samples: usize) -> f64 {
    (0..samples)
        .map(|i| f(lo + (hi - lo) * i as f64 / (samples - 1) as f64).abs())
        .fold(0.0, f64::max)
}

/// Outcome of a tail search: how far from `p` to integrate and the
/// envelope of the integrand in the last window examined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailCut {
    pub radius: f64,
    pub envelope: f64,
    /// Estimated size of the discarded tail.
    pub remainder: f64,
}

/// Finds how far from `p` the integral in direction `side` (+1 or -1)
/// must extend. `rate` is the expected exponential decay rate, `min_reach`
/// a distance that is always covered, and `limit` the largest admissible
/// distance (end of the chart domain).
pub fn find_tail_cut(
    f: &mut dyn FnMut(f64) -> f64,
    p: f64,
    side: f64,
    rate: f64,
    min_reach: f64,
    limit: f64,
    spec: &QuadratureSpec,
) -> Result<TailCut> {
    let rate = if rate > 0.0 && rate.is_finite() { rate } else { 1.0 };
    let w = 1.0 / rate;
    if let Truncation::Fixed { radius } = spec.truncation {
        let radius = radius.min(limit);
        let env = envelope(f, p + side * (radius - w).max(0.0), p + side * radius, 16);
        return Ok(TailCut {
            radius,
            envelope: env,
            remainder: env * w,
        });
    }
    let cap = (min_reach.max(0.0) + 60.0 / rate).min(limit);
    let mut prev = f64::INFINITY;
    let mut k = 1usize;
    loop {
        let hi = (k as f64 * w).min(cap);
        let lo = ((k - 1) as f64 * w).min(hi);
        let env = envelope(f, p + side * lo, p + side * hi, 8);
        // a small first window alone proves nothing: the integrand may still
        // grow further out
        let decaying = k >= 2 && env <= prev;
        if hi >= min_reach && env < spec.abs_tol && decaying {
            return Ok(TailCut {
                radius: hi,
                envelope: env,
                remainder: env * w,
            });
        }
        if hi >= cap {
            if env < spec.abs_tol {
                return Ok(TailCut {
                    radius: hi,
                    envelope: env,
                    remainder: env * w,
                });
            }
            return Err(Error::NonDecaying { radius: hi, envelope: env });
        }
        prev = env;
        k += 1;
    }
}
