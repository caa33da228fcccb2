use std::f64::consts::TAU;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{FieldModel, SaddleCase, SaddleSpectrum};
use crate::geometry::Vec3;

use super::integrator::{integrate_until, IntegratorOptions, OdeSystem, Trajectory};
use super::interp::{AlphaInterpolation, PeriodicInterpolator};
use super::{ChartDomain, ChartKind, ManifoldChart, Orientation};

/// Scalar function whose zero set fixes `p = 0` on every trajectory.
pub type Section = Arc<dyn Fn(Vec3) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct GenericChartOptions {
    pub kind: ChartKind,
    /// Radius of the seed ring around the saddle.
    pub delta: f64,
    /// Number of seeds (even).
    pub n_alpha: usize,
    /// Extent of the traced chart beyond `p = 0`: the domain is
    /// `(-inf, p_extent]` for unstable charts and `[-p_extent, inf)` for
    /// stable ones.
    pub p_extent: f64,
    pub section: Option<Section>,
    /// Rotates the seed ring by this fraction of a turn.
    pub alpha_origin: f64,
    pub orientation: Orientation,
    pub interpolation: AlphaInterpolation,
    pub tol: f64,
    /// Give up on reaching the section after this much flow time.
    pub max_time: f64,
    /// Arc length from the saddle that defines `p = 0` without a section.
    pub arc_length_origin: f64,
    /// Saddle at the far end, for heteroclinic charts.
    pub downstream: Option<SaddleSpectrum>,
}

impl Default for GenericChartOptions {
    fn default() -> Self {
        GenericChartOptions {
            kind: ChartKind::Unstable,
            delta: 1e-3,
            n_alpha: 128,
            p_extent: 3.0,
            section: None,
            alpha_origin: 0.0,
            orientation: Orientation::Standard,
            interpolation: AlphaInterpolation::Trigonometric,
            tol: 1e-12,
            max_time: 200.0,
            arc_length_origin: 1.0,
            downstream: None,
        }
    }
}

impl std::fmt::Debug for GenericChartOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GenericChartOptions")
            .field("kind", &self.kind)
            .field("delta", &self.delta)
            .field("n_alpha", &self.n_alpha)
            .field("p_extent", &self.p_extent)
            .field("section", &self.section.is_some())
            .field("alpha_origin", &self.alpha_origin)
            .field("orientation", &self.orientation)
            .field("interpolation", &self.interpolation)
            .field("tol", &self.tol)
            .finish()
    }
}

/// Chart built by shooting from a ring of seeds around a saddle.
pub struct GenericChart {
    field: Arc<dyn FieldModel>,
    kind: ChartKind,
    saddle: SaddleSpectrum,
    downstream: Option<SaddleSpectrum>,
    /// +1 when chart `p` runs with trajectory time away from the saddle.
    direction: f64,
    plane: [Vec3; 2],
    /// Restriction of the Jacobian to the seed plane, in plane coordinates.
    plane_matrix: [[f64; 2]; 2],
    saddle_divergence: f64,
    seeds: Vec<[f64; 2]>,
    trajectories: Vec<Trajectory>,
    /// Trajectory time at which each trajectory reaches `p = 0`.
    origin_times: Vec<f64>,
    interp: PeriodicInterpolator,
    domain: ChartDomain,
    delta: f64,
}

/// Unstable chart of a Case1 saddle with default options.
pub fn generic_chart_from_saddle(
    field: Arc<dyn FieldModel>,
    spectrum: &SaddleSpectrum,
    delta: f64,
    section: Option<Section>,
    p_max: f64,
) -> Result<GenericChart> {
    GenericChart::build(
        field,
        spectrum,
        GenericChartOptions {
            delta,
            section,
            p_extent: p_max,
            ..Default::default()
        },
    )
}

/// `exp(B s)` for a 2x2 matrix.
fn expm2(b: &[[f64; 2]; 2], s: f64) -> [[f64; 2]; 2] {
    let tr = b[0][0] + b[1][1];
    let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    let half = 0.5 * tr;
    let disc = half * half - det;
    let scale = (half * s).exp();
    let (c, sinc) = if disc > 1e-14 {
        let mu = disc.sqrt();
        ((mu * s).cosh(), (mu * s).sinh() / mu)
    } else if disc < -1e-14 {
        let nu = (-disc).sqrt();
        ((nu * s).cos(), (nu * s).sin() / nu)
    } else {
        (1.0, s)
    };
    // exp(Bs) = e^{tr s/2} [c I + sinc (B - tr/2 I)]
    [
        [scale * (c + sinc * (b[0][0] - half)), scale * sinc * b[0][1]],
        [scale * sinc * b[1][0], scale * (c + sinc * (b[1][1] - half))],
    ]
}

impl GenericChart {
    pub fn build(
        field: Arc<dyn FieldModel>,
        spectrum: &SaddleSpectrum,
        opts: GenericChartOptions,
    ) -> Result<Self> {
        let (needed, direction) = match opts.kind {
            ChartKind::Unstable | ChartKind::Heteroclinic => (SaddleCase::Case1, 1.0),
            ChartKind::Stable => (SaddleCase::Case2, -1.0),
        };
        if spectrum.case != needed {
            return Err(Error::SpectrumMismatch(format!(
                "{} chart needs a {needed:?} saddle, got {:?}",
                opts.kind, spectrum.case
            )));
        }
        if let Some(b) = &opts.downstream {
            if b.case != SaddleCase::Case2 || opts.kind != ChartKind::Heteroclinic {
                return Err(Error::SpectrumMismatch(
                    "a downstream saddle must be Case2 and needs a heteroclinic chart".into(),
                ));
            }
        }
        if !(opts.delta > 0.0 && opts.delta < 1.0) {
            return Err(Error::InvalidParameter(format!("seed radius {} not in (0, 1)", opts.delta)));
        }
        if opts.n_alpha < 8 || !opts.n_alpha.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "seed count {} must be even and at least 8",
                opts.n_alpha
            )));
        }
        if !(opts.p_extent >= 0.0 && opts.p_extent.is_finite()) {
            return Err(Error::InvalidParameter("p extent must be finite and non-negative".into()));
        }

        let a = spectrum.location;
        let rot = TAU * opts.alpha_origin;
        let (e1, mut e2) = {
            let [u, v] = spectrum.plane;
            (u * rot.cos() + v * rot.sin(), v * rot.cos() - u * rot.sin())
        };
        if opts.orientation == Orientation::Reversed {
            e2 = -e2;
        }
        let jac = spectrum.jacobian;
        let plane_matrix = [
            [e1.dot(jac.mul_vec(e1)), e1.dot(jac.mul_vec(e2))],
            [e2.dot(jac.mul_vec(e1)), e2.dot(jac.mul_vec(e2))],
        ];
        let n = opts.n_alpha;
        let seeds: Vec<[f64; 2]> = (0..n)
            .map(|j| {
                let psi = TAU * j as f64 / n as f64;
                [opts.delta * psi.cos(), opts.delta * psi.sin()]
            })
            .collect();

        let system = OdeSystem::unperturbed(field.as_ref());
        let iopts = IntegratorOptions::with_tol(opts.tol);
        let mut trajectories = Vec::with_capacity(n);
        let mut origin_times = Vec::with_capacity(n);
        for (j, s) in seeds.iter().enumerate() {
            let x0 = a + e1 * s[0] + e2 * s[1];
            let t_limit = direction * opts.max_time;
            let mut traj = match &opts.section {
                Some(section) => {
                    let sign0 = section(x0).signum();
                    integrate_until(&system, x0, 0.0, t_limit, &iopts, |tr| {
                        section(tr.final_state()).signum() != sign0
                    })?
                }
                None => {
                    let mut len = opts.delta;
                    let mut last = x0;
                    let target = opts.arc_length_origin;
                    integrate_until(&system, x0, 0.0, t_limit, &iopts, |tr| {
                        let x = tr.final_state();
                        len += (x - last).norm();
                        last = x;
                        len >= target
                    })?
                }
            };
            let s0 = match &opts.section {
                Some(section) => section_crossing(&traj, section.as_ref())
                    .ok_or(Error::SectionNotReached { index: j })?,
                None => arc_length_crossing(&traj, opts.delta, opts.arc_length_origin)
                    .ok_or(Error::SectionNotReached { index: j })?,
            };
            traj.continue_to(&system, s0 + direction * opts.p_extent, &iopts)?;
            trajectories.push(traj);
            origin_times.push(s0);
        }

        let domain = if direction > 0.0 {
            ChartDomain {
                p_min: f64::NEG_INFINITY,
                p_max: opts.p_extent,
                orientation: opts.orientation,
            }
        } else {
            ChartDomain {
                p_min: -opts.p_extent,
                p_max: f64::INFINITY,
                orientation: opts.orientation,
            }
        };
        let chart = GenericChart {
            saddle_divergence: field.divergence(a),
            field,
            kind: opts.kind,
            saddle: spectrum.clone(),
            downstream: opts.downstream.clone(),
            direction,
            plane: [e1, e2],
            plane_matrix,
            seeds,
            trajectories,
            origin_times,
            interp: PeriodicInterpolator::new(n, opts.interpolation),
            domain,
            delta: opts.delta,
        };
        chart.check_foliation()?;
        Ok(chart)
    }

    pub fn n_alpha(&self) -> usize {
        self.trajectories.len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn saddle(&self) -> &SaddleSpectrum {
        &self.saddle
    }

    /// Flow time from seed `j` to its `p = 0` crossing (negative for stable charts).
    pub fn origin_time(&self, j: usize) -> f64 {
        self.origin_times[j]
    }

    /// Position and divergence potential of trajectory `j` at chart time `p`.
    fn node_state(&self, j: usize, p: f64) -> (Vec3, f64) {
        let s = p + self.origin_times[j];
        let traj = &self.trajectories[j];
        if self.direction * s >= 0.0 {
            let s = if self.direction > 0.0 {
                s.min(traj.end_time())
            } else {
                s.max(traj.end_time())
            };
            return traj.state_at(s).expect("clamped into the trajectory");
        }
        // linear flow inside the seed ring
        let e = expm2(&self.plane_matrix, s);
        let [u, v] = self.seeds[j];
        let c1 = e[0][0] * u + e[0][1] * v;
        let c2 = e[1][0] * u + e[1][1] * v;
        (
            self.saddle.location + self.plane[0] * c1 + self.plane[1] * c2,
            self.saddle_divergence * s,
        )
    }

    fn interpolate(&self, p: f64, alpha: f64) -> (Vec3, Vec3, f64) {
        let n = self.n_alpha();
        let mut w = vec![0.0; n];
        let mut dw = vec![0.0; n];
        self.interp.weights(alpha, &mut w, &mut dw);
        let mut x = Vec3::ZERO;
        let mut xa = Vec3::ZERO;
        let mut phi = 0.0;
        for j in 0..n {
            let (xj, dj) = self.node_state(j, p);
            x += xj * w[j];
            xa += xj * dw[j];
            phi += dj * w[j];
        }
        (x, xa, phi)
    }

    /// Adjacent trajectories must keep a consistent normal orientation.
    fn check_foliation(&self) -> Result<()> {
        let n = self.n_alpha();
        let p_lo = -self.origin_times.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
        let (lo, hi) = if self.direction > 0.0 {
            (p_lo, self.domain.p_max)
        } else {
            (self.domain.p_min, -p_lo)
        };
        let samples = 41;
        for i in 0..samples {
            let p = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
            let pts: Vec<Vec3> = (0..n).map(|j| self.node_state(j, p).0).collect();
            let normals: Vec<Vec3> = (0..n)
                .map(|j| {
                    let chord = pts[(j + 1) % n] - pts[(j + n - 1) % n];
                    self.field.velocity(pts[j]).wedge(chord)
                })
                .collect();
            for j in 0..n {
                let a = normals[j];
                let b = normals[(j + 1) % n];
                if !(a.norm() > 0.0) || a.dot(b) <= 0.0 {
                    return Err(Error::Foliation(format!(
                        "normal orientation flips between seeds {j} and {} at p = {p}",
                        (j + 1) % n
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Time of the first sign change of `section` along `traj`, refined by
/// bisection on the dense output.
fn section_crossing(traj: &Trajectory, section: &(dyn Fn(Vec3) -> f64 + Send + Sync)) -> Option<f64> {
    let times = traj.times();
    let sign0 = section(traj.sample(0).0).signum();
    let k = (1..times.len()).find(|&k| section(traj.sample(k).0).signum() != sign0)?;
    let (mut lo, mut hi) = (times[k - 1], times[k]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let x = traj.position_at(mid).ok()?;
        if section(x).signum() == sign0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Time at which the polygonal arc length (starting at `offset`) reaches
/// `target`, sampling the dense output eight times per step.
fn arc_length_crossing(traj: &Trajectory, offset: f64, target: f64) -> Option<f64> {
    let times = traj.times();
    let mut len = offset;
    if len >= target {
        return Some(times[0]);
    }
    let mut last = traj.sample(0).0;
    let mut last_t = times[0];
    for k in 1..times.len() {
        for m in 1..=8 {
            let t = times[k - 1] + (times[k] - times[k - 1]) * m as f64 / 8.0;
            let x = traj.position_at(t).ok()?;
            let d = (x - last).norm();
            if len + d >= target {
                let frac = (target - len) / d;
                return Some(last_t + frac * (t - last_t));
            }
            len += d;
            last = x;
            last_t = t;
        }
    }
    None
}

impl ManifoldChart for GenericChart {
    fn id(&self) -> String {
        format!(
            "generic-{}[{}; delta={}, n_alpha={}]",
            self.kind,
            self.field.name(),
            self.delta,
            self.n_alpha()
        )
    }

    fn kind(&self) -> ChartKind {
        self.kind
    }

    fn field(&self) -> &dyn FieldModel {
        self.field.as_ref()
    }

    fn domain(&self) -> ChartDomain {
        self.domain
    }

    fn point(&self, p: f64, alpha: f64) -> Vec3 {
        self.interpolate(p, alpha).0
    }

    fn alpha_partial(&self, p: f64, alpha: f64) -> Vec3 {
        self.interpolate(p, alpha).1
    }

    fn divergence_potential(&self, p: f64, alpha: f64) -> f64 {
        self.interpolate(p, alpha).2
    }

    fn sample(&self, p: f64, alpha: f64) -> super::ChartSample {
        let (point, alpha_partial, divergence_potential) = self.interpolate(p, alpha);
        super::ChartSample {
            point,
            velocity: self.field.velocity(point),
            alpha_partial,
            divergence_potential,
        }
    }

    fn upstream_spectrum(&self) -> Option<&SaddleSpectrum> {
        (self.direction > 0.0).then_some(&self.saddle)
    }

    fn downstream_spectrum(&self) -> Option<&SaddleSpectrum> {
        if self.direction < 0.0 {
            Some(&self.saddle)
        } else {
            self.downstream.as_ref()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{classify_saddle, Contracted, HillVortex};
    use crate::trajectory::{chart_normal, hill_chart_classical};

    fn hill_unstable(delta: f64, interpolation: AlphaInterpolation) -> GenericChart {
        let hill = Arc::new(HillVortex::classical());
        let spec = classify_saddle(hill.as_ref(), Vec3::Z, 1e-8).unwrap();
        GenericChart::build(
            hill,
            &spec,
            GenericChartOptions {
                delta,
                section: Some(Arc::new(|x: Vec3| x.z)),
                p_extent: 2.5,
                n_alpha: 64,
                interpolation,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn expm2_matches_series() {
        for b in [
            [[1.5, -5.0], [5.0, 1.5]],
            [[1.0, 0.3], [0.2, 2.0]],
            [[1.5, 0.0], [0.0, 1.5]],
        ] {
            let s = -0.7;
            let e = expm2(&b, s);
            // Taylor series reference
            let mut term = [[1.0, 0.0], [0.0, 1.0]];
            let mut sum = term;
            for k in 1..80 {
                let next = [
                    [
                        (term[0][0] * b[0][0] + term[0][1] * b[1][0]) * s / k as f64,
                        (term[0][0] * b[0][1] + term[0][1] * b[1][1]) * s / k as f64,
                    ],
                    [
                        (term[1][0] * b[0][0] + term[1][1] * b[1][0]) * s / k as f64,
                        (term[1][0] * b[0][1] + term[1][1] * b[1][1]) * s / k as f64,
                    ],
                ];
                term = next;
                for i in 0..2 {
                    for j in 0..2 {
                        sum[i][j] += term[i][j];
                    }
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    assert!((e[i][j] - sum[i][j]).abs() < 1e-12, "{b:?}");
                }
            }
        }
    }

    #[test]
    fn reproduces_hill_sphere() {
        let chart = hill_unstable(1e-3, AlphaInterpolation::Trigonometric);
        let analytic = hill_chart_classical();
        let mut worst = 0.0_f64;
        for i in 0..=20 {
            let p = -2.0 + 0.2 * i as f64;
            for k in 0..7 {
                let a = 0.03 + k as f64 / 7.0;
                worst = worst.max((chart.point(p, a) - analytic.point(p, a)).norm());
            }
        }
        assert!(worst < 1e-6, "{worst:e}");
        // the same orientation convention as the analytic chart
        let n = chart_normal(&chart, 0.0, 0.1).unwrap();
        assert!(n.dot(chart.point(0.0, 0.1)) > 0.0);
        assert!(chart.divergence_integral(-3.0, 1.0, 0.2) == 0.0);
    }

    #[test]
    fn seed_radius_only_moves_the_origin() {
        let a = hill_unstable(1e-3, AlphaInterpolation::Trigonometric);
        let b = hill_unstable(5e-4, AlphaInterpolation::Trigonometric);
        for &p in &[-1.0, 0.0, 1.5] {
            assert!((a.point(p, 0.3) - b.point(p, 0.3)).norm() < 1e-8);
        }
    }

    #[test]
    fn spectrum_case_is_checked() {
        let hill = Arc::new(HillVortex::classical());
        let b = classify_saddle(hill.as_ref(), -Vec3::Z, 1e-8).unwrap();
        assert!(matches!(
            generic_chart_from_saddle(hill.clone(), &b, 1e-3, None, 1.0),
            Err(Error::SpectrumMismatch(_))
        ));
    }

    #[test]
    fn stable_chart_of_south_pole() {
        let hill = Arc::new(HillVortex::classical());
        let b = classify_saddle(hill.as_ref(), -Vec3::Z, 1e-8).unwrap();
        let chart = GenericChart::build(
            hill,
            &b,
            GenericChartOptions {
                kind: ChartKind::Stable,
                section: Some(Arc::new(|x: Vec3| x.z)),
                n_alpha: 32,
                p_extent: 2.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(chart.domain().p_min, -2.0);
        let analytic = hill_chart_classical();
        for &p in &[-1.5, 0.0, 1.0, 3.0] {
            let x = chart.point(p, 0.0);
            let y = analytic.point(p, 0.0);
            assert!((x.z - y.z).abs() < 1e-7, "p = {p}: {x:?} vs {y:?}");
            assert!((x.norm() - 1.0).abs() < 1e-6);
        }
        assert!(chart.upstream_spectrum().is_none());
        assert!(chart.downstream_spectrum().is_some());
    }

    #[test]
    fn arc_length_origin_without_section() {
        let hill = Arc::new(HillVortex::classical());
        let a = classify_saddle(hill.as_ref(), Vec3::Z, 1e-8).unwrap();
        let chart = GenericChart::build(
            hill,
            &a,
            GenericChartOptions {
                n_alpha: 16,
                p_extent: 1.0,
                ..Default::default()
            },
        )
        .unwrap();
        // a unit meridian arc from the pole ends at theta = 1
        let x = chart.point(0.0, 0.0);
        assert!(((x.z / x.norm()).acos() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn divergence_potential_of_contracted_field() {
        let c = 0.05;
        let field = Arc::new(Contracted {
            inner: HillVortex::classical(),
            rate: c,
            center: Vec3::Z,
        });
        let spec = classify_saddle(field.as_ref(), Vec3::Z, 1e-8).unwrap();
        let chart = GenericChart::build(
            field,
            &spec,
            GenericChartOptions {
                n_alpha: 16,
                p_extent: 1.0,
                section: Some(Arc::new(|x: Vec3| x.z)),
                ..Default::default()
            },
        )
        .unwrap();
        // div = -3c everywhere
        let d = chart.divergence_integral(-2.0, 0.5, 0.3);
        assert!((d + 3.0 * c * 2.5).abs() < 1e-8, "{d}");
        let split = chart.divergence_integral(-2.0, -0.4, 0.3) + chart.divergence_integral(-0.4, 0.5, 0.3);
        assert!((d - split).abs() < 1e-9);
    }
}
