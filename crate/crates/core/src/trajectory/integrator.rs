//! Dormand–Prince 5(4) with Hairer's continuous extension, plus a
//! fixed-step classical RK4 used for cross-checks.
//!
//! The state is augmented with a fourth component that accumulates
//! `int div f(x(s)) ds` along the trajectory.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{FieldModel, PerturbationModel};
use crate::geometry::Vec3;

type State = [f64; 4];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// The right-hand side `f(x) + eps g(x, t)` together with `div f(x)`.
#[derive(Clone, Copy)]
pub struct OdeSystem<'a> {
    pub field: &'a dyn FieldModel,
    pub perturbation: Option<&'a dyn PerturbationModel>,
    pub eps: f64,
}

impl<'a> OdeSystem<'a> {
    pub fn unperturbed(field: &'a dyn FieldModel) -> Self {
        OdeSystem {
            field,
            perturbation: None,
            eps: 0.0,
        }
    }

    pub fn perturbed(
        field: &'a dyn FieldModel,
        perturbation: Option<&'a dyn PerturbationModel>,
        eps: f64,
    ) -> Self {
        // without a perturbation the perturbation strength is meaningless
        let eps = if perturbation.is_some() { eps } else { 0.0 };
        OdeSystem {
            field,
            perturbation,
            eps,
        }
    }

    pub fn velocity(&self, t: f64, x: Vec3) -> Vec3 {
        let mut v = self.field.velocity(x);
        if let Some(g) = self.perturbation {
            if self.eps != 0.0 {
                v += g.evaluate(x, t) * self.eps;
            }
        }
        v
    }

    fn rhs(&self, t: f64, y: &State) -> State {
        let x = Vec3::new(y[0], y[1], y[2]);
        let v = self.velocity(t, x);
        [v.x, v.y, v.z, self.field.divergence(x)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// `|x|` beyond this is reported as blow-up.
    pub max_norm: f64,
    pub max_steps: usize,
    /// Largest allowed step; `None` for unlimited.
    pub max_step: Option<f64>,
}

impl IntegratorOptions {
    /// Options whose per-step error stays below `tol`. The controller aims
    /// a decade lower so that global errors over typical spans stay near `tol`.
    pub fn with_tol(tol: f64) -> Self {
        IntegratorOptions {
            rtol: 0.1 * tol,
            atol: 0.1 * tol,
            ..Default::default()
        }
    }
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-10,
            atol: 1e-10,
            max_norm: 1e8,
            max_steps: 2_000_000,
            max_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// An integrated trajectory with continuous output.
///
/// Sample times are strictly monotone in the direction of integration.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<State>,
    dense: Vec<[State; 5]>,
    last_h: f64,
    pub stats: IntegratorStats,
}

impl Trajectory {
    fn new(x0: Vec3, t0: f64) -> Self {
        Trajectory {
            times: vec![t0],
            states: vec![[x0.x, x0.y, x0.z, 0.0]],
            dense: Vec::new(),
            last_h: 0.0,
            stats: IntegratorStats::default(),
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn forward(&self) -> bool {
        self.end_time() >= self.start_time()
    }

    /// Sample state `i` as position plus accumulated divergence.
    pub fn sample(&self, i: usize) -> (Vec3, f64) {
        let s = &self.states[i];
        (Vec3::new(s[0], s[1], s[2]), s[3])
    }

    pub fn final_state(&self) -> Vec3 {
        self.sample(self.len() - 1).0
    }

    pub fn contains(&self, t: f64) -> bool {
        let (a, b) = (self.start_time(), self.end_time());
        t >= a.min(b) && t <= a.max(b)
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.times.len();
        let idx = if self.forward() {
            self.times.partition_point(|&s| s <= t)
        } else {
            self.times.partition_point(|&s| s >= t)
        };
        idx.saturating_sub(1).min(n - 2)
    }

    /// Continuous state (position and divergence integral) at time `t`.
    pub fn state_at(&self, t: f64) -> Result<(Vec3, f64)> {
        if !self.contains(t) {
            return Err(Error::OutsideTrajectory {
                t,
                start: self.start_time(),
                end: self.end_time(),
            });
        }
        if self.times.len() == 1 {
            return Ok(self.sample(0));
        }
        let k = self.locate(t);
        let h = self.times[k + 1] - self.times[k];
        let th = (t - self.times[k]) / h;
        let th1 = 1.0 - th;
        let rc = &self.dense[k];
        let y: State = std::array::from_fn(|i| {
            rc[0][i] + th * (rc[1][i] + th1 * (rc[2][i] + th * (rc[3][i] + th1 * rc[4][i])))
        });
        Ok((Vec3::new(y[0], y[1], y[2]), y[3]))
    }

    pub fn position_at(&self, t: f64) -> Result<Vec3> {
        Ok(self.state_at(t)?.0)
    }

    /// Extends the trajectory to `t1` (same direction as before).
    pub fn continue_to(&mut self, system: &OdeSystem, t1: f64, opts: &IntegratorOptions) -> Result<()> {
        advance(self, system, t1, opts, &mut |_| false)
    }
}

fn error_norm(y0: &State, y1: &State, err: &State, opts: &IntegratorOptions) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        let sc = opts.atol + opts.rtol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / 4.0).sqrt()
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

/// Advances `traj` toward `t1`, stopping early after any accepted step for
/// which `stop` returns true.
fn advance(
    traj: &mut Trajectory,
    system: &OdeSystem,
    t1: f64,
    opts: &IntegratorOptions,
    stop: &mut dyn FnMut(&Trajectory) -> bool,
) -> Result<()> {
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::InvalidParameter("integrator tolerances must be positive".into()));
    }
    let mut t = traj.end_time();
    if t == t1 {
        return Ok(());
    }
    let dir = (t1 - t).signum();
    if traj.len() > 1 && dir != (traj.end_time() - traj.start_time()).signum() {
        return Err(Error::InvalidParameter(
            "cannot reverse direction of an existing trajectory".into(),
        ));
    }
    let mut y = traj.states[traj.len() - 1];
    let mut k1 = system.rhs(t, &y);
    traj.stats.evaluations += 1;
    let span = (t1 - t).abs();
    let max_step = opts.max_step.unwrap_or(f64::INFINITY).min(span);
    let mut h = if traj.last_h != 0.0 {
        traj.last_h.abs()
    } else {
        initial_step(&y, &k1, opts).min(max_step)
    };
    let mut steps = 0usize;
    loop {
        let remaining = (t1 - t).abs();
        if remaining <= 1e-15 * t.abs().max(1.0) {
            break;
        }
        h = h.min(max_step);
        let last = h >= remaining;
        let hs = if last { t1 - t } else { dir * h };
        if h < 1e-13 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h });
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepUnderflow { t, h });
        }

        let k2 = system.rhs(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = system.rhs(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = system.rhs(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = system.rhs(
            t + C5 * hs,
            &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = system.rhs(
            t + hs,
            &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y1 = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let t_new = if last { t1 } else { t + hs };
        let k7 = system.rhs(t_new, &y1);
        traj.stats.evaluations += 6;

        let err: State = std::array::from_fn(|i| {
            hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
        });
        let en = error_norm(&y, &y1, &err, opts);
        if !en.is_finite() {
            traj.stats.rejected += 1;
            h *= 0.2;
            continue;
        }
        if en <= 1.0 {
            let rc1: State = std::array::from_fn(|i| y1[i] - y[i]);
            let rc2: State = std::array::from_fn(|i| hs * k1[i] - rc1[i]);
            let rc3: State = std::array::from_fn(|i| rc1[i] - hs * k7[i] - rc2[i]);
            let rc4: State = std::array::from_fn(|i| {
                hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            });
            traj.dense.push([y, rc1, rc2, rc3, rc4]);
            traj.times.push(t_new);
            traj.states.push(y1);
            traj.stats.accepted += 1;
            t = t_new;
            y = y1;
            k1 = k7;
            let norm = Vec3::new(y[0], y[1], y[2]).norm();
            if !(norm <= opts.max_norm) {
                return Err(Error::BlowUp { t, norm });
            }
            let fac = (0.9 * en.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
            if !last {
                h = hs.abs() * fac;
                traj.last_h = h;
            }
            if stop(traj) {
                break;
            }
        } else {
            traj.stats.rejected += 1;
            h = hs.abs() * (0.9 * en.powf(-0.2)).clamp(0.1, 0.9);
        }
    }
    Ok(())
}

fn initial_step(y: &State, f: &State, opts: &IntegratorOptions) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..4 {
        let sc = opts.atol + opts.rtol * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (f[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / 4.0).sqrt(), (d1 / 4.0).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.clamp(1e-8, 0.1)
}

/// Integrates `x' = f(x) + eps g(x, t)` from `t0` to `t1` (either direction)
/// with local error per step bounded by `tol`.
pub fn integrate(
    field: &dyn FieldModel,
    perturbation: Option<&dyn PerturbationModel>,
    eps: f64,
    x0: Vec3,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<Trajectory> {
    let system = OdeSystem::perturbed(field, perturbation, eps);
    integrate_system(&system, x0, t0, t1, &IntegratorOptions::with_tol(tol))
}

pub fn integrate_system(
    system: &OdeSystem,
    x0: Vec3,
    t0: f64,
    t1: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    integrate_until(system, x0, t0, t1, opts, |_| false)
}

/// Like [`integrate_system`] but returns as soon as `stop` reports true
/// after an accepted step.
pub fn integrate_until(
    system: &OdeSystem,
    x0: Vec3,
    t0: f64,
    t1: f64,
    opts: &IntegratorOptions,
    mut stop: impl FnMut(&Trajectory) -> bool,
) -> Result<Trajectory> {
    if !x0.is_finite() || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidParameter("non-finite initial data".into()));
    }
    let mut traj = Trajectory::new(x0, t0);
    advance(&mut traj, system, t1, opts, &mut stop)?;
    Ok(traj)
}

/// Classical fourth-order Runge–Kutta with `n` equal steps; returns the
/// final position.
pub fn rk4_fixed(system: &OdeSystem, x0: Vec3, t0: f64, t1: f64, n: usize) -> Vec3 {
    let h = (t1 - t0) / n as f64;
    let mut x = x0;
    let mut t = t0;
    for _ in 0..n {
        let k1 = system.velocity(t, x);
        let k2 = system.velocity(t + 0.5 * h, x + k1 * (0.5 * h));
        let k3 = system.velocity(t + 0.5 * h, x + k2 * (0.5 * h));
        let k4 = system.velocity(t + h, x + k3 * h);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        t += h;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{HillVortex, RadialGr};
    use crate::geometry::Mat3;

    struct Linear(Mat3);
    impl FieldModel for Linear {
        fn name(&self) -> String {
            "linear".into()
        }
        fn velocity(&self, x: Vec3) -> Vec3 {
            self.0.mul_vec(x)
        }
        fn divergence(&self, _x: Vec3) -> f64 {
            self.0.trace()
        }
    }

    #[test]
    fn equilibrium_stays_put() {
        let hill = HillVortex::classical();
        let tr = integrate(&hill, None, 0.0, Vec3::Z, 0.0, 5.0, 1e-10).unwrap();
        assert!((tr.final_state() - Vec3::Z).norm() < 1e-10);
    }

    #[test]
    fn hill_meridian_matches_closed_form() {
        let hill = HillVortex::classical();
        let x0 = Vec3::X;
        let fwd = integrate(&hill, None, 0.0, x0, 0.0, 3.0, 1e-12).unwrap();
        let bwd = integrate(&hill, None, 0.0, x0, 0.0, -3.0, 1e-12).unwrap();
        let mut worst = 0.0_f64;
        for i in 0..=60 {
            let p = -3.0 + 0.1 * i as f64;
            let x = if p >= 0.0 { fwd.position_at(p) } else { bwd.position_at(p) }.unwrap();
            let theta = (x.z / x.norm()).acos();
            let expected = (-(1.5 * p).tanh()).acos();
            worst = worst.max((theta - expected).abs());
        }
        assert!(worst < 1e-8, "max theta error {worst:e}");
    }

    #[test]
    fn forward_then_backward_returns() {
        let hill = HillVortex::swirl(0.3).unwrap();
        let x0 = Vec3::new(0.3, -0.2, 0.5);
        let tol = 1e-10;
        let a = integrate(&hill, Some(&RadialGr), 0.05, x0, 0.2, 2.2, tol).unwrap();
        let b = integrate(&hill, Some(&RadialGr), 0.05, a.final_state(), 2.2, 0.2, tol).unwrap();
        assert!((b.final_state() - x0).norm() < 10.0 * tol);
    }

    #[test]
    fn dense_output_and_divergence_accumulator() {
        let a = Mat3::new([[-0.5, 1.0, 0.0], [-1.0, -0.5, 0.0], [0.0, 0.0, 0.2]]);
        let field = Linear(a);
        let x0 = Vec3::new(1.0, 0.0, 1.0);
        let tr = integrate(&field, None, 0.0, x0, 0.0, 4.0, 1e-11).unwrap();
        assert_eq!(tr.sample(0).1, 0.0);
        for i in 0..=40 {
            let t = 0.1 * i as f64;
            let (x, d) = tr.state_at(t).unwrap();
            let e = (-0.5 * t).exp();
            let exact = Vec3::new(e * t.cos(), -e * t.sin(), (0.2 * t).exp());
            assert!((x - exact).norm() < 1e-8, "t = {t}");
            assert!((d - a.trace() * t).abs() < 1e-9);
        }
        assert!(tr.state_at(4.5).is_err());
        assert!(tr.times().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn blow_up_is_reported() {
        let field = Linear(Mat3::identity());
        let opts = IntegratorOptions {
            max_norm: 1e3,
            ..IntegratorOptions::with_tol(1e-8)
        };
        let err = integrate_system(&OdeSystem::unperturbed(&field), Vec3::X, 0.0, 20.0, &opts)
            .unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }));
    }

    #[test]
    fn rk4_agrees_with_dopri() {
        let hill = HillVortex::classical();
        let sys = OdeSystem::perturbed(&hill, Some(&RadialGr), 0.1);
        let x0 = Vec3::new(0.6, 0.1, 0.7);
        let a = rk4_fixed(&sys, x0, 0.0, 2.0, 4000);
        let b = integrate_system(&sys, x0, 0.0, 2.0, &IntegratorOptions::with_tol(1e-12))
            .unwrap()
            .final_state();
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn stop_callback_halts_early() {
        let hill = HillVortex::classical();
        let sys = OdeSystem::unperturbed(&hill);
        let x0 = Vec3::new(0.01, 0.0, 1.0);
        let tr = integrate_until(&sys, x0, 0.0, 100.0, &IntegratorOptions::default(), |tr| {
            tr.final_state().z < 0.0
        })
        .unwrap();
        assert!(tr.end_time() < 100.0);
        assert!(tr.final_state().z < 0.0);
    }
}
