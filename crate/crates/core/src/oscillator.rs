//! Time integration of `ÿ + y ± |y|^{p-1} y = 0` from the initial curve
//! `(y, ẏ)(0) = (0, c)`, and an independent return-map period oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_plane::{first_integral, separatrix_energy, PeriodMap, Sign};
use crate::scalar::{odd_pow, Real};

/// Phase-space point at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorState<T> {
    pub y: T,
    pub ydot: T,
    pub t: T,
}

/// Step-size control for the embedded Runge–Kutta integrator.
///
/// The absolute tolerance is measured relative to the orbit size `c`, so
/// tiny orbits are resolved to the same relative accuracy as large ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeTolerances {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
}

impl Default for OdeTolerances {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_steps: 200_000,
        }
    }
}

impl OdeTolerances {
    /// Tolerances used for breather evaluation, where finite differences of
    /// the solution amplify integration noise.
    pub fn tight() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-13,
            max_steps: 200_000,
        }
    }
}

// Dormand–Prince 5(4) tableau
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
// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

type Vec2<T> = [T; 2];

#[inline]
fn axpy<T: Real>(y: Vec2<T>, terms: &[(f64, Vec2<T>)], h: T) -> Vec2<T> {
    let mut out = y;
    for &(a, k) in terms {
        let ah = T::of(a) * h;
        out[0] = out[0] + ah * k[0];
        out[1] = out[1] + ah * k[1];
    }
    out
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone, Copy)]
struct DenseStep<T> {
    t0: T,
    h: T,
    coeffs: [Vec2<T>; 5],
}

impl<T: Real> DenseStep<T> {
    #[inline]
    fn eval(&self, t: T) -> Vec2<T> {
        let theta = (t - self.t0) / self.h;
        let theta1 = T::one() - theta;
        let [r1, r2, r3, r4, r5] = self.coeffs;
        let mut out = [T::zero(); 2];
        for i in 0..2 {
            out[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
        }
        out
    }

    #[inline]
    fn t1(&self) -> T {
        self.t0 + self.h
    }
}

/// The model oscillator for one sign and exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillator<T> {
    sign: Sign,
    p: T,
    tol: OdeTolerances,
}

impl<T: Real> Oscillator<T> {
    pub fn new(sign: Sign, p: T) -> Result<Self> {
        Self::with_tolerances(sign, p, OdeTolerances::default())
    }

    pub fn with_tolerances(sign: Sign, p: T, tol: OdeTolerances) -> Result<Self> {
        if !(p > T::one()) || !p.is_finite() {
            return Err(Error::domain(format!("exponent p must satisfy p > 1, got {p}")));
        }
        Ok(Self { sign, p, tol })
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn tolerances(&self) -> &OdeTolerances {
        &self.tol
    }

    #[inline]
    fn rhs(&self, s: Vec2<T>) -> Vec2<T> {
        [s[1], -s[0] - self.sign.factor::<T>() * odd_pow(s[0], self.p)]
    }

    pub fn energy(&self, y: T, ydot: T) -> T {
        first_integral(self.sign, self.p, y, ydot)
    }

    fn check_speed(&self, c: T) -> Result<()> {
        if !(c >= T::zero()) || !c.is_finite() {
            return Err(Error::domain(format!("initial speed c must be finite and >= 0, got {c}")));
        }
        if self.sign == Sign::Minus && c * c >= separatrix_energy(self.p) {
            return Err(Error::domain(format!(
                "minus orbit energy c² = {} is not below the separatrix energy {}",
                c * c,
                separatrix_energy(self.p)
            )));
        }
        Ok(())
    }

    /// Integrates from `(0, c)` at `t = 0` up to `t_end >= 0` with dense output.
    pub fn integrate(&self, c: T, t_end: T) -> Result<Trajectory<T>> {
        self.check_speed(c)?;
        self.integrate_from([T::zero(), c], c, t_end, |_| false).map(|(traj, _)| traj)
    }

    /// Adaptive DP5(4) loop. `stop` sees each accepted step and may end the
    /// integration early (returns whether it fired).
    fn integrate_from<S>(&self, y0: Vec2<T>, scale: T, t_end: T, mut stop: S) -> Result<(Trajectory<T>, bool)>
    where
        S: FnMut(&DenseStep<T>) -> bool,
    {
        if !(t_end >= T::zero()) || !t_end.is_finite() {
            return Err(Error::domain(format!("integration end time must be finite and >= 0, got {t_end}")));
        }
        let mut traj = Trajectory {
            sign: self.sign,
            p: self.p,
            y0,
            t_end,
            steps: Vec::new(),
        };
        if t_end == T::zero() || (y0[0] == T::zero() && y0[1] == T::zero()) {
            return Ok((traj, false));
        }
        let atol = T::of(self.tol.abs_tol) * scale.max(T::min_positive_value());
        let rtol = T::of(self.tol.rel_tol);
        let order_inv = T::of(0.2);
        let (safety, fac_min, fac_max) = (T::of(0.9), T::of(0.2), T::of(5.0));
        let (alpha, beta) = (T::of(0.7 / 5.0), T::of(0.04));

        let mut t = T::zero();
        let mut y = y0;
        let mut k1 = self.rhs(y);
        let mut h = (rtol.powf(order_inv) * T::of(0.5)).min(t_end);
        let mut err_prev = T::of(1e-4);
        let h_min = T::epsilon() * T::of(16.0) * t_end.max(T::one());

        for _ in 0..self.tol.max_steps {
            if t_end - t <= h_min {
                return Ok((traj, false));
            }
            let last = t + h >= t_end;
            if last {
                h = t_end - t;
            }
            let k2 = self.rhs(axpy(y, &[(A21, k1)], h));
            let k3 = self.rhs(axpy(y, &[(A31, k1), (A32, k2)], h));
            let k4 = self.rhs(axpy(y, &[(A41, k1), (A42, k2), (A43, k3)], h));
            let k5 = self.rhs(axpy(y, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)], h));
            let k6 = self.rhs(axpy(y, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)], h));
            let y_new = axpy(y, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)], h);
            let k7 = self.rhs(y_new);
            let e = axpy(
                [T::zero(); 2],
                &[(E1, k1), (E3, k3), (E4, k4), (E5, k5), (E6, k6), (E7, k7)],
                h,
            );
            let mut err = T::zero();
            for i in 0..2 {
                let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
                err = err + (e[i] / sc) * (e[i] / sc);
            }
            err = (err * T::of(0.5)).sqrt();

            if err <= T::one() {
                let ydiff = [y_new[0] - y[0], y_new[1] - y[1]];
                let bspl = [h * k1[0] - ydiff[0], h * k1[1] - ydiff[1]];
                let r4 = [ydiff[0] - h * k7[0] - bspl[0], ydiff[1] - h * k7[1] - bspl[1]];
                let r5 = axpy(
                    [T::zero(); 2],
                    &[(D1, k1), (D3, k3), (D4, k4), (D5, k5), (D6, k6), (D7, k7)],
                    h,
                );
                let step = DenseStep {
                    t0: t,
                    h,
                    coeffs: [y, ydiff, bspl, r4, r5],
                };
                traj.steps.push(step);
                t = if last { t_end } else { t + h };
                y = y_new;
                k1 = k7;
                if stop(&step) {
                    return Ok((traj, true));
                }
                if last {
                    return Ok((traj, false));
                }
                let err_c = err.max(T::of(1e-10));
                let fac = safety * err_c.powf(-alpha) * err_prev.powf(beta);
                h = h * fac.max(fac_min).min(fac_max);
                err_prev = err_c;
            } else {
                let fac = (safety * err.powf(-order_inv)).max(fac_min);
                h = h * fac;
            }
            if h < h_min {
                return Err(Error::Integration(format!("step size underflow at t = {t}")));
            }
        }
        Err(Error::Integration(format!(
            "exceeded {} steps before t = {t_end}",
            self.tol.max_steps
        )))
    }

    /// Period measured as the first return of the trajectory from `(0, √e)`
    /// to the half-line `y = 0, ẏ > 0`, located by bisection on the dense output.
    pub fn return_map_period(&self, e: T) -> Result<T> {
        if !(e >= T::zero()) {
            return Err(Error::domain(format!("orbit energy must be >= 0, got {e}")));
        }
        let c = e.sqrt();
        self.check_speed(c)?;
        if e == T::zero() {
            return Ok(T::two_pi());
        }
        let horizon = T::of(1e4);
        let mut crossing: Option<DenseStep<T>> = None;
        self.integrate_from([T::zero(), c], c, horizon, |step| {
            let start = step.coeffs[0][0];
            let end = step.eval(step.t1())[0];
            if start < T::zero() && end >= T::zero() {
                crossing = Some(*step);
                true
            } else {
                false
            }
        })?;
        let step = crossing.ok_or_else(|| Error::Integration(format!("no return within t = {horizon}")))?;
        let (mut lo, mut hi) = (step.t0, step.t1());
        for _ in 0..200 {
            let mid = T::of(0.5) * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if step.eval(mid)[0] < T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(T::of(0.5) * (lo + hi))
    }

    /// One full period of the orbit through `(0, c)`, reduced-time evaluation
    /// included. The reduction uses the quadrature period `L(c²)`.
    pub fn orbit(&self, c: T, period_map: &PeriodMap<T>) -> Result<Orbit<T>> {
        self.check_speed(c)?;
        let period = period_map.period(c * c)?;
        let traj = self.integrate(c, period)?;
        Ok(Orbit { traj, period })
    }

    /// `(y, ẏ)(t; c)` on the family with initial data `(0, c)`.
    pub fn family_eval(&self, c: T, t: T, period_map: &PeriodMap<T>) -> Result<(T, T)> {
        if c == T::zero() {
            self.check_speed(c)?;
            return Ok((T::zero(), T::zero()));
        }
        let s = self.orbit(c, period_map)?.state(t);
        Ok((s.y, s.ydot))
    }

    /// Fixed-step Störmer–Verlet from `(0, c)`; returns the states at every step.
    pub fn integrate_leapfrog(&self, c: T, t_end: T, dt: T) -> Result<Vec<OscillatorState<T>>> {
        self.check_speed(c)?;
        if !(dt > T::zero()) || !(t_end >= T::zero()) {
            return Err(Error::domain("leapfrog needs dt > 0 and t_end >= 0"));
        }
        let n = (t_end / dt).ceil().to_usize().unwrap_or(0);
        let half = T::of(0.5);
        let accel = |y: T| self.rhs([y, T::zero()])[1];
        let mut out = Vec::with_capacity(n + 1);
        let (mut y, mut v) = (T::zero(), c);
        out.push(OscillatorState { y, ydot: v, t: T::zero() });
        for i in 1..=n {
            let v_half = v + half * dt * accel(y);
            y = y + dt * v_half;
            v = v_half + half * dt * accel(y);
            out.push(OscillatorState {
                y,
                ydot: v,
                t: T::from_usize(i).unwrap_or_else(T::zero) * dt,
            });
        }
        Ok(out)
    }

    /// Points `(y, ẏ)` along one period of the orbit at energy `e`.
    pub fn sample_orbit(&self, e: T, period_map: &PeriodMap<T>, n: usize) -> Result<Vec<(T, T)>> {
        if !(e >= T::zero()) {
            return Err(Error::domain(format!("orbit energy must be >= 0, got {e}")));
        }
        if e == T::zero() {
            self.check_speed(T::zero())?;
            return Ok(vec![(T::zero(), T::zero())]);
        }
        let orbit = self.orbit(e.sqrt(), period_map)?;
        let n = n.max(3);
        let nf = T::from_usize(n).unwrap_or_else(T::one);
        Ok((0..n)
            .map(|i| {
                let t = orbit.period * T::from_usize(i).unwrap_or_else(T::zero) / nf;
                let s = orbit.state(t);
                (s.y, s.ydot)
            })
            .collect())
    }
}

/// Dense-output solution on `[0, t_end]`.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    sign: Sign,
    p: T,
    y0: Vec2<T>,
    t_end: T,
    steps: Vec<DenseStep<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn t_end(&self) -> T {
        self.t_end
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// State at `t`, clamped to `[0, t_end]`.
    pub fn state(&self, t: T) -> OscillatorState<T> {
        let t = t.max(T::zero()).min(self.t_end);
        if self.steps.is_empty() {
            return OscillatorState { y: self.y0[0], ydot: self.y0[1], t };
        }
        let idx = self.steps.partition_point(|s| s.t1() < t).min(self.steps.len() - 1);
        let v = self.steps[idx].eval(t);
        OscillatorState { y: v[0], ydot: v[1], t }
    }

    /// States at the step boundaries.
    pub fn nodes(&self) -> Vec<OscillatorState<T>> {
        let mut out = vec![OscillatorState { y: self.y0[0], ydot: self.y0[1], t: T::zero() }];
        out.extend(self.steps.iter().map(|s| {
            let v = s.eval(s.t1());
            OscillatorState { y: v[0], ydot: v[1], t: s.t1() }
        }));
        out
    }

    /// Largest deviation of the first integral from its initial value over
    /// the step boundaries.
    pub fn energy_drift(&self) -> T {
        let e0 = first_integral(self.sign, self.p, self.y0[0], self.y0[1]);
        self.nodes()
            .iter()
            .map(|s| (first_integral(self.sign, self.p, s.y, s.ydot) - e0).abs())
            .fold(T::zero(), T::max)
    }
}

/// One period of an orbit; evaluation reduces time modulo the period.
#[derive(Debug, Clone)]
pub struct Orbit<T> {
    traj: Trajectory<T>,
    period: T,
}

impl<T: Real> Orbit<T> {
    pub fn period(&self) -> T {
        self.period
    }

    pub fn trajectory(&self) -> &Trajectory<T> {
        &self.traj
    }

    pub fn state(&self, t: T) -> OscillatorState<T> {
        let reduced = if self.period > T::zero() {
            let r = t % self.period;
            if r < T::zero() {
                r + self.period
            } else {
                r
            }
        } else {
            T::zero()
        };
        let mut s = self.traj.state(reduced);
        s.t = t;
        s
    }

    /// `max_t |y(t)|` sampled on `n` equispaced times plus the step nodes.
    pub fn max_abs_y(&self, n: usize) -> T {
        let nf = T::from_usize(n.max(1)).unwrap_or_else(T::one);
        let sampled = (0..n.max(1))
            .map(|i| self.state(self.period * T::from_usize(i).unwrap_or_else(T::zero) / nf).y.abs())
            .fold(T::zero(), T::max);
        self.traj.nodes().iter().map(|s| s.y.abs()).fold(sampled, T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn osc(sign: Sign) -> Oscillator<f64> {
        Oscillator::new(sign, 3.0).unwrap()
    }

    fn pmap(sign: Sign) -> PeriodMap<f64> {
        PeriodMap::new(sign, 3.0).unwrap()
    }

    #[test]
    fn zero_speed_is_equilibrium() {
        for sign in [Sign::Plus, Sign::Minus] {
            let tr = osc(sign).integrate(0.0, 10.0).unwrap();
            for t in [0.0, 1.0, 7.5] {
                let s = tr.state(t);
                assert_eq!((s.y, s.ydot), (0.0, 0.0));
            }
            assert_eq!(osc(sign).family_eval(0.0, 3.3, &pmap(sign)).unwrap(), (0.0, 0.0));
        }
    }

    #[test]
    fn small_orbit_follows_linearisation() {
        let c = 1e-4;
        let tr = osc(Sign::Plus).integrate(c, 2.0 * PI).unwrap();
        for i in 0..=64 {
            let t = 2.0 * PI * f64::from(i) / 64.0;
            assert!((tr.state(t).y - c * t.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn dense_output_is_accurate_between_steps() {
        // linear regime, compare against the exact solution at off-node times
        let c = 1e-6;
        let o = Oscillator::with_tolerances(Sign::Plus, 3.0, OdeTolerances { abs_tol: 1e-8, rel_tol: 1e-8, max_steps: 10_000 }).unwrap();
        let tr = o.integrate(c, 10.0).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..997 {
            let t = 10.0 * f64::from(i) / 997.0;
            worst = worst.max((tr.state(t).y - c * t.sin()).abs() / c);
        }
        assert!(worst < 1e-7, "relative dense error {worst}");
    }

    #[test]
    fn amplitude_matches_phase_plane() {
        let m = pmap(Sign::Plus);
        let orbit = osc(Sign::Plus).orbit(1.5f64.sqrt(), &m).unwrap();
        assert!((orbit.max_abs_y(2000) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn half_period_symmetry() {
        let m = pmap(Sign::Plus);
        let c = 1.5f64.sqrt();
        let l = m.period(1.5).unwrap();
        let (y, yd) = osc(Sign::Plus).family_eval(c, l / 2.0, &m).unwrap();
        assert!(y.abs() < 1e-8 && (yd + c).abs() < 1e-8, "{y} {yd}");
        assert_eq!(osc(Sign::Plus).family_eval(c, 0.0, &m).unwrap(), (0.0, c));
    }

    #[test]
    fn return_map_agrees_with_quadrature() {
        for (sign, e) in [(Sign::Plus, 1.5), (Sign::Plus, 0.01), (Sign::Minus, 0.375), (Sign::Minus, 0.49)] {
            let l_rm = osc(sign).return_map_period(e).unwrap();
            let l_q = pmap(sign).period(e).unwrap();
            assert!((l_rm - l_q).abs() < 1e-6, "{sign} e={e}: {l_rm} vs {l_q}");
        }
        let near_zero = osc(Sign::Minus).return_map_period(1e-8).unwrap();
        assert!((near_zero - 2.0 * PI).abs() < 1e-5);
        let m = osc(Sign::Minus);
        let l49 = m.return_map_period(0.49).unwrap();
        assert!(l49 > 2.0 * PI && l49 > m.return_map_period(0.375).unwrap());
    }

    #[test]
    fn energy_is_conserved_over_a_period() {
        for (sign, e) in [(Sign::Plus, 2.0), (Sign::Minus, 0.45)] {
            let l = pmap(sign).period(e).unwrap();
            let tr = osc(sign).integrate(e.sqrt(), l).unwrap();
            assert!(tr.energy_drift() < 1e-9, "{}", tr.energy_drift());
        }
    }

    #[test]
    fn odd_symmetry_in_time() {
        let m = pmap(Sign::Minus);
        let o = osc(Sign::Minus);
        let orbit = o.orbit(0.6, &m).unwrap();
        for t in [0.3, 1.7, 4.2, 9.9] {
            assert!((orbit.state(-t).y + orbit.state(t).y).abs() < 1e-9);
        }
    }

    #[test]
    fn periodicity_of_reduced_evaluation() {
        let m = pmap(Sign::Plus);
        let orbit = osc(Sign::Plus).orbit(1.1, &m).unwrap();
        for t in [0.1, 2.0, 5.5] {
            let a = orbit.state(t);
            let b = orbit.state(t + orbit.period());
            assert!((a.y - b.y).abs() < 1e-8 && (a.ydot - b.ydot).abs() < 1e-8);
        }
    }

    #[test]
    fn minus_rejects_energies_above_separatrix() {
        assert!(matches!(osc(Sign::Minus).integrate(0.75, 1.0), Err(Error::Domain(_))));
        assert!(matches!(osc(Sign::Minus).return_map_period(0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn step_budget_exhaustion_is_an_integration_error() {
        let o = Oscillator::with_tolerances(Sign::Plus, 3.0, OdeTolerances { max_steps: 5, ..Default::default() }).unwrap();
        assert!(matches!(o.integrate(1.0, 100.0), Err(Error::Integration(_))));
    }

    #[test]
    fn leapfrog_energy_error_stays_bounded() {
        let o = osc(Sign::Plus);
        let states = o.integrate_leapfrog(1.0, 200.0, 1e-2).unwrap();
        let drift = states
            .iter()
            .map(|s| (o.energy(s.y, s.ydot) - 1.0).abs())
            .fold(0.0, f64::max);
        // second-order symplectic: O(dt²) oscillation, no secular growth
        assert!(drift < 1e-4, "{drift}");
        let late = &states[states.len() - 100..];
        let late_drift = late.iter().map(|s| (o.energy(s.y, s.ydot) - 1.0).abs()).fold(0.0, f64::max);
        assert!(late_drift < 1e-4);
    }
}
