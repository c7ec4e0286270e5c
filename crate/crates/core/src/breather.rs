//! Assembly of the real breather
//!
//! ```text
//! ψ(r, t) = τ(r) y(σ(r) t; c(r)),   U(x, t) = ψ(|x|, t) x/|x|,
//! ```
//!
//! with `c(r) = √M(g(r))`, its phase-shifted variants `U(x, t + a(|x|))`,
//! and the complex monochromatic breather `e^{iωt} φ(|x|) x/|x|`.

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientProfile;
use crate::error::{Error, Result};
use crate::oscillator::{OdeTolerances, Orbit, Oscillator};
use crate::phase_plane::{PeriodMap, PeriodSettings, Sign};
use crate::radial::{Jet, RadialExpr, RadialFunction};
use crate::scalar::{abs_pow, linear_fit, Real};

/// A time shift applied radius by radius.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseShift<T> {
    /// Shift `a(r)` given directly.
    Radial(RadialExpr<T>),
    /// Shift induced by starting the oscillator on the curve `b(c)` instead
    /// of at `y = 0`: `a(r) = b(c(r)) / σ(r)`.
    InitialCurve(RadialExpr<T>),
}

/// Everything needed to evaluate `ψ` at one radius.
#[derive(Debug, Clone)]
pub struct RadialSlice<T> {
    pub r: T,
    pub sigma: T,
    pub tau: T,
    pub c: T,
    /// Total phase shift `a(r)`.
    pub shift: T,
    orbit: Option<Orbit<T>>,
}

impl<T: Real> RadialSlice<T> {
    pub fn psi(&self, t: T) -> T {
        match &self.orbit {
            None => T::zero(),
            Some(o) => self.tau * o.state(self.sigma * (t + self.shift)).y,
        }
    }

    /// `max_t |ψ(r, t)| = τ(r) N(c(r)²)`.
    pub fn orbit(&self) -> Option<&Orbit<T>> {
        self.orbit.as_ref()
    }
}

#[derive(Debug, Clone)]
pub struct BreatherSpec<T> {
    profile: CoefficientProfile<T>,
    period_map: PeriodMap<T>,
    oscillator: Oscillator<T>,
    phases: Vec<PhaseShift<T>>,
}

impl<T: Real> BreatherSpec<T> {
    /// Builds the spec with tight integration tolerances. Hypotheses are not
    /// checked here; evaluation fails at radii where `g` sits on the wrong
    /// side of `2π`.
    pub fn new(profile: CoefficientProfile<T>) -> Result<Self> {
        Self::with_settings(profile, PeriodSettings::default(), OdeTolerances::tight())
    }

    pub fn with_settings(profile: CoefficientProfile<T>, period: PeriodSettings, ode: OdeTolerances) -> Result<Self> {
        let sign = profile.sign();
        let p = profile.p();
        Ok(Self {
            period_map: PeriodMap::with_settings(sign, p, period)?,
            oscillator: Oscillator::with_tolerances(sign, p, ode)?,
            profile,
            phases: Vec::new(),
        })
    }

    pub fn profile(&self) -> &CoefficientProfile<T> {
        &self.profile
    }

    pub fn period_map(&self) -> &PeriodMap<T> {
        &self.period_map
    }

    pub fn sign(&self) -> Sign {
        self.profile.sign()
    }

    pub fn p(&self) -> T {
        self.profile.p()
    }

    /// Time period `T` of the breather.
    pub fn period(&self) -> T {
        self.profile.period()
    }

    pub fn phases(&self) -> &[PhaseShift<T>] {
        &self.phases
    }

    pub fn sigma_tau(&self, r: T) -> (T, T) {
        self.profile.sigma_tau(r)
    }

    /// `c(r) = √M(g(r))`, zero where `g(r) = 2π`.
    pub fn c_of_r(&self, r: T) -> Result<T> {
        check_radius(r)?;
        if r == T::zero() {
            return Ok(T::zero());
        }
        let mut gap = self.profile.detuning(r);
        if !self.profile.has_exact_detuning() && gap.abs() <= T::of(8.0) * T::epsilon() * T::two_pi() {
            gap = T::zero();
        }
        if gap == T::zero() {
            return Ok(T::zero());
        }
        let wrong_side = match self.sign() {
            Sign::Plus => gap > T::zero(),
            Sign::Minus => gap < T::zero(),
        };
        if wrong_side {
            let name = match self.sign() {
                Sign::Plus => "H1",
                Sign::Minus => "H1'",
            };
            return Err(Error::hypothesis(
                name,
                format!("g(r) - 2π = {gap:e} at r = {r} has the wrong sign"),
            ));
        }
        let e = self.period_map.invert_gap(gap.abs()).map_err(|err| match err {
            Error::Domain(msg) => Error::domain(format!("at r = {r}: {msg}")),
            other => other,
        })?;
        Ok(e.value().sqrt())
    }

    fn shift_at(&self, r: T, c: T, sigma: T) -> T {
        self.phases
            .iter()
            .map(|ph| match ph {
                PhaseShift::Radial(a) => a.eval(r).v,
                PhaseShift::InitialCurve(b) => b.eval(c).v / sigma,
            })
            .fold(T::zero(), |a, b| a + b)
    }

    /// Precomputes `σ, τ, c`, the phase and one period of the orbit at `r`.
    pub fn slice(&self, r: T) -> Result<RadialSlice<T>> {
        let c = self.c_of_r(r)?;
        let (sigma, tau) = self.sigma_tau(r);
        let shift = self.shift_at(r, c, sigma);
        let orbit = if c == T::zero() {
            None
        } else {
            Some(self.oscillator.orbit(c, &self.period_map)?)
        };
        Ok(RadialSlice { r, sigma, tau, c, shift, orbit })
    }

    pub fn psi(&self, r: T, t: T) -> Result<T> {
        Ok(self.slice(r)?.psi(t))
    }

    /// `U(x, t) = ψ(|x|, t) x/|x|`, zero at the origin.
    pub fn field_u(&self, x: [T; 3], t: T) -> Result<[T; 3]> {
        let r = norm(x);
        if r == T::zero() {
            return Ok([T::zero(); 3]);
        }
        let f = self.psi(r, t)? / r;
        Ok([f * x[0], f * x[1], f * x[2]])
    }

    /// Same breather with the additional time shift `a(|x|)`; `a'(0)` must vanish.
    pub fn phase_shifted(&self, a: RadialExpr<T>) -> Result<Self> {
        a.check_radial("phase shift")?;
        let mut out = self.clone();
        out.phases.push(PhaseShift::Radial(a));
        Ok(out)
    }

    /// Same breather started on the initial curve `b(c)`; the resulting shift
    /// `b(c(r))/σ(r)` is automatically radial because `c'(0) = σ'(0) = 0`.
    pub fn phase_shifted_by_curve(&self, b: RadialExpr<T>) -> Self {
        let mut out = self.clone();
        out.phases.push(PhaseShift::InitialCurve(b));
        out
    }

    /// `N(c(r)²)`, the amplitude of the oscillator at radius `r`.
    pub fn oscillator_amplitude(&self, r: T) -> Result<T> {
        let c = self.c_of_r(r)?;
        self.period_map.amplitude(c * c)
    }

    /// `max_t |ψ(r, t)| = τ(r) N(c(r)²)`.
    pub fn max_abs_psi(&self, r: T) -> Result<T> {
        Ok(self.sigma_tau(r).1 * self.oscillator_amplitude(r)?)
    }

    /// Pointwise envelope `τ(r) √M(g(r))`, times `√((p+1)/(p-1))` for Minus.
    pub fn amplitude_bound(&self, r: T) -> Result<T> {
        let c = self.c_of_r(r)?;
        let tau = self.sigma_tau(r).1;
        let p = self.p();
        let factor = match self.sign() {
            Sign::Plus => T::one(),
            Sign::Minus => ((p + T::one()) / (p - T::one())).sqrt(),
        };
        Ok(factor * tau * c)
    }

    /// Fits `log max_t |ψ(r, ·)|` against `r` over `r_grid`.
    pub fn decay_rate(&self, r_grid: &[T]) -> Result<DecayReport> {
        let mut samples = Vec::with_capacity(r_grid.len());
        for &r in r_grid {
            samples.push((r, self.max_abs_psi(r)?));
        }
        let (xs, ys): (Vec<T>, Vec<T>) = samples
            .iter()
            .filter(|(_, m)| *m > T::zero() && m.is_finite())
            .map(|&(r, m)| (r, m.ln()))
            .unzip();
        if xs.len() < 3 {
            return Err(Error::Fit(format!(
                "only {} of {} tail samples are nonzero",
                xs.len(),
                samples.len()
            )));
        }
        let (slope, _) = linear_fit(&xs, &ys).ok_or_else(|| Error::Fit("degenerate decay grid".into()))?;
        let fitted_rate = -slope.as_f64();
        let delta = self.profile.delta().as_f64();
        Ok(DecayReport {
            r_start: xs[0].as_f64(),
            r_end: xs[xs.len() - 1].as_f64(),
            fitted_rate,
            configured_delta: delta,
            certified: fitted_rate >= delta,
            samples: samples.into_iter().map(|(r, m)| [r.as_f64(), m.as_f64()]).collect(),
        })
    }
}

/// Equispaced tail grid `[5/δ, 10/δ]` used for decay fits.
pub fn decay_grid<T: Real>(delta: T, n: usize) -> Vec<T> {
    let n = n.max(3);
    let (a, b) = (T::of(5.0) / delta, T::of(10.0) / delta);
    (0..n)
        .map(|i| a + (b - a) * T::from_usize(i).unwrap() / T::from_usize(n - 1).unwrap())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub r_start: f64,
    pub r_end: f64,
    /// `-slope` of the fit, an estimate of the spatial decay rate.
    pub fitted_rate: f64,
    pub configured_delta: f64,
    pub certified: bool,
    /// `(r, max_t |ψ(r, ·)|)`.
    pub samples: Vec<[f64; 2]>,
}

fn check_radius<T: Real>(r: T) -> Result<()> {
    if !(r >= T::zero()) || !r.is_finite() {
        return Err(Error::domain(format!("radius must be finite and >= 0, got {r}")));
    }
    Ok(())
}

pub(crate) fn norm<T: Real>(x: [T; 3]) -> T {
    x[0].hypot(x[1]).hypot(x[2])
}

/// Radial amplitude `φ(r)` of the complex monochromatic breather
/// `e^{iωt} φ(|x|) x/|x|`, `ω = 2π/T`, solving
/// `-ω² s̃ + q̃ ± Ṽ |φ|^{p-1} = 0`.
#[derive(Debug, Clone)]
pub struct ComplexBreather<T> {
    profile: CoefficientProfile<T>,
}

impl<T: Real> ComplexBreather<T> {
    pub fn new(profile: CoefficientProfile<T>) -> Self {
        Self { profile }
    }

    pub fn profile(&self) -> &CoefficientProfile<T> {
        &self.profile
    }

    pub fn omega(&self) -> T {
        T::two_pi() / self.profile.period()
    }

    /// `±((ω/σ)² - 1) q̃/Ṽ` written as `∓ d (4π + d)/g² · q̃/Ṽ` with
    /// `d = g - 2π`, so it keeps full relative accuracy for small `d`.
    fn bracket(&self, r: T) -> Jet<T> {
        let d = self.profile.detuning_jet(r);
        let g = d + Jet::constant(T::two_pi());
        let four_pi = Jet::constant(T::of(2.0) * T::two_pi());
        let ratio = self.profile.q(r) / self.profile.v(r);
        (d * (d + four_pi) / (g * g) * ratio).scale(-self.profile.sign().factor::<T>())
    }

    /// `φ(r)`; a negative bracket means (H1)/(H1)' fails at `r`.
    pub fn amplitude(&self, r: T) -> Result<T> {
        check_radius(r)?;
        let b = self.bracket(r).v;
        if b < T::zero() {
            let name = match self.profile.sign() {
                Sign::Plus => "H1",
                Sign::Minus => "H1'",
            };
            return Err(Error::hypothesis(name, format!("negative amplitude bracket {b:e} at r = {r}")));
        }
        Ok(abs_pow(b, T::one() / (self.profile.p() - T::one())))
    }

    /// `|-ω² s̃ + q̃ ± Ṽ φ^{p-1}| / q̃`.
    pub fn algebraic_residual(&self, r: T) -> Result<T> {
        let phi = self.amplitude(r)?;
        let pr = &self.profile;
        let w2 = self.omega() * self.omega();
        let nonlinear = pr.sign().factor::<T>() * pr.v(r).v * abs_pow(phi, pr.p() - T::one());
        let q = pr.q(r).v;
        Ok(((q - w2 * pr.s(r).v) + nonlinear).abs() / q)
    }
}

impl<T: Real> RadialFunction<T> for ComplexBreather<T> {
    fn jet(&self, r: T) -> Jet<T> {
        let b = self.bracket(r);
        if !(b.v > T::zero()) {
            return Jet::constant(T::zero());
        }
        b.powf(T::one() / (self.profile.p() - T::one()))
    }
}

/// `φ(r)` for a profile; see [`ComplexBreather`].
pub fn complex_breather<T: Real>(profile: &CoefficientProfile<T>, r: T) -> Result<T> {
    ComplexBreather::new(profile.clone()).amplitude(r)
}
