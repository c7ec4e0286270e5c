//! First integrals, amplitude and period functions of the model oscillators
//! `ÿ + y ± |y|^{p-1} y = 0`, and the inverse period map.
//!
//! Orbits are labelled by their energy `e = A±(y, ẏ)`. With
//! `w = 2/(p+1) N(e)^{p-1}` the period is `L(e) = F(w)` where
//!
//! ```text
//! F(w) = 4 ∫₀^{π/2} (1 ± w κ(sin θ))^{-1/2} dθ,   κ(z) = (1 - z^{p+1}) / (1 - z²)
//! ```
//!
//! i.e. the endpoint singularity `1/√(1-z²)` has been absorbed by `z = sin θ`.
//! The inverse map is computed as `M = Φ ∘ F⁻¹`, solving for `w` through the
//! period gap `|F(w) - 2π|`, which is evaluated without cancellation so that
//! `M` keeps full relative accuracy as `s → 2π`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadSettings};
use crate::roots::{brent, RootSettings};
use crate::scalar::{abs_pow, Real};

/// Sign in front of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// `+1` for [`Sign::Plus`], `-1` for [`Sign::Minus`].
    #[inline]
    pub fn factor<T: Real>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(Sign::Plus),
            "minus" | "-" => Ok(Sign::Minus),
            other => Err(Error::config(format!("unknown sign `{other}` (expected plus or minus)"))),
        }
    }
}

/// Nonlinearity exponent, `p > 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Exponent<T>(T);

impl<T: Real> Exponent<T> {
    pub fn new(p: T) -> Result<Self> {
        if p.is_finite() && p > T::one() {
            Ok(Self(p))
        } else {
            Err(Error::domain(format!("exponent p must satisfy p > 1, got {p}")))
        }
    }

    #[inline]
    pub fn get(self) -> T {
        self.0
    }
}

/// Value of the first integral labelling a periodic orbit.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct OrbitEnergy<T>(pub T);

impl<T: Real> OrbitEnergy<T> {
    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    /// Speed at `y = 0`, i.e. the initial curve parameter `c` with `A(0, c) = c²`.
    #[inline]
    pub fn initial_speed(self) -> T {
        self.0.sqrt()
    }
}

/// Energy of the separatrix through the saddles `(±1, 0)` of the Minus system.
pub fn separatrix_energy<T: Real>(p: T) -> T {
    (p - T::one()) / (p + T::one())
}

/// `A±(ξ, η) = η² + ξ² ± 2/(p+1) |ξ|^{p+1}`.
pub fn first_integral<T: Real>(sign: Sign, p: T, xi: T, eta: T) -> T {
    let two = T::of(2.0);
    eta * eta + xi * xi + sign.factor::<T>() * two / (p + T::one()) * abs_pow(xi, p + T::one())
}

/// `κ(z) = (1 - z^{p+1}) / (1 - z²)` on `[0, 1]`, with the limit `(p+1)/2` at `z = 1`.
pub fn kappa<T: Real>(z: T, p: T) -> Result<T> {
    if !(z >= T::zero() && z <= T::one()) {
        return Err(Error::domain(format!("kappa requires z in [0, 1], got {z}")));
    }
    Ok(kappa_from_gap(T::one() - z, p))
}

/// κ as a function of `d = 1 - z`, accurate as `d → 0`.
fn kappa_from_gap<T: Real>(d: T, p: T) -> T {
    let one = T::one();
    let z = one - d;
    if d == T::zero() {
        return (p + one) / T::of(2.0);
    }
    // (1 - (1-d)^{p+1}) / d, with the numerator kept relatively accurate
    let ratio = -((p + one) * (-d).ln_1p()).exp_m1() / d;
    ratio / (one + z)
}

/// `(p+1)/2 - κ` as a function of `d = 1 - z`, without cancellation near `d = 0`.
fn kappa_deficit_from_gap<T: Real>(d: T, p: T) -> T {
    let one = T::one();
    let two = T::of(2.0);
    if d >= T::of(0.25) / (p + one) {
        return (p + one) / two - kappa_from_gap(d, p);
    }
    // d·N(d) = (p+1)(p-1)/2 d² + Σ_{k≥3} C(p+1, k) (-d)^k,  deficit = N / (2 - d)
    let mut sum = (p + one) * (p - one) / two * d * d;
    let mut binom = (p + one) * p / two;
    let mut power = d * d;
    for k in 3..80 {
        let kf = T::from_usize(k).unwrap_or_else(T::one);
        binom = binom * (p + one - kf + one) / kf;
        power = -power * d;
        let term = binom * power;
        sum = sum + term;
        if term.abs() <= T::epsilon() * T::of(0.01) * sum.abs() {
            break;
        }
    }
    sum / d / (two - d)
}

/// `1 - sin θ = 2 sin²(π/4 - θ/2)`, exact to rounding for θ near π/2.
#[inline]
fn one_minus_sin<T: Real>(theta: T) -> T {
    let s = (T::FRAC_PI_4() - T::of(0.5) * theta).sin();
    T::of(2.0) * s * s
}

/// `Φ(w) = ((p+1)/2)^{2/(p-1)} (w^{2/(p-1)} ± w^{(p+1)/(p-1)})`, the orbit energy
/// as a function of `w = 2/(p+1) N^{p-1}`.
pub fn phi_map<T: Real>(sign: Sign, p: T, w: T) -> Result<T> {
    let one = T::one();
    let two = T::of(2.0);
    if !(w >= T::zero()) || !w.is_finite() {
        return Err(Error::domain(format!("phi_map requires w >= 0, got {w}")));
    }
    if sign == Sign::Minus && w > two / (p + one) {
        return Err(Error::domain(format!(
            "phi_map (minus) requires w <= 2/(p+1) = {}, got {w}",
            two / (p + one)
        )));
    }
    if w == T::zero() {
        return Ok(T::zero());
    }
    let lead = abs_pow((p + one) / two * w, two / (p - one));
    Ok(lead * (one + sign.factor::<T>() * w))
}

/// Tolerances used by a [`PeriodMap`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodSettings {
    pub quadrature: QuadSettings,
    /// Minus only: inversion never returns energies above `e* - separatrix_margin`.
    pub separatrix_margin: f64,
}

impl Default for PeriodSettings {
    fn default() -> Self {
        Self {
            quadrature: QuadSettings::default(),
            separatrix_margin: 1e-12,
        }
    }
}

/// Period function `L` and its inverse `M = L⁻¹` for one sign and exponent.
///
/// Plus: `L` maps `[0, ∞)` decreasingly onto `(0, 2π]`.
/// Minus: `L` maps `[0, e*)` increasingly onto `[2π, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodMap<T> {
    sign: Sign,
    p: T,
    settings: PeriodSettings,
}

impl<T: Real> PeriodMap<T> {
    pub fn new(sign: Sign, p: T) -> Result<Self> {
        Self::with_settings(sign, p, PeriodSettings::default())
    }

    pub fn with_settings(sign: Sign, p: T, settings: PeriodSettings) -> Result<Self> {
        let p = Exponent::new(p)?.get();
        Ok(Self { sign, p, settings })
    }

    #[inline]
    pub fn sign(&self) -> Sign {
        self.sign
    }

    #[inline]
    pub fn p(&self) -> T {
        self.p
    }

    pub fn settings(&self) -> &PeriodSettings {
        &self.settings
    }

    pub fn first_integral(&self, xi: T, eta: T) -> T {
        first_integral(self.sign, self.p, xi, eta)
    }

    /// Upper end of the energy range with periodic orbits (`∞` for Plus).
    pub fn energy_limit(&self) -> T {
        match self.sign {
            Sign::Plus => T::infinity(),
            Sign::Minus => separatrix_energy(self.p),
        }
    }

    /// Upper end of the admissible `w` range (`∞` for Plus, `2/(p+1)` for Minus).
    pub fn w_limit(&self) -> T {
        match self.sign {
            Sign::Plus => T::infinity(),
            Sign::Minus => T::of(2.0) / (self.p + T::one()),
        }
    }

    fn check_energy(&self, e: T) -> Result<()> {
        if !(e >= T::zero()) || !e.is_finite() {
            return Err(Error::domain(format!("orbit energy must be finite and >= 0, got {e}")));
        }
        if self.sign == Sign::Minus && e >= self.energy_limit() {
            return Err(Error::domain(format!(
                "minus orbit energy {e} is not below the separatrix energy {}",
                self.energy_limit()
            )));
        }
        Ok(())
    }

    fn check_w(&self, w: T) -> Result<()> {
        if !(w >= T::zero()) || !w.is_finite() {
            return Err(Error::domain(format!("w must be finite and >= 0, got {w}")));
        }
        if self.sign == Sign::Minus && w >= self.w_limit() {
            return Err(Error::domain(format!(
                "minus period integral requires w < 2/(p+1) = {}, got {w}",
                self.w_limit()
            )));
        }
        Ok(())
    }

    /// Maximal amplitude `N(e)` of the orbit at energy `e`.
    pub fn amplitude(&self, e: T) -> Result<T> {
        self.check_energy(e)?;
        if e == T::zero() {
            return Ok(T::zero());
        }
        let one = T::one();
        let p = self.p;
        let upper = match self.sign {
            Sign::Plus => e.sqrt() * (one + T::of(4.0) * T::epsilon()),
            Sign::Minus => ((p + one) * e / (p - one)).sqrt().min(one),
        };
        let residual = |n: T| Ok(self.first_integral(n, T::zero()) - e);
        brent(residual, T::zero(), upper, &RootSettings::default())
    }

    /// `w = 2/(p+1) N(e)^{p-1}`.
    pub fn w_of_energy(&self, e: T) -> Result<T> {
        let n = self.amplitude(e)?;
        Ok(T::of(2.0) / (self.p + T::one()) * abs_pow(n, self.p - T::one()))
    }

    /// Energy of the orbit with parameter `w`, i.e. `Φ(w)`.
    pub fn energy_of_w(&self, w: T) -> Result<T> {
        phi_map(self.sign, self.p, w)
    }

    /// `(κ(sin θ), 1 ± w κ(sin θ))`, the Minus radicand assembled from
    /// `(w* - w)(p+1)/2 + w ((p+1)/2 - κ)` so it stays accurate near `w* = 2/(p+1)`.
    #[inline]
    fn radicand(&self, theta: T, w: T) -> (T, T) {
        let p = self.p;
        let d = one_minus_sin(theta);
        let k = kappa_from_gap(d, p);
        let a = match self.sign {
            Sign::Plus => T::one() + w * k,
            Sign::Minus => {
                let half_p1 = (p + T::one()) / T::of(2.0);
                (self.w_limit() - w) * half_p1 + w * kappa_deficit_from_gap(d, p)
            }
        };
        (k, a)
    }

    fn integral<G: Fn(T) -> T>(&self, g: G) -> Result<T> {
        Ok(integrate(g, T::zero(), T::FRAC_PI_2(), &self.settings.quadrature)?.value)
    }

    /// `F(w)`.
    pub fn period_integral(&self, w: T) -> Result<T> {
        self.check_w(w)?;
        let four = T::of(4.0);
        self.integral(|th| four / self.radicand(th, w).1.sqrt())
    }

    /// `F'(w)`; negative for Plus, positive for Minus.
    pub fn period_integral_prime(&self, w: T) -> Result<T> {
        self.check_w(w)?;
        let v = self.integral(|th| {
            let (k, a) = self.radicand(th, w);
            k / (a * a.sqrt())
        })?;
        Ok(-T::of(2.0) * self.sign.factor::<T>() * v)
    }

    /// `F''(w)`; positive for both signs.
    pub fn period_integral_second(&self, w: T) -> Result<T> {
        self.check_w(w)?;
        let v = self.integral(|th| {
            let (k, a) = self.radicand(th, w);
            k * k / (a * a * a.sqrt())
        })?;
        Ok(T::of(3.0) * v)
    }

    /// Period gap `|F(w) - 2π|`, integrated in a cancellation-free form.
    pub fn period_gap_of_w(&self, w: T) -> Result<T> {
        self.check_w(w)?;
        if w == T::zero() {
            return Ok(T::zero());
        }
        let four = T::of(4.0);
        // |a^{-1/2} - 1| = w κ / (√a (1 + √a)),  a = 1 ± w κ
        self.integral(|th| {
            let (k, a) = self.radicand(th, w);
            let ra = a.sqrt();
            four * w * k / (ra * (T::one() + ra))
        })
    }

    /// Period `L(e)` of the orbit at energy `e`.
    pub fn period(&self, e: T) -> Result<T> {
        let w = self.w_of_energy(e)?;
        self.period_of_w(w)
    }

    /// `F(w)` assembled as `2π ∓ |F(w) - 2π|`; exact at `w = 0`.
    pub fn period_of_w(&self, w: T) -> Result<T> {
        Ok(T::two_pi() - self.sign.factor::<T>() * self.period_gap_of_w(w)?)
    }

    /// Largest `w` the inversion may return (Minus separatrix cap).
    fn w_cap(&self) -> Result<T> {
        let e_cap = self.energy_limit() - T::of(self.settings.separatrix_margin);
        self.w_of_energy(e_cap)
    }

    /// Largest period reachable by [`Self::invert_period`] (Minus), `2π` for Plus.
    pub fn max_period(&self) -> Result<T> {
        match self.sign {
            Sign::Plus => Ok(T::two_pi()),
            Sign::Minus => {
                let w = self.w_cap()?;
                Ok(T::two_pi() + self.period_gap_of_w(w)?)
            }
        }
    }

    /// Solves `|F(w) - 2π| = gap` for `w`.
    pub fn w_for_gap(&self, gap: T) -> Result<T> {
        if !(gap >= T::zero()) || !gap.is_finite() {
            return Err(Error::domain(format!("period gap must be finite and >= 0, got {gap}")));
        }
        if gap == T::zero() {
            return Ok(T::zero());
        }
        let slope = self.period_integral_prime(T::zero())?.abs();
        let linear = gap / slope;
        let f = |w: T| Ok(self.period_gap_of_w(w)? - gap);
        let settings = RootSettings::default();
        match self.sign {
            Sign::Plus => {
                if gap >= T::two_pi() {
                    return Err(Error::domain(format!(
                        "plus periods lie in (0, 2π]; requested period {}",
                        T::two_pi() - gap
                    )));
                }
                // gap(w) is concave with gap'(0) = slope, so the root lies above `linear`
                let lo = linear / T::of(2.0);
                let mut hi = linear * T::of(2.0);
                let mut grow = 0;
                while self.period_gap_of_w(hi)? < gap {
                    hi = hi * T::of(4.0);
                    grow += 1;
                    if grow > 400 || !hi.is_finite() {
                        return Err(Error::RootFinding(format!("could not bracket gap {gap}")));
                    }
                }
                brent(f, lo, hi, &settings)
            }
            Sign::Minus => {
                // gap(w) is convex with gap'(0) = slope, so the root lies below `linear`
                let cap = self.w_cap()?;
                let hi = (linear * T::of(2.0)).min(cap);
                if self.period_gap_of_w(hi)? < gap {
                    return Err(Error::domain(format!(
                        "minus period {} exceeds the separatrix cap {}",
                        T::two_pi() + gap,
                        T::two_pi() + self.period_gap_of_w(cap)?
                    )));
                }
                brent(f, T::zero(), hi, &settings)
            }
        }
    }

    /// Orbit energy for a prescribed gap `|s - 2π|` on the valid side of `2π`.
    pub fn invert_gap(&self, gap: T) -> Result<OrbitEnergy<T>> {
        let w = self.w_for_gap(gap)?;
        Ok(OrbitEnergy(self.energy_of_w(w)?))
    }

    /// `M(s) = L⁻¹(s)`. Plus accepts `s ∈ (0, 2π]`, Minus `s ∈ [2π, ∞)`
    /// up to the separatrix cap.
    pub fn invert_period(&self, s: T) -> Result<OrbitEnergy<T>> {
        if !s.is_finite() {
            return Err(Error::domain(format!("period must be finite, got {s}")));
        }
        let gap = s - T::two_pi();
        match self.sign {
            Sign::Plus if s <= T::zero() || gap > T::zero() => Err(Error::domain(format!(
                "plus periods lie in (0, 2π], got {s}"
            ))),
            Sign::Minus if gap < T::zero() => Err(Error::domain(format!(
                "minus periods lie in [2π, ∞), got {s}"
            ))),
            _ => self.invert_gap(gap.abs()),
        }
    }
}
