//! Radial coefficient profiles `(s̃, q̃, Ṽ)`, a builtin family, JSON
//! ingestion, and grid checks of the hypotheses (H1)/(H1)', (H2), (H3), (H4).
//!
//! The quantity every check revolves around is the rescaled frequency
//! `g(r) = T √(q̃(r)/s̃(r))` with `T = 2π √(s̃(0)/q̃(0))`, so `g(0) = 2π`.
//! Profiles may carry an explicit *detuning* `g(r) - 2π`; when present it is
//! used instead of the difference `g(r) - 2π`, which loses all relative
//! accuracy once the detuning drops below roundoff.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_plane::Sign;
use crate::radial::{Jet, RadialExpr};
use crate::scalar::{abs_pow, linear_fit, Real};

/// Parameters of the builtin family
/// `ε(r) = a r^{2m} e^{-β r²} / (1 + r^{2m})`, `g = 2π ∓ ε`, `s̃ = Ṽ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinParams {
    pub a: f64,
    pub m: u32,
    pub beta: f64,
}

impl Default for BuiltinParams {
    fn default() -> Self {
        Self { a: 1.0, m: 3, beta: 1.0 }
    }
}

/// Parameters of a user-defined profile. Exactly one of `q` and `detuning`
/// must be given; with `detuning` (the signed offset `g(r) - 2π`, zero at
/// the origin) `q̃ = s̃ ((2π + detuning)/period)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomParams {
    pub s: RadialExpr<f64>,
    pub v: RadialExpr<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<RadialExpr<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<RadialExpr<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

/// Profile file: `{ "p", "sign", "family", "params", "delta" }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub p: f64,
    pub sign: Sign,
    pub family: String,
    pub params: serde_json::Value,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileFamily {
    Builtin(BuiltinParams),
    Custom(CustomParams),
}

impl ProfileConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("profile JSON: {e}")))
    }

    pub fn builtin(p: f64, sign: Sign, params: BuiltinParams, delta: f64) -> Self {
        Self {
            p,
            sign,
            family: "builtin".into(),
            params: serde_json::to_value(params).expect("builtin params serialize"),
            delta,
        }
    }

    pub fn family(&self) -> Result<ProfileFamily> {
        let parse_err = |e: serde_json::Error| Error::config(format!("profile params: {e}"));
        match self.family.as_str() {
            "builtin" => Ok(ProfileFamily::Builtin(
                serde_json::from_value(self.params.clone()).map_err(parse_err)?,
            )),
            "custom" => Ok(ProfileFamily::Custom(
                serde_json::from_value(self.params.clone()).map_err(parse_err)?,
            )),
            other => Err(Error::config(format!("unknown profile family `{other}` (expected builtin or custom)"))),
        }
    }

    pub fn build<T: Real>(&self) -> Result<CoefficientProfile<T>> {
        let p = T::of(self.p);
        let delta = T::of(self.delta);
        match self.family()? {
            ProfileFamily::Builtin(b) => CoefficientProfile::builtin(p, self.sign, T::of(b.a), b.m, T::of(b.beta), delta),
            ProfileFamily::Custom(c) => match (&c.q, &c.detuning) {
                (Some(q), None) => {
                    if c.period.is_some() {
                        return Err(Error::config("`period` only applies together with `detuning`"));
                    }
                    CoefficientProfile::new(p, self.sign, c.s.cast(), q.cast(), c.v.cast(), delta)
                }
                (None, Some(d)) => CoefficientProfile::from_detuning(
                    p,
                    self.sign,
                    c.s.cast(),
                    c.v.cast(),
                    d.cast(),
                    T::of(c.period.unwrap_or(std::f64::consts::TAU)),
                    delta,
                ),
                _ => Err(Error::config("custom profile needs exactly one of `q` and `detuning`")),
            },
        }
    }
}

/// Radial coefficients `s̃, q̃, Ṽ` with exponent, sign and decay rate δ.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientProfile<T> {
    p: T,
    sign: Sign,
    s: RadialExpr<T>,
    q: RadialExpr<T>,
    v: RadialExpr<T>,
    detuning: Option<RadialExpr<T>>,
    delta: T,
    period: T,
}

impl<T: Real> CoefficientProfile<T> {
    /// Profile from the three coefficients; `T` is derived from their values at 0.
    pub fn new(p: T, sign: Sign, s: RadialExpr<T>, q: RadialExpr<T>, v: RadialExpr<T>, delta: T) -> Result<Self> {
        Self::validate_scalars(p, delta)?;
        for (name, f) in [("s", &s), ("q", &q), ("V", &v)] {
            f.check_radial(name)?;
            let v0 = f.eval(T::zero()).v;
            if !(v0 > T::zero()) {
                return Err(Error::config(format!("{name}(0) must be positive, got {v0}")));
            }
        }
        let period = T::two_pi() * (s.eval(T::zero()).v / q.eval(T::zero()).v).sqrt();
        Ok(Self { p, sign, s, q, v, detuning: None, delta, period })
    }

    /// Profile from `s̃`, `Ṽ`, the detuning `g - 2π` and the period `T`.
    pub fn from_detuning(
        p: T,
        sign: Sign,
        s: RadialExpr<T>,
        v: RadialExpr<T>,
        detuning: RadialExpr<T>,
        period: T,
        delta: T,
    ) -> Result<Self> {
        Self::validate_scalars(p, delta)?;
        if !(period > T::zero()) || !period.is_finite() {
            return Err(Error::config(format!("period must be positive, got {period}")));
        }
        detuning.check_radial("detuning")?;
        let d0 = detuning.eval(T::zero()).v;
        if d0.abs() > T::of(1e-14) {
            return Err(Error::config(format!("detuning must vanish at r = 0, got {d0}")));
        }
        let g = RadialExpr::Sum(vec![RadialExpr::Const(T::two_pi()), detuning.clone()]);
        let ratio = RadialExpr::Product(vec![g, RadialExpr::Const(T::one() / period)]);
        let q = RadialExpr::Product(vec![s.clone(), ratio.clone(), ratio]);
        let mut profile = Self::new(p, sign, s, q, v, delta)?;
        profile.detuning = Some(detuning);
        profile.period = period;
        Ok(profile)
    }

    /// The builtin family. `a ∈ (0, 2π)`, `m ≥ 1`, `β > 0`; (H2) additionally
    /// needs `m > p - 1`, which is left to [`check_hypotheses`] to judge.
    pub fn builtin(p: T, sign: Sign, a: T, m: u32, beta: T, delta: T) -> Result<Self> {
        if !(a > T::zero() && a < T::two_pi()) {
            return Err(Error::config(format!("builtin amplitude a must lie in (0, 2π), got {a}")));
        }
        if m < 1 {
            return Err(Error::config("builtin exponent m must be at least 1"));
        }
        if !(beta > T::zero()) || !beta.is_finite() {
            return Err(Error::config(format!("builtin beta must be positive, got {beta}")));
        }
        let eps = builtin_detuning(a, m, beta);
        let detuning = match sign {
            Sign::Plus => RadialExpr::Product(vec![RadialExpr::Const(-T::one()), eps]),
            Sign::Minus => eps,
        };
        let one = RadialExpr::Const(T::one());
        Self::from_detuning(p, sign, one.clone(), one, detuning, T::two_pi(), delta)
    }

    fn validate_scalars(p: T, delta: T) -> Result<()> {
        if !(p > T::one()) || !p.is_finite() {
            return Err(Error::config(format!("exponent p must satisfy p > 1, got {p}")));
        }
        if !(delta > T::zero()) || !delta.is_finite() {
            return Err(Error::config(format!("decay rate delta must be positive, got {delta}")));
        }
        Ok(())
    }

    /// Same coefficients, other equation sign.
    pub fn with_sign(&self, sign: Sign) -> Self {
        Self { sign, ..self.clone() }
    }

    pub fn with_delta(&self, delta: T) -> Result<Self> {
        Self::validate_scalars(self.p, delta)?;
        Ok(Self { delta, ..self.clone() })
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// `T = 2π √(s̃(0)/q̃(0))`.
    pub fn period(&self) -> T {
        self.period
    }

    pub fn s(&self, r: T) -> Jet<T> {
        self.s.eval(r)
    }

    pub fn q(&self, r: T) -> Jet<T> {
        self.q.eval(r)
    }

    pub fn v(&self, r: T) -> Jet<T> {
        self.v.eval(r)
    }

    pub fn has_exact_detuning(&self) -> bool {
        self.detuning.is_some()
    }

    /// `g(r) = σ(r) T = T √(q̃/s̃)`.
    pub fn g(&self, r: T) -> T {
        match &self.detuning {
            Some(d) => T::two_pi() + d.eval(r).v,
            None => self.period * (self.q.eval(r).v / self.s.eval(r).v).sqrt(),
        }
    }

    /// Signed detuning `g(r) - 2π`.
    pub fn detuning(&self, r: T) -> T {
        match &self.detuning {
            Some(d) => d.eval(r).v,
            None => self.g(r) - T::two_pi(),
        }
    }

    /// Detuning `g - 2π` with two radial derivatives.
    pub fn detuning_jet(&self, r: T) -> Jet<T> {
        match &self.detuning {
            Some(d) => d.eval(r),
            None => {
                let g = (self.q(r) / self.s(r)).sqrt().scale(self.period);
                g - Jet::constant(T::two_pi())
            }
        }
    }

    /// `(σ, τ) = (√(q̃/s̃), (q̃/Ṽ)^{1/(p-1)})`.
    pub fn sigma_tau(&self, r: T) -> (T, T) {
        let (s, q, v) = (self.s(r).v, self.q(r).v, self.v(r).v);
        ((q / s).sqrt(), abs_pow(q / v, T::one() / (self.p - T::one())))
    }
}

/// `ε(r) = a r^{2m} e^{-β r²} / (1 + r^{2m})`.
pub fn builtin_detuning<T: Real>(a: T, m: u32, beta: T) -> RadialExpr<T> {
    RadialExpr::quotient(
        RadialExpr::Product(vec![RadialExpr::monomial(a, 2 * m), RadialExpr::gaussian(T::one(), beta)]),
        RadialExpr::Sum(vec![RadialExpr::Const(T::one()), RadialExpr::monomial(T::one(), 2 * m)]),
    )
}

/// Sample radii for [`check_hypotheses`]: `n_log` log-spaced points in
/// `[1e-4, 1e-1]` followed by `n_lin` equispaced points up to
/// `r_max = 20/δ`.
pub fn hypothesis_grid<T: Real>(delta: T, n_log: usize, n_lin: usize) -> Vec<T> {
    let n_log = n_log.max(2);
    let n_lin = n_lin.max(2);
    let (lo, hi) = (T::of(1e-4).ln(), T::of(1e-1).ln());
    let r_max = T::of(20.0) / delta;
    let mut grid = vec![T::zero()];
    for i in 0..n_log {
        let f = T::from_usize(i).unwrap() / T::from_usize(n_log - 1).unwrap();
        grid.push((lo + f * (hi - lo)).exp());
    }
    let start = T::of(1e-1);
    for i in 1..=n_lin {
        let f = T::from_usize(i).unwrap() / T::from_usize(n_lin).unwrap();
        grid.push(start + f * (r_max - start));
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub radius: f64,
    pub value: f64,
}

/// `w = |g - 2π|^{1/(p-1)}` and its finite-difference derivatives at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularitySample {
    pub radius: f64,
    pub w: f64,
    pub dw: f64,
    pub d2w: f64,
}

/// Outcome of the grid checks. These are numerical evidence, not proofs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub sign: Sign,
    /// `H1` for Plus, `H1'` for Minus.
    pub h1_name: String,
    pub h1_ok: bool,
    /// `g < 2π` on the sampled `r > 0`.
    pub h1_below_ok: bool,
    /// `g > 2π` on the sampled `r > 0`.
    pub h1_above_ok: bool,
    /// Sample closest to violating the sign-appropriate condition.
    pub h1_witness: Witness,
    /// Radius beyond which the detuning underflows to zero, if any.
    pub h1_underflow_from: Option<f64>,
    pub h2_ok: bool,
    pub h2_samples: Vec<RegularitySample>,
    pub h3_ok: bool,
    pub h3_delta: f64,
    pub h3_fitted_slope: f64,
    /// Largest δ the tail fit certifies, `-slope/(p-1)`.
    pub h3_certified_delta: f64,
    /// `max |g - 2π| e^{δ(p-1) r}` over the grid.
    pub h3_weighted_sup: Witness,
    pub h4_ok: bool,
    pub h4_sup_q_over_v: Witness,
    pub positivity_ok: bool,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.first_failure().is_none()
    }

    /// Name of the first failing hypothesis.
    pub fn first_failure(&self) -> Option<&str> {
        if !self.positivity_ok {
            Some("positivity")
        } else if !self.h1_ok {
            Some(&self.h1_name)
        } else if !self.h2_ok {
            Some("H2")
        } else if !self.h3_ok {
            Some("H3")
        } else if !self.h4_ok {
            Some("H4")
        } else {
            None
        }
    }

    /// `Err(Error::Hypothesis)` naming the first failure.
    pub fn require(&self) -> Result<()> {
        match self.first_failure() {
            None => Ok(()),
            Some(name) => Err(Error::hypothesis(name, self.failure_detail(name))),
        }
    }

    fn failure_detail(&self, name: &str) -> String {
        match name {
            "positivity" => "a coefficient is not positive on the grid".into(),
            "H2" => "|g - 2π|^{1/(p-1)} does not vanish in the C² sense at the origin".into(),
            "H3" => format!(
                "tail slope {:.3e} of log|g - 2π| exceeds -δ(p-1) (certified δ = {:.3e})",
                self.h3_fitted_slope, self.h3_certified_delta
            ),
            "H4" => "q/V is unbounded on the grid".into(),
            _ => format!(
                "g(r) - 2π has the wrong sign or vanishes at r = {:.6e} (value {:.3e})",
                self.h1_witness.radius, self.h1_witness.value
            ),
        }
    }
}

/// Largest value `|w|`, `|w'|`, `|w''|` may take at the smallest sampled radius.
const H2_LIMIT: f64 = 1e-3;
/// Relative slack allowed when checking that the H2 samples decrease.
const H2_SLACK: f64 = 1e-6;

/// Checks the hypotheses on `grid` (sorted ascending, starting at or near 0).
///
/// * (H1)/(H1)': sign of `g - 2π` at every sampled `r > 0`. Samples where the
///   detuning underflows to exactly zero at the end of a decaying tail are
///   reported via `h1_underflow_from`, not counted as violations.
/// * (H2): `w = |g - 2π|^{1/(p-1)}` and its centered differences (step r/4)
///   at the grid radii in `[1e-4, 1e-1]` must decrease towards the origin
///   and end below `1e-3`.
/// * (H3): least-squares slope of `log|g - 2π|` against `r` over the tail
///   half of the grid must be at most `-δ(p-1)`.
/// * (H4): `sup q̃/Ṽ` over the grid must be finite.
pub fn check_hypotheses<T: Real>(profile: &CoefficientProfile<T>, grid: &[T]) -> HypothesisReport {
    let p = profile.p();
    let sign = profile.sign();
    let positive: Vec<T> = grid.iter().copied().filter(|&r| r > T::zero()).collect();

    let positivity_ok = grid.iter().all(|&r| {
        let (s, q, v) = (profile.s(r).v, profile.q(r).v, profile.v(r).v);
        s > T::zero() && q > T::zero() && v > T::zero()
    });

    // H1 / H1'
    let gaps: Vec<T> = positive.iter().map(|&r| profile.detuning(r)).collect();
    let last_nonzero = gaps.iter().rposition(|&d| d != T::zero());
    let underflow_from = match last_nonzero {
        Some(i) if i + 1 < gaps.len() => Some(positive[i + 1]),
        _ => None,
    };
    let considered = last_nonzero.map_or(gaps.len(), |i| i + 1);
    let below_ok = last_nonzero.is_some() && gaps[..considered].iter().all(|&d| d < T::zero());
    let above_ok = last_nonzero.is_some() && gaps[..considered].iter().all(|&d| d > T::zero());
    let h1_ok = match sign {
        Sign::Plus => below_ok,
        Sign::Minus => above_ok,
    };
    let orient = -sign.factor::<T>();
    let h1_witness = positive
        .iter()
        .zip(&gaps)
        .take(considered.max(1))
        .map(|(&r, &d)| (r, d))
        .fold(None::<(T, T)>, |acc, (r, d)| match acc {
            Some((_, best)) if orient * best <= orient * d => acc,
            _ => Some((r, d)),
        })
        .map(|(r, d)| Witness { radius: r.as_f64(), value: d.as_f64() })
        .unwrap_or(Witness { radius: 0.0, value: 0.0 });

    // H2
    let w_of = |r: T| abs_pow(profile.detuning(r), T::one() / (p - T::one()));
    let mut h2_samples: Vec<RegularitySample> = positive
        .iter()
        .copied()
        .filter(|&r| r >= T::of(1e-4) * T::of(1.0 - 1e-9) && r <= T::of(1e-1) * T::of(1.0 + 1e-9))
        .map(|r| {
            let h = r / T::of(4.0);
            let (wm, w0, wp) = (w_of(r - h), w_of(r), w_of(r + h));
            RegularitySample {
                radius: r.as_f64(),
                w: w0.as_f64(),
                dw: ((wp - wm) / (T::of(2.0) * h)).as_f64(),
                d2w: ((wp - T::of(2.0) * w0 + wm) / (h * h)).as_f64(),
            }
        })
        .collect();
    h2_samples.sort_by(|a, b| b.radius.total_cmp(&a.radius));
    let decreasing = |f: fn(&RegularitySample) -> f64| {
        h2_samples
            .windows(2)
            .all(|w| f(&w[1]).abs() <= f(&w[0]).abs() * (1.0 + H2_SLACK) + f64::MIN_POSITIVE)
    };
    let h2_ok = h2_samples.len() >= 3
        && h2_samples.iter().all(|s| s.w.is_finite() && s.dw.is_finite() && s.d2w.is_finite())
        && decreasing(|s| s.w)
        && decreasing(|s| s.dw)
        && decreasing(|s| s.d2w)
        && h2_samples
            .last()
            .is_some_and(|s| s.w.abs() < H2_LIMIT && s.dw.abs() < H2_LIMIT && s.d2w.abs() < H2_LIMIT);

    // H3
    let delta = profile.delta();
    let rate = delta * (p - T::one());
    let r_end = positive.last().copied().unwrap_or_else(T::one);
    let (tail_r, tail_log): (Vec<T>, Vec<T>) = positive
        .iter()
        .zip(&gaps)
        .filter(|(&r, &d)| r >= r_end / T::of(2.0) && d != T::zero())
        .map(|(&r, &d)| (r, d.abs().ln()))
        .unzip();
    let (h3_slope, h3_certified, h3_ok) = match linear_fit(&tail_r, &tail_log) {
        Some((slope, _)) if tail_r.len() >= 3 => {
            let certified = -slope / (p - T::one());
            (slope.as_f64(), certified.as_f64(), slope <= -rate)
        }
        // the tail underflowed entirely: decay faster than any exponential
        _ if underflow_from.is_some() => (f64::NEG_INFINITY, f64::INFINITY, true),
        _ => (f64::NAN, f64::NAN, false),
    };
    let h3_weighted_sup = positive
        .iter()
        .zip(&gaps)
        .map(|(&r, &d)| (r, d.abs() * (rate * r).exp()))
        .fold(Witness { radius: 0.0, value: 0.0 }, |acc, (r, v)| {
            if v.as_f64() > acc.value {
                Witness { radius: r.as_f64(), value: v.as_f64() }
            } else {
                acc
            }
        });

    // H4
    let h4 = grid
        .iter()
        .map(|&r| (r, profile.q(r).v / profile.v(r).v))
        .fold(Witness { radius: 0.0, value: f64::NEG_INFINITY }, |acc, (r, x)| {
            let x = x.as_f64();
            if !(x <= acc.value) {
                Witness { radius: r.as_f64(), value: x }
            } else {
                acc
            }
        });
    let h4_ok = h4.value.is_finite();

    HypothesisReport {
        sign,
        h1_name: match sign {
            Sign::Plus => "H1".into(),
            Sign::Minus => "H1'".into(),
        },
        h1_ok,
        h1_below_ok: below_ok,
        h1_above_ok: above_ok,
        h1_witness,
        h1_underflow_from: underflow_from.map(Real::as_f64),
        h2_ok,
        h2_samples,
        h3_ok: h3_ok && h3_weighted_sup.value.is_finite(),
        h3_delta: delta.as_f64(),
        h3_fitted_slope: h3_slope,
        h3_certified_delta: h3_certified,
        h3_weighted_sup,
        h4_ok,
        h4_sup_q_over_v: h4,
        positivity_ok,
    }
}
