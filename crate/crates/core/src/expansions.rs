//! Leading-order behaviour of the inverse period map `M = L⁻¹` near `2π`
//! and a numerical check of exponent and prefactor.
//!
//! With `δ = |s - 2π|` and `k = 2/(p-1)`:
//!
//! ```text
//! M   ≈ α δ^k                     √M   ≈ √α δ^{1/(p-1)}
//! M'  ≈ ∓ 2α/(p-1) δ^{(3-p)/(p-1)}  √M'  ≈ ∓ √α/(p-1) δ^{(2-p)/(p-1)}
//! M'' ≈ 2α(3-p)/(p-1)² δ^{(4-2p)/(p-1)}
//! √M'' ≈ √α(2-p)/(p-1)² δ^{(3-2p)/(p-1)}
//! ```
//!
//! where the upper sign belongs to Plus (`s < 2π`) and the lower to Minus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_plane::{PeriodMap, Sign};
use crate::scalar::{abs_pow, linear_fit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCoefficients<T> {
    /// Prefactor of `M`.
    pub alpha: T,
    /// `1/|F'(0)|`.
    pub alpha_tilde: T,
    /// `F''(0)`.
    pub beta_tilde: T,
    pub p: T,
    pub sign: Sign,
}

/// Evaluates `F'(0)` and `F''(0)` by quadrature.
pub fn compute_constants<T: Real>(sign: Sign, p: T) -> Result<ExpansionCoefficients<T>> {
    let map = PeriodMap::new(sign, p)?;
    let alpha_tilde = T::one() / map.period_integral_prime(T::zero())?.abs();
    let beta_tilde = map.period_integral_second(T::zero())?;
    let k = T::of(2.0) / (p - T::one());
    let alpha = abs_pow((p + T::one()) / T::of(2.0) * alpha_tilde, k);
    Ok(ExpansionCoefficients { alpha, alpha_tilde, beta_tilde, p, sign })
}

/// Leading terms of `M`, `√M` and their first two derivatives at one `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadingTerms<T> {
    pub m: T,
    pub sqrt_m: T,
    pub m_prime: T,
    pub sqrt_m_prime: T,
    pub m_second: T,
    pub sqrt_m_second: T,
}

impl<T: Real> ExpansionCoefficients<T> {
    pub fn m_exponent(&self) -> T {
        T::of(2.0) / (self.p - T::one())
    }

    /// Distance `|s - 2π|`, rejecting the wrong side of `2π`.
    pub fn offset(&self, s: T) -> Result<T> {
        let d = s - T::two_pi();
        let ok = match self.sign {
            Sign::Plus => d < T::zero(),
            Sign::Minus => d > T::zero(),
        };
        if !ok || !s.is_finite() {
            let side = match self.sign {
                Sign::Plus => "below",
                Sign::Minus => "above",
            };
            return Err(Error::domain(format!("{} expansion needs s strictly {side} 2π, got {s}", self.sign)));
        }
        Ok(d.abs())
    }

    pub fn m_leading(&self, s: T) -> Result<LeadingTerms<T>> {
        let delta = self.offset(s)?;
        let one = T::one();
        let two = T::of(2.0);
        let pm1 = self.p - one;
        let alpha = self.alpha;
        let root = alpha.sqrt();
        let e = |num: T| abs_pow(delta, num / pm1);
        // dM/ds = -dM/dδ for Plus, +dM/dδ for Minus
        let slope_sign = -self.sign.factor::<T>();
        Ok(LeadingTerms {
            m: alpha * e(two),
            sqrt_m: root * e(one),
            m_prime: slope_sign * two * alpha / pm1 * e(T::of(3.0) - self.p),
            sqrt_m_prime: slope_sign * root / pm1 * e(T::of(2.0) - self.p),
            m_second: two * alpha * (T::of(3.0) - self.p) / (pm1 * pm1) * e(T::of(4.0) - two * self.p),
            sqrt_m_second: root * (T::of(2.0) - self.p) / (pm1 * pm1) * e(T::of(3.0) - two * self.p),
        })
    }
}

/// Convenience wrapper: constants and leading terms in one call.
pub fn m_leading<T: Real>(sign: Sign, p: T, s: T) -> Result<LeadingTerms<T>> {
    compute_constants(sign, p)?.m_leading(s)
}

/// One grid point of an expansion check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSample {
    pub s: f64,
    pub offset: f64,
    pub m: f64,
    pub m_leading: f64,
    pub m_prime_fd: f64,
    pub m_prime_leading: f64,
    pub m_second_fd: f64,
    pub m_second_leading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub sign: Sign,
    pub p: f64,
    pub alpha: f64,
    pub exponent_expected: f64,
    pub exponent_fitted: f64,
    pub exponent_rel_error: f64,
    pub prefactor_fitted: f64,
    pub prefactor_rel_error: f64,
    /// `max |M / M_leading - 1|` over the grid.
    pub max_rel_deviation: f64,
    /// `max |M'_fd / M'_leading - 1|` over samples with offset at most [`MPRIME_WINDOW`].
    pub m_prime_max_rel_deviation: f64,
    pub exponent_ok: bool,
    pub prefactor_ok: bool,
    pub m_prime_ok: bool,
    pub samples: Vec<ExpansionSample>,
}

impl FitReport {
    pub fn passed(&self) -> bool {
        self.exponent_ok && self.prefactor_ok && self.m_prime_ok
    }
}

pub const EXPONENT_TOL: f64 = 0.01;
pub const PREFACTOR_TOL: f64 = 0.02;
pub const MPRIME_TOL: f64 = 0.05;
/// Largest offset at which the first-derivative comparison is scored.
pub const MPRIME_WINDOW: f64 = 1e-4;

/// Geometric grid of periods with `|s - 2π| ∈ [1e-6, 1e-2]` on the valid side.
pub fn expansion_grid(sign: Sign, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let (lo, hi) = (1e-6f64.ln(), 1e-2f64.ln());
    (0..n)
        .map(|i| {
            let d = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
            std::f64::consts::TAU - sign.factor::<f64>() * d
        })
        .collect()
}

/// Fits `log M` against `log|s - 2π|` and compares derivatives of the
/// numerical `M` (centered differences, step `1e-3·|s - 2π|`) with the
/// leading terms.
pub fn validate_expansion<T: Real>(sign: Sign, p: T, s_grid: &[T]) -> Result<FitReport> {
    if s_grid.len() < 3 {
        return Err(Error::config("expansion fit needs at least 3 periods"));
    }
    let coeffs = compute_constants(sign, p)?;
    let map = PeriodMap::new(sign, p)?;
    let m_of_offset = |d: T| Ok::<T, Error>(map.invert_gap(d)?.value());
    let slope_sign = -sign.factor::<T>();

    let mut samples = Vec::with_capacity(s_grid.len());
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &s in s_grid {
        let offset = coeffs.offset(s)?;
        let lead = coeffs.m_leading(s)?;
        let m = m_of_offset(offset)?;
        let h = offset * T::of(1e-3);
        let (mm, mp) = (m_of_offset(offset - h)?, m_of_offset(offset + h)?);
        let m_prime_fd = slope_sign * (mp - mm) / (T::of(2.0) * h);
        let m_second_fd = (mp - T::of(2.0) * m + mm) / (h * h);
        xs.push(offset.ln());
        ys.push(m.ln());
        samples.push(ExpansionSample {
            s: s.as_f64(),
            offset: offset.as_f64(),
            m: m.as_f64(),
            m_leading: lead.m.as_f64(),
            m_prime_fd: m_prime_fd.as_f64(),
            m_prime_leading: lead.m_prime.as_f64(),
            m_second_fd: m_second_fd.as_f64(),
            m_second_leading: lead.m_second.as_f64(),
        });
    }
    let (slope, intercept) = linear_fit(&xs, &ys).ok_or_else(|| Error::Fit("degenerate expansion grid".into()))?;
    let exponent_expected = coeffs.m_exponent().as_f64();
    let alpha = coeffs.alpha.as_f64();
    let exponent_fitted = slope.as_f64();
    let prefactor_fitted = intercept.as_f64().exp();
    let exponent_rel_error = (exponent_fitted / exponent_expected - 1.0).abs();
    let prefactor_rel_error = (prefactor_fitted / alpha - 1.0).abs();
    let max_rel_deviation = samples.iter().map(|s| (s.m / s.m_leading - 1.0).abs()).fold(0.0, f64::max);
    let windowed: Vec<f64> = samples
        .iter()
        .filter(|s| s.offset <= MPRIME_WINDOW * (1.0 + 1e-9))
        .map(|s| (s.m_prime_fd / s.m_prime_leading - 1.0).abs())
        .collect();
    let m_prime_max_rel_deviation = windowed.iter().copied().fold(0.0, f64::max);
    Ok(FitReport {
        sign,
        p: p.as_f64(),
        alpha,
        exponent_expected,
        exponent_fitted,
        exponent_rel_error,
        prefactor_fitted,
        prefactor_rel_error,
        max_rel_deviation,
        m_prime_max_rel_deviation,
        exponent_ok: exponent_rel_error <= EXPONENT_TOL,
        prefactor_ok: prefactor_rel_error <= PREFACTOR_TOL,
        m_prime_ok: !windowed.is_empty() && m_prime_max_rel_deviation <= MPRIME_TOL,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn alpha_for_cubic_matches_closed_form() {
        let plus = compute_constants(Sign::Plus, 3.0).unwrap();
        assert!((plus.alpha - 4.0 / (3.0 * PI)).abs() < 1e-10);
        assert!((plus.alpha_tilde - 2.0 / (3.0 * PI)).abs() < 1e-12);
        // F''(0) = 3 ∫ κ² over a quarter turn, κ = 1 + sin²θ for p = 3: 3·(19π/16)
        assert!((plus.beta_tilde - 3.0 * 19.0 * PI / 16.0).abs() < 1e-10);
        let minus = compute_constants(Sign::Minus, 3.0).unwrap();
        assert!((minus.alpha - plus.alpha).abs() < 1e-10);
    }

    #[test]
    fn alpha_is_sign_independent() {
        for p in [1.5f64, 2.0, 3.0, 5.0] {
            let a = compute_constants(Sign::Plus, p).unwrap().alpha;
            let b = compute_constants(Sign::Minus, p).unwrap().alpha;
            assert!((a - b).abs() <= 1e-9, "p = {p}: {a} vs {b}");
        }
    }

    #[test]
    fn leading_terms_examples() {
        let alpha = 4.0 / (3.0 * PI);
        let plus = m_leading(Sign::Plus, 3.0, TAU - 1e-4).unwrap();
        assert!((plus.m - alpha * 1e-4).abs() < 1e-14);
        assert!((plus.sqrt_m_second / (-alpha.sqrt() / 4.0) * 1e-4f64.powf(1.5) - 1.0).abs() < 1e-8);
        let minus = m_leading(Sign::Minus, 3.0, TAU + 1e-4).unwrap();
        assert!((minus.m_prime - alpha).abs() < 1e-10);
        assert_eq!(minus.m_second, 0.0);
    }

    #[test]
    fn derivative_signs() {
        for p in [1.5f64, 2.0, 3.0, 5.0] {
            assert!(m_leading(Sign::Plus, p, TAU - 1e-3).unwrap().m_prime < 0.0);
            assert!(m_leading(Sign::Minus, p, TAU + 1e-3).unwrap().m_prime > 0.0);
        }
    }

    #[test]
    fn wrong_side_is_rejected() {
        assert!(matches!(m_leading(Sign::Plus, 3.0, TAU + 1e-3), Err(Error::Domain(_))));
        assert!(matches!(m_leading(Sign::Minus, 3.0, TAU - 1e-3), Err(Error::Domain(_))));
        assert!(matches!(m_leading(Sign::Plus, 3.0, TAU), Err(Error::Domain(_))));
    }

    #[test]
    fn finite_difference_of_m_matches_leading_derivative() {
        for sign in [Sign::Plus, Sign::Minus] {
            let s = TAU - sign.factor::<f64>() * 1e-4;
            let rep = validate_expansion(sign, 3.0, &[s, s - sign.factor::<f64>() * 1e-5, s - sign.factor::<f64>() * 2e-5]).unwrap();
            let sample = rep.samples[0];
            assert!((sample.m_prime_fd / sample.m_prime_leading - 1.0).abs() < 0.05, "{sample:?}");
        }
    }

    #[test]
    fn fits_on_default_grid() {
        for (sign, p) in [(Sign::Plus, 3.0), (Sign::Minus, 3.0), (Sign::Plus, 2.0), (Sign::Minus, 2.0)] {
            let rep = validate_expansion(sign, p, &expansion_grid(sign, 17)).unwrap();
            assert!(rep.passed(), "{rep:#?}");
        }
    }
}
