//! Radial functions of one variable with exact first and second derivatives.
//!
//! Coefficients and phase functions are described declaratively by
//! [`RadialExpr`] trees built from a few atoms (constants, monomials,
//! Gaussians) combined by sums, products, quotients and real powers.
//! Evaluation propagates a second-order [`Jet`], so derivatives are exact
//! rather than finite-difference approximations.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Value with first and second derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<T> {
    pub v: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Real> Jet<T> {
    pub fn constant(v: T) -> Self {
        Self { v, d1: T::zero(), d2: T::zero() }
    }

    /// The independent variable at `x`.
    pub fn variable(x: T) -> Self {
        Self { v: x, d1: T::one(), d2: T::zero() }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        Self { v: e, d1: e * self.d1, d2: e * (self.d2 + self.d1 * self.d1) }
    }

    pub fn sqrt(self) -> Self {
        self.powf(T::of(0.5))
    }

    /// `self^k`; requires a positive value unless `k` is a small non-negative integer.
    pub fn powf(self, k: T) -> Self {
        if k == T::zero() {
            return Self::constant(T::one());
        }
        if k == k.round() && k > T::zero() && k <= T::of(64.0) {
            let n = k.to_i32().unwrap_or(1);
            return self.powi(n);
        }
        let v = self.v.powf(k);
        let d = k * self.v.powf(k - T::one());
        let dd = k * (k - T::one()) * self.v.powf(k - T::of(2.0));
        Self { v, d1: d * self.d1, d2: d * self.d2 + dd * self.d1 * self.d1 }
    }

    pub fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::constant(T::one()),
            1 => self,
            _ => {
                let nf = T::from_i32(n).unwrap_or_else(T::one);
                let v = self.v.powi(n);
                let d = nf * self.v.powi(n - 1);
                let dd = nf * (nf - T::one()) * self.v.powi(n - 2);
                Self { v, d1: d * self.d1, d2: d * self.d2 + dd * self.d1 * self.d1 }
            }
        }
    }

    pub fn scale(self, a: T) -> Self {
        Self { v: a * self.v, d1: a * self.d1, d2: a * self.d2 }
    }
}

impl<T: Real> Add for Jet<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl<T: Real> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl<T: Real> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { v: -self.v, d1: -self.d1, d2: -self.d2 }
    }
}

impl<T: Real> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + T::of(2.0) * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl<T: Real> Div for Jet<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.v / o.v;
        let d1 = (self.d1 - q * o.d1) / o.v;
        let d2 = (self.d2 - T::of(2.0) * d1 * o.d1 - q * o.d2) / o.v;
        Self { v: q, d1, d2 }
    }
}

/// Anything that can be evaluated with two derivatives at a radius.
pub trait RadialFunction<T: Real>: Send + Sync {
    fn jet(&self, r: T) -> Jet<T>;

    fn value(&self, r: T) -> T {
        self.jet(r).v
    }
}

impl<T: Real, F: Fn(T) -> Jet<T> + Send + Sync> RadialFunction<T> for F {
    fn jet(&self, r: T) -> Jet<T> {
        self(r)
    }
}

/// Declarative radial expression. Serialized as an externally tagged JSON
/// object, e.g. `{"gaussian": {"amplitude": 1.0, "beta": 2.0}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialExpr<T> {
    /// Constant value.
    Const(T),
    /// `coeff · r^power`.
    Monomial { coeff: T, power: u32 },
    /// `amplitude · exp(-beta r²)`.
    Gaussian { amplitude: T, beta: T },
    Sum(Vec<RadialExpr<T>>),
    Product(Vec<RadialExpr<T>>),
    /// `numerator / denominator`.
    Quotient(Box<RadialExpr<T>>, Box<RadialExpr<T>>),
    /// `base^exponent` for a positive base.
    Powf { base: Box<RadialExpr<T>>, exponent: T },
}

impl<T: Real> RadialExpr<T> {
    pub fn constant(v: T) -> Self {
        Self::Const(v)
    }

    pub fn monomial(coeff: T, power: u32) -> Self {
        Self::Monomial { coeff, power }
    }

    pub fn gaussian(amplitude: T, beta: T) -> Self {
        Self::Gaussian { amplitude, beta }
    }

    pub fn quotient(num: Self, den: Self) -> Self {
        Self::Quotient(Box::new(num), Box::new(den))
    }

    pub fn powf(base: Self, exponent: T) -> Self {
        Self::Powf { base: Box::new(base), exponent }
    }

    pub fn eval(&self, r: T) -> Jet<T> {
        match self {
            Self::Const(c) => Jet::constant(*c),
            Self::Monomial { coeff, power } => Jet::variable(r).powi(*power as i32).scale(*coeff),
            Self::Gaussian { amplitude, beta } => {
                let x = Jet::variable(r);
                (x * x).scale(-*beta).exp().scale(*amplitude)
            }
            Self::Sum(terms) => terms.iter().fold(Jet::constant(T::zero()), |acc, t| acc + t.eval(r)),
            Self::Product(factors) => factors.iter().fold(Jet::constant(T::one()), |acc, f| acc * f.eval(r)),
            Self::Quotient(n, d) => n.eval(r) / d.eval(r),
            Self::Powf { base, exponent } => base.eval(r).powf(*exponent),
        }
    }

    /// Converts the numeric payload to another scalar type.
    pub fn cast<U: Real>(&self) -> RadialExpr<U> {
        let c = |x: T| U::of(x.as_f64());
        match self {
            Self::Const(v) => RadialExpr::Const(c(*v)),
            Self::Monomial { coeff, power } => RadialExpr::Monomial { coeff: c(*coeff), power: *power },
            Self::Gaussian { amplitude, beta } => RadialExpr::Gaussian { amplitude: c(*amplitude), beta: c(*beta) },
            Self::Sum(ts) => RadialExpr::Sum(ts.iter().map(Self::cast).collect()),
            Self::Product(ts) => RadialExpr::Product(ts.iter().map(Self::cast).collect()),
            Self::Quotient(n, d) => RadialExpr::Quotient(Box::new(n.cast()), Box::new(d.cast())),
            Self::Powf { base, exponent } => RadialExpr::Powf { base: Box::new(base.cast()), exponent: c(*exponent) },
        }
    }

    /// Checks `f'(0) = 0`, the condition for `f(|x|)` to be a C² radial
    /// function on ℝ³.
    pub fn check_radial(&self, name: &str) -> Result<()> {
        let j = self.eval(T::zero());
        let tol = T::of(1e-12) * (T::one() + j.v.abs());
        if !j.v.is_finite() || !j.d1.is_finite() || !j.d2.is_finite() {
            return Err(Error::config(format!("{name}: not finite at r = 0")));
        }
        if j.d1.abs() > tol {
            return Err(Error::config(format!(
                "{name}: derivative at r = 0 is {} (a radial C² function needs 0)",
                j.d1
            )));
        }
        Ok(())
    }
}

impl<T: Real> RadialFunction<T> for RadialExpr<T> {
    fn jet(&self, r: T) -> Jet<T> {
        self.eval(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fd(expr: &RadialExpr<f64>, r: f64) -> (f64, f64) {
        let h = 1e-4;
        let f = |x: f64| expr.eval(x).v;
        ((f(r + h) - f(r - h)) / (2.0 * h), (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h))
    }

    fn sample() -> RadialExpr<f64> {
        // r^6 e^{-r²} / (1 + r^6), the builtin detuning shape
        RadialExpr::quotient(
            RadialExpr::Product(vec![RadialExpr::monomial(1.0, 6), RadialExpr::gaussian(1.0, 1.0)]),
            RadialExpr::Sum(vec![RadialExpr::constant(1.0), RadialExpr::monomial(1.0, 6)]),
        )
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let exprs = [
            sample(),
            RadialExpr::powf(RadialExpr::Sum(vec![RadialExpr::constant(2.0), RadialExpr::monomial(0.5, 2)]), 1.7),
            RadialExpr::gaussian(3.0, 0.4),
        ];
        for e in &exprs {
            for r in [0.3, 0.9, 1.6] {
                let j = e.eval(r);
                let (d1, d2) = fd(e, r);
                assert!((j.d1 - d1).abs() < 1e-7, "{e:?} r={r}");
                assert!((j.d2 - d2).abs() < 1e-5, "{e:?} r={r}");
            }
        }
    }

    #[test]
    fn detuning_shape_vanishes_to_second_order_at_origin() {
        let j = sample().eval(0.0);
        assert_eq!((j.v, j.d1, j.d2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let e = sample();
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(serde_json::from_str::<RadialExpr<f64>>(&s).unwrap(), e);
        let bad = r#"{"gaussian": {"amplitude": 1.0, "beta": 1.0, "width": 2.0}}"#;
        assert!(serde_json::from_str::<RadialExpr<f64>>(bad).is_err());
        let parsed: RadialExpr<f64> = serde_json::from_str(r#"{"sum": [{"const": 1.0}, {"monomial": {"coeff": 2.0, "power": 2}}]}"#).unwrap();
        assert_eq!(parsed.eval(2.0).v, 9.0);
    }

    #[test]
    fn radial_check_rejects_odd_terms() {
        assert!(RadialExpr::monomial(1.0_f64, 1).check_radial("phi").is_err());
        assert!(RadialExpr::monomial(1.0_f64, 2).check_radial("phi").is_ok());
        assert!(sample().check_radial("eps").is_ok());
    }

    proptest! {
        #[test]
        fn product_rule_holds(a in 0.1f64..3.0, b in 0.1f64..3.0, r in 0.0f64..2.0) {
            let f = RadialExpr::gaussian(a, b);
            let g = RadialExpr::monomial(b, 4);
            let prod = RadialExpr::Product(vec![f.clone(), g.clone()]).eval(r);
            let (jf, jg) = (f.eval(r), g.eval(r));
            prop_assert!((prod.d2 - (jf.d2 * jg.v + 2.0 * jf.d1 * jg.d1 + jf.v * jg.d2)).abs() <= 1e-12 * (1.0 + prod.d2.abs()));
        }
    }
}
