//! Bracketed scalar root finding (Brent: bisection safeguarding secant and
//! inverse quadratic steps).

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct RootSettings<T> {
    /// Absolute tolerance on the abscissa.
    pub x_abs: T,
    /// Relative tolerance on the abscissa.
    pub x_rel: T,
    pub max_iter: usize,
}

impl<T: Real> Default for RootSettings<T> {
    fn default() -> Self {
        Self {
            x_abs: T::min_positive_value(),
            x_rel: T::of(2.0) * T::epsilon(),
            max_iter: 200,
        }
    }
}

/// Finds a zero of `f` in `[a, b]`. The endpoint values must not share a
/// sign; an exact zero at either end is returned immediately.
pub fn brent<T: Real, F: FnMut(T) -> Result<T>>(mut f: F, a: T, b: T, settings: &RootSettings<T>) -> Result<T> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootFinding(format!(
            "no sign change on [{a:e}, {b:e}]: f = {fa:e}, {fb:e}"
        )));
    }
    let two = T::of(2.0);
    let half = T::of(0.5);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..settings.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = two * settings.x_rel * b.abs() + half * settings.x_abs;
        let m = half * (c - b);
        if m.abs() <= tol || fb == T::zero() {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            if two * p < (T::of(3.0) * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol { b + d } else { b + tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::RootFinding(format!(
        "no convergence after {} iterations (bracket [{b:e}, {c:e}])",
        settings.max_iter
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = brent(|x: f64| Ok(x * x - 2.0), 0.0, 2.0, &RootSettings::default()).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn relative_precision_on_tiny_roots() {
        let root = 3.0e-20;
        let r = brent(|x: f64| Ok(x - root), 0.0, 1.0, &RootSettings::default()).unwrap();
        assert!(((r - root) / root).abs() < 1e-12);
    }

    #[test]
    fn rejects_bracket_without_sign_change() {
        let err = brent(|x: f64| Ok(x * x + 1.0), -1.0, 1.0, &RootSettings::default()).unwrap_err();
        assert!(matches!(err, Error::RootFinding(_)));
    }

    #[test]
    fn endpoint_root_returned_exactly() {
        let r = brent(|x: f64| Ok(x), 0.0, 1.0, &RootSettings::default()).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn propagates_evaluation_errors() {
        let err = brent(|_x: f64| Err(Error::domain("boom")), 0.0, 1.0, &RootSettings::default()).unwrap_err();
        assert_eq!(err, Error::domain("boom"));
    }
}
