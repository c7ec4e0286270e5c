//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the construction is generic over (`f32` or `f64`).
///
/// Tolerances quoted throughout the crate assume `f64`; `f32` works but
/// cannot reach them.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + LowerExp
    + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Lossy conversion for reports and serialization.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn two_pi() -> Self {
        Self::TAU()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `|x|^k` for real `k`, with `x = 0` short-circuited to zero so that
/// non-integer exponents never go through `log(0)`.
#[inline]
pub fn abs_pow<T: Real>(x: T, k: T) -> T {
    let ax = x.abs();
    if ax == T::zero() {
        T::zero()
    } else {
        (k * ax.ln()).exp()
    }
}

/// Odd power nonlinearity `|y|^{p-1} y`.
#[inline]
pub fn odd_pow<T: Real>(y: T, p: T) -> T {
    if y == T::zero() {
        T::zero()
    } else {
        abs_pow(y, p).copysign(y)
    }
}

/// Least-squares slope and intercept of `ys` against `xs`.
pub(crate) fn linear_fit<T: Real>(xs: &[T], ys: &[T]) -> Option<(T, T)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = T::from_usize(n)?;
    let mx = xs.iter().copied().sum::<T>() / nf;
    let my = ys.iter().copied().sum::<T>() / nf;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx = sxx + (x - mx) * (x - mx);
        sxy = sxy + (x - mx) * (y - my);
    }
    if sxx == T::zero() {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abs_pow_matches_powf_and_handles_zero() {
        assert_eq!(abs_pow(0.0_f64, 2.5), 0.0);
        assert!((abs_pow(-2.0_f64, 3.0) - 8.0).abs() < 1e-13);
        assert!((abs_pow(0.7_f64, 1.5) - 0.7_f64.powf(1.5)).abs() < 1e-15);
        assert!((odd_pow(-0.5_f64, 3.0) + 0.125).abs() < 1e-15);
        assert_eq!(odd_pow(0.0_f32, 2.2), 0.0);
    }

    #[test]
    fn fit_recovers_line() {
        let xs: Vec<f64> = (0..5).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let (m, b) = linear_fit(&xs, &ys).unwrap();
        assert!((m - 3.0).abs() < 1e-14 && (b + 1.0).abs() < 1e-14);
        assert!(linear_fit(&[1.0_f64], &[2.0]).is_none());
    }
}
