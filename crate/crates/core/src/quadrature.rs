//! Globally adaptive Gauss–Kronrod (10/21 point) quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Abscissae of the 21-point Kronrod rule on [-1, 1] (non-negative half).
/// Odd indices are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_297_471,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Weights of the 10-point Gauss rule at XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn kronrod21<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::of(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center);
    let mut kron = T::of(WGK[10]) * fc;
    let mut gauss = T::zero();
    for j in 0..10 {
        let dx = half_len * T::of(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        kron = kron + T::of(WGK[j]) * pair;
        if j % 2 == 1 {
            gauss = gauss + T::of(WG[j / 2]) * pair;
        }
    }
    let value = kron * half_len;
    let error = ((kron - gauss) * half_len).abs();
    (value, error)
}

/// Integrates `f` over `[a, b]`, bisecting the segment with the largest
/// error estimate until the total estimate meets the tolerance.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, settings: &QuadSettings) -> Result<Quadrature<T>> {
    let (value, error) = kronrod21(&f, a, b);
    let mut segments = vec![Segment { a, b, value, error }];
    let abs_tol = T::of(settings.abs_tol);
    let rel_tol = T::of(settings.rel_tol);
    // error estimates below this are at roundoff level and cannot shrink further
    let noise = T::of(64.0) * T::epsilon();
    loop {
        let total: T = segments.iter().map(|s| s.value).sum();
        let err: T = segments.iter().map(|s| s.error).sum();
        let target = abs_tol.max(rel_tol * total.abs());
        if err <= target || err <= noise * total.abs() {
            return Ok(Quadrature {
                value: total,
                error: err,
                intervals: segments.len(),
            });
        }
        if !total.is_finite() || segments.len() >= settings.max_intervals {
            return Err(Error::Quadrature {
                estimate: total.as_f64(),
                error: err.as_f64(),
                intervals: segments.len(),
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, s)| if s.error > acc.1 { (i, s.error) } else { acc });
        let seg = segments.swap_remove(worst);
        let mid = T::of(0.5) * (seg.a + seg.b);
        for (lo, hi) in [(seg.a, mid), (mid, seg.b)] {
            let (value, error) = kronrod21(&f, lo, hi);
            segments.push(Segment { a: lo, b: hi, value, error });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rule_is_exact_for_high_degree_polynomials() {
        // K21 integrates degree 31 exactly, G10 degree 19
        let q = integrate(|x: f64| x.powi(18) - 3.0 * x.powi(7) + 1.0, -1.0, 1.0, &QuadSettings::default()).unwrap();
        assert!((q.value - (2.0 / 19.0 + 2.0)).abs() < 1e-14);
        assert_eq!(q.intervals, 1);
    }

    #[test]
    fn smooth_transcendental_integrals() {
        let s = QuadSettings::default();
        let q = integrate(f64::sin, 0.0, PI, &s).unwrap();
        assert!((q.value - 2.0).abs() < 1e-14);
        let q = integrate(f64::exp, 0.0, 3.0, &s).unwrap();
        assert!((q.value - (3.0f64.exp() - 1.0)).abs() < 1e-12);
        // arcsine substitution: ∫0^1 dz/√(1-z²) = π/2 as ∫0^{π/2} dθ
        let q = integrate(|_t: f64| 1.0, 0.0, PI / 2.0, &s).unwrap();
        assert!((q.value - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn adapts_to_endpoint_log_singularity() {
        // ∫0^1 -ln x dx = 1
        let s = QuadSettings::default();
        let q = integrate(|x: f64| -x.ln(), 0.0, 1.0, &s).unwrap();
        assert!((q.value - 1.0).abs() < 1e-10, "{q:?}");
        assert!(q.intervals > 1);
    }

    #[test]
    fn reports_non_convergence() {
        let s = QuadSettings { max_intervals: 3, ..Default::default() };
        let err = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &s).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn works_in_single_precision() {
        let s = QuadSettings { abs_tol: 1e-6, rel_tol: 1e-6, max_intervals: 50 };
        let q = integrate(|x: f32| x.cos(), 0.0, 1.0, &s).unwrap();
        assert!((q.value - 1.0f32.sin()).abs() < 1e-6);
    }
}
