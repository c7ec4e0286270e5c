//! Finite-difference verification: the reduced radial equation, the full
//! curl-curl wave equation, the derivative formulas for radial vector
//! fields `W(x) = φ(|x|) x/|x|`, and the monochromatic complex breather.
//!
//! All stencils are centered. Convergence orders come from a least-squares
//! fit of `log(residual)` against `log(step)` over at least three levels.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::breather::{norm, BreatherSpec, ComplexBreather};
use crate::error::{Error, Result};
use crate::radial::RadialFunction;
use crate::scalar::{linear_fit, odd_pow, Real};

pub type Vec3<T> = [T; 3];

fn unit<T: Real>(i: usize) -> Vec3<T> {
    let mut e = [T::zero(); 3];
    e[i] = T::one();
    e
}

fn axpy<T: Real>(x: Vec3<T>, a: T, d: Vec3<T>) -> Vec3<T> {
    [x[0] + a * d[0], x[1] + a * d[1], x[2] + a * d[2]]
}

fn check_stencil<T: Real>(x: Vec3<T>, h: T) -> Result<()> {
    if !(h > T::zero()) {
        return Err(Error::domain(format!("step must be positive, got {h}")));
    }
    if norm(x) <= T::of(2.0) * h {
        return Err(Error::domain(format!(
            "stencil of step {h} at |x| = {} reaches the origin",
            norm(x)
        )));
    }
    Ok(())
}

/// Field values on the 19-point stencil used for second derivatives.
struct Stencil<T> {
    h: T,
    center: Vec3<T>,
    /// `[axis][0 = minus, 1 = plus]`
    axis: [[Vec3<T>; 2]; 3],
    /// `diag[(j, k)][(sj, sk)]` for `j < k`, signs 0 = minus, 1 = plus.
    diag: [[[Vec3<T>; 2]; 2]; 3],
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn pair_index(j: usize, k: usize) -> usize {
    match (j.min(k), j.max(k)) {
        (0, 1) => 0,
        (0, 2) => 1,
        _ => 2,
    }
}

impl<T: Real> Stencil<T> {
    fn sample<F: Fn(Vec3<T>) -> Result<Vec3<T>>>(field: &F, x: Vec3<T>, h: T) -> Result<Self> {
        let center = field(x)?;
        let mut axis = [[[T::zero(); 3]; 2]; 3];
        for (i, slot) in axis.iter_mut().enumerate() {
            slot[0] = field(axpy(x, -h, unit(i)))?;
            slot[1] = field(axpy(x, h, unit(i)))?;
        }
        let mut diag = [[[[T::zero(); 3]; 2]; 2]; 3];
        for (n, &(j, k)) in PAIRS.iter().enumerate() {
            for sj in 0..2 {
                for sk in 0..2 {
                    let a = if sj == 0 { -h } else { h };
                    let b = if sk == 0 { -h } else { h };
                    diag[n][sj][sk] = field(axpy(axpy(x, a, unit(j)), b, unit(k)))?;
                }
            }
        }
        Ok(Self { h, center, axis, diag })
    }

    /// `∂_j ∂_k U_c`.
    fn second(&self, c: usize, j: usize, k: usize) -> T {
        let h2 = self.h * self.h;
        if j == k {
            (self.axis[j][1][c] - T::of(2.0) * self.center[c] + self.axis[j][0][c]) / h2
        } else {
            let d = &self.diag[pair_index(j, k)];
            (d[1][1][c] - d[1][0][c] - d[0][1][c] + d[0][0][c]) / (T::of(4.0) * h2)
        }
    }

    /// `∂_j U_c`.
    fn first(&self, c: usize, j: usize) -> T {
        (self.axis[j][1][c] - self.axis[j][0][c]) / (T::of(2.0) * self.h)
    }

    fn curl_curl(&self) -> Vec3<T> {
        let mut out = [T::zero(); 3];
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..3 {
                if j != i {
                    *o = *o + self.second(j, i, j) - self.second(i, j, j);
                }
            }
        }
        out
    }
}

/// Centered approximation of `∇×∇×U = ∇(∇·U) - ΔU` at `x`.
pub fn curl_curl_fd<T: Real, F: Fn(Vec3<T>) -> Result<Vec3<T>>>(field: F, x: Vec3<T>, h: T) -> Result<Vec3<T>> {
    check_stencil(x, h)?;
    Ok(Stencil::sample(&field, x, h)?.curl_curl())
}

/// Centered approximation of `∇×U` at `x`.
pub fn curl_fd<T: Real, F: Fn(Vec3<T>) -> Result<Vec3<T>>>(field: F, x: Vec3<T>, h: T) -> Result<Vec3<T>> {
    check_stencil(x, h)?;
    let two_h = T::of(2.0) * h;
    let d = |c: usize, j: usize| -> Result<T> {
        Ok((field(axpy(x, h, unit(j)))?[c] - field(axpy(x, -h, unit(j)))?[c]) / two_h)
    };
    Ok([d(2, 1)? - d(1, 2)?, d(0, 2)? - d(2, 0)?, d(1, 0)? - d(0, 1)?])
}

/// `s̃ D²ₜψ + q̃ψ ± Ṽ|ψ|^{p-1}ψ` at `(r, t)` with time step `k`.
pub fn reduced_residual<T: Real>(spec: &BreatherSpec<T>, r: T, t: T, k: T) -> Result<T> {
    let slice = spec.slice(r)?;
    Ok(reduced_residual_on(spec, &slice, t, k))
}

fn reduced_residual_on<T: Real>(spec: &BreatherSpec<T>, slice: &crate::breather::RadialSlice<T>, t: T, k: T) -> T {
    let pr = spec.profile();
    let r = slice.r;
    let (pm, p0, pp) = (slice.psi(t - k), slice.psi(t), slice.psi(t + k));
    let d2 = (pp - T::of(2.0) * p0 + pm) / (k * k);
    pr.s(r).v * d2 + pr.q(r).v * p0 + pr.sign().factor::<T>() * pr.v(r).v * odd_pow(p0, pr.p())
}

/// Residual of `s ∂ₜ²U + ∇×∇×U + qU ± V|U|^{p-1}U` with spatial step `h`
/// and time step `k`.
pub fn full_pde_residual<T: Real>(spec: &BreatherSpec<T>, x: Vec3<T>, t: T, h: T, k: T) -> Result<Vec3<T>> {
    check_stencil(x, h)?;
    let cc = curl_curl_fd(|y| spec.field_u(y, t), x, h)?;
    let r = norm(x);
    let slice = spec.slice(r)?;
    let pr = spec.profile();
    let (pm, p0, pp) = (slice.psi(t - k), slice.psi(t), slice.psi(t + k));
    let d2 = (pp - T::of(2.0) * p0 + pm) / (k * k);
    let radial = pr.s(r).v * d2 + pr.q(r).v * p0 + pr.sign().factor::<T>() * pr.v(r).v * odd_pow(p0, pr.p());
    let f = radial / r;
    Ok([f * x[0] + cc[0], f * x[1] + cc[1], f * x[2] + cc[2]])
}

/// Residual of the complex field `e^{iωt} φ(|x|) x/|x|`. The time
/// derivative is exact (`-ω²`), the curl-curl term uses finite differences.
pub fn monochromatic_residual<T: Real>(cb: &ComplexBreather<T>, x: Vec3<T>, t: T, h: T) -> Result<[Complex<T>; 3]> {
    check_stencil(x, h)?;
    let spatial = |y: Vec3<T>| -> Result<Vec3<T>> {
        let r = norm(y);
        if r == T::zero() {
            return Ok([T::zero(); 3]);
        }
        let f = cb.amplitude(r)? / r;
        Ok([f * y[0], f * y[1], f * y[2]])
    };
    let cc = curl_curl_fd(spatial, x, h)?;
    let w = spatial(x)?;
    let r = norm(x);
    let pr = cb.profile();
    let phi = cb.amplitude(r)?;
    let omega = cb.omega();
    let coeff = -omega * omega * pr.s(r).v
        + pr.q(r).v
        + pr.sign().factor::<T>() * pr.v(r).v * crate::scalar::abs_pow(phi, pr.p() - T::one());
    let phase = Complex::from_polar(T::one(), omega * t);
    Ok([0, 1, 2].map(|i| phase * (coeff * w[i] + cc[i])))
}

/// Analytic versus finite-difference derivatives of `W(x) = φ(|x|) x/|x|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialFieldDerivatives {
    pub radius: f64,
    /// `max_{ij} |∂_j W_i - FD|`.
    pub first_error: f64,
    /// `max_{ijk} |∂_j ∂_k W_i - FD|`.
    pub second_error: f64,
    /// Largest finite-difference first derivative, which blows up near the
    /// origin unless `φ(0) = 0`.
    pub first_fd_max: f64,
    /// `(φ' r - φ)/r²`, tending to `φ''(0)/2`.
    pub coefficient_a: f64,
    /// `φ'' - 3(φ' r - φ)/r²`, tending to `-φ''(0)/2`.
    pub coefficient_b: f64,
    pub limit_a: f64,
    pub limit_b: f64,
}

/// Checks the closed-form first and second derivatives of `φ(|x|) x/|x|`
/// against centered differences with step `h`.
pub fn radial_field_derivatives<T: Real, P: RadialFunction<T>>(phi: &P, x: Vec3<T>, h: T) -> Result<RadialFieldDerivatives> {
    check_stencil(x, h)?;
    let r = norm(x);
    let j = phi.jet(r);
    let a = (j.d1 * r - j.v) / (r * r);
    let b = j.d2 - T::of(3.0) * a;
    let delta = |i: usize, k: usize| if i == k { T::one() } else { T::zero() };
    let first = |i: usize, k: usize| a * x[i] * x[k] / r + j.v / r * delta(i, k);
    let second = |i: usize, k: usize, l: usize| {
        b * x[i] * x[k] * x[l] / (r * r * r)
            + a * (delta(k, l) * x[i] + delta(i, l) * x[k] + delta(i, k) * x[l]) / r
    };
    let field = |y: Vec3<T>| -> Result<Vec3<T>> {
        let ry = norm(y);
        let f = phi.value(ry) / ry;
        Ok([f * y[0], f * y[1], f * y[2]])
    };
    let st = Stencil::sample(&field, x, h)?;
    let (mut e1, mut e2, mut fd_max) = (T::zero(), T::zero(), T::zero());
    for i in 0..3 {
        for k in 0..3 {
            let fd = st.first(i, k);
            fd_max = fd_max.max(fd.abs());
            e1 = e1.max((first(i, k) - fd).abs());
            for l in 0..3 {
                e2 = e2.max((second(i, k, l) - st.second(i, k, l)).abs());
            }
        }
    }
    let d2_0 = phi.jet(T::zero()).d2;
    Ok(RadialFieldDerivatives {
        radius: r.as_f64(),
        first_error: e1.as_f64(),
        second_error: e2.as_f64(),
        first_fd_max: fd_max.as_f64(),
        coefficient_a: a.as_f64(),
        coefficient_b: b.as_f64(),
        limit_a: (d2_0 / T::of(2.0)).as_f64(),
        limit_b: (-d2_0 / T::of(2.0)).as_f64(),
    })
}

/// One-sided estimate `(ψ(2h) - 2ψ(h) + ψ(0))/h²` of `∂ᵣ²ψ(0, t)`.
pub fn origin_second_difference<T: Real>(spec: &BreatherSpec<T>, t: T, h: T) -> Result<T> {
    let two = T::of(2.0);
    Ok((spec.psi(two * h, t)? - two * spec.psi(h, t)? + spec.psi(T::zero(), t)?) / (h * h))
}

/// Sampling and refinement settings for residual sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    /// Strictly decreasing step sizes, at least three.
    pub steps: Vec<f64>,
    pub points: usize,
    pub seed: u64,
    pub r_min: f64,
    pub r_max: f64,
    pub order_window: [f64; 2],
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            steps: vec![0.04, 0.02, 0.01],
            points: 20,
            seed: 7,
            r_min: 0.3,
            r_max: 3.0,
            order_window: [1.8, 2.2],
        }
    }
}

impl SweepSettings {
    fn validate(&self) -> Result<()> {
        if self.steps.len() < 3 {
            return Err(Error::config("a convergence sweep needs at least 3 step sizes"));
        }
        if !self.steps.windows(2).all(|w| w[1] < w[0]) || !self.steps.iter().all(|&h| h > 0.0) {
            return Err(Error::config("sweep step sizes must be positive and strictly decreasing"));
        }
        if self.points == 0 {
            return Err(Error::config("a sweep needs at least one sample point"));
        }
        if !(self.r_min >= 0.1 && self.r_max > self.r_min) {
            return Err(Error::config("sample radii must satisfy 0.1 <= r_min < r_max"));
        }
        if self.r_min <= 2.0 * self.steps[0] {
            return Err(Error::config("r_min must exceed twice the largest step"));
        }
        Ok(())
    }
}

/// Deterministic sample points `(x, t)` with `|x|` uniform in
/// `[r_min, r_max]`, directions uniform on the sphere and `t ∈ [0, t_max)`.
pub fn sample_points<T: Real>(settings: &SweepSettings, t_max: T) -> Vec<(Vec3<T>, T)> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    (0..settings.points)
        .map(|_| {
            let r: f64 = rng.gen_range(settings.r_min..settings.r_max);
            let z: f64 = rng.gen_range(-1.0..1.0);
            let az: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let rho = (1.0 - z * z).sqrt();
            let t: f64 = rng.gen_range(0.0..1.0);
            (
                [T::of(r * rho * az.cos()), T::of(r * rho * az.sin()), T::of(r * z)],
                T::of(t) * t_max,
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub kind: String,
    pub steps: Vec<f64>,
    pub max_norm: Vec<f64>,
    /// Root mean square over the sample points.
    pub l2_norm: Vec<f64>,
    pub fitted_order: f64,
    pub fitted_order_l2: f64,
    pub order_window: [f64; 2],
    pub passed: bool,
    /// `(x1, x2, x3, t)` of every sample.
    pub points: Vec<[f64; 4]>,
}

fn fit_order(steps: &[f64], values: &[f64]) -> f64 {
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    match linear_fit(&xs, &ys) {
        Some((slope, _)) if values.iter().all(|v| *v > 0.0 && v.is_finite()) => slope,
        _ => f64::NAN,
    }
}

/// `per_point[point][level]` residual norms into a report.
fn build_report<T: Real>(kind: &str, settings: &SweepSettings, pts: &[(Vec3<T>, T)], per_point: Vec<Vec<f64>>) -> ResidualReport {
    let levels = settings.steps.len();
    let n = per_point.len() as f64;
    let max_norm: Vec<f64> = (0..levels).map(|l| per_point.iter().map(|v| v[l]).fold(0.0, f64::max)).collect();
    let l2_norm: Vec<f64> = (0..levels)
        .map(|l| (per_point.iter().map(|v| v[l] * v[l]).sum::<f64>() / n).sqrt())
        .collect();
    let fitted_order = fit_order(&settings.steps, &max_norm);
    let fitted_order_l2 = fit_order(&settings.steps, &l2_norm);
    let [lo, hi] = settings.order_window;
    ResidualReport {
        kind: kind.to_string(),
        steps: settings.steps.clone(),
        max_norm,
        l2_norm,
        fitted_order,
        fitted_order_l2,
        order_window: settings.order_window,
        passed: fitted_order >= lo && fitted_order <= hi,
        points: pts
            .iter()
            .map(|(x, t)| [x[0].as_f64(), x[1].as_f64(), x[2].as_f64(), t.as_f64()])
            .collect(),
    }
}

fn vec_norm<T: Real>(v: Vec3<T>) -> f64 {
    norm(v).as_f64()
}

fn sweep<T, F>(kind: &str, settings: &SweepSettings, t_max: T, eval: F) -> Result<ResidualReport>
where
    T: Real,
    F: Fn(Vec3<T>, T, T) -> Result<f64> + Sync,
{
    settings.validate()?;
    let pts = sample_points(settings, t_max);
    let per_point = pts
        .par_iter()
        .map(|&(x, t)| settings.steps.iter().map(|&h| eval(x, t, T::of(h))).collect::<Result<Vec<f64>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(build_report(kind, settings, &pts, per_point))
}

/// Reduced radial equation residual at `|x|` of each sample point, time step refined.
pub fn reduced_residual_sweep<T: Real>(spec: &BreatherSpec<T>, settings: &SweepSettings) -> Result<ResidualReport> {
    settings.validate()?;
    let pts = sample_points(settings, spec.period());
    let per_point = pts
        .par_iter()
        .map(|&(x, t)| {
            let slice = spec.slice(norm(x))?;
            Ok(settings
                .steps
                .iter()
                .map(|&k| reduced_residual_on(spec, &slice, t, T::of(k)).abs().as_f64())
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(build_report("reduced", settings, &pts, per_point))
}

/// Full PDE residual with `h = k` refined.
pub fn full_pde_sweep<T: Real>(spec: &BreatherSpec<T>, settings: &SweepSettings) -> Result<ResidualReport> {
    sweep("full_pde", settings, spec.period(), |x, t, h| {
        Ok(vec_norm(full_pde_residual(spec, x, t, h, h)?))
    })
}

/// `|∇×∇×U|` by finite differences; zero for the gradient field up to `O(h²)`.
pub fn curl_curl_sweep<T: Real>(spec: &BreatherSpec<T>, settings: &SweepSettings) -> Result<ResidualReport> {
    sweep("curl_curl", settings, spec.period(), |x, t, h| {
        Ok(vec_norm(curl_curl_fd(|y| spec.field_u(y, t), x, h)?))
    })
}

/// `|∇×U|` by finite differences.
pub fn curl_sweep<T: Real>(spec: &BreatherSpec<T>, settings: &SweepSettings) -> Result<ResidualReport> {
    sweep("curl", settings, spec.period(), |x, t, h| Ok(vec_norm(curl_fd(|y| spec.field_u(y, t), x, h)?)))
}

/// Monochromatic residual with the spatial step refined.
pub fn monochromatic_sweep<T: Real>(cb: &ComplexBreather<T>, settings: &SweepSettings) -> Result<ResidualReport> {
    let period = cb.profile().period();
    sweep("monochromatic", settings, period, |x, t, h| {
        let res = monochromatic_residual(cb, x, t, h)?;
        Ok(res.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt().as_f64())
    })
}
