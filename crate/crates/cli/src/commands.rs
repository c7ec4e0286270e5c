use std::collections::hash_map::{Entry, HashMap};
use std::path::{Path, PathBuf};

use breather::breather::decay_grid;
use breather::coefficients::{check_hypotheses, hypothesis_grid, BuiltinParams};
use breather::expansions::{expansion_grid, validate_expansion};
use breather::oscillator::{OdeTolerances, Oscillator};
use breather::phase_plane::separatrix_energy;
use breather::verifier::{curl_curl_sweep, full_pde_sweep, monochromatic_sweep, reduced_residual_sweep};
use breather::{Breather, DecayReport, Monochromatic, PeriodMap64, ProfileConfig, ResidualReport, Sign, SweepSettings};
use serde::Serialize;

use crate::output::{num, write_json, CsvTable};
use crate::{CommonArgs, Failure};

const DEFAULT_P: f64 = 3.0;

fn sign_of(common: &CommonArgs) -> Sign {
    common.sign.unwrap_or(Sign::Plus)
}

fn p_of(common: &CommonArgs) -> Result<f64, Failure> {
    let p = common.p.unwrap_or(DEFAULT_P);
    if !(p > 1.0 && p.is_finite()) {
        return Err(Failure::Usage(format!("--p must be a finite number > 1, got {p}")));
    }
    Ok(p)
}

/// Profile from `--profile` plus flag overrides.
pub fn resolve_profile(common: &CommonArgs) -> Result<ProfileConfig, Failure> {
    let mut config = if common.profile == "builtin" {
        let d = BuiltinParams::default();
        let params = BuiltinParams {
            a: common.a.unwrap_or(d.a),
            m: common.m.unwrap_or(d.m),
            beta: common.beta.unwrap_or(d.beta),
        };
        ProfileConfig::builtin(p_of(common)?, sign_of(common), params, 1.0)
    } else {
        if common.a.is_some() || common.m.is_some() || common.beta.is_some() {
            return Err(Failure::Usage("--a, --m and --beta only apply to the builtin profile".into()));
        }
        let text = std::fs::read_to_string(&common.profile)
            .map_err(|e| Failure::Usage(format!("cannot read profile `{}`: {e}", common.profile)))?;
        let mut config = ProfileConfig::from_json(&text)?;
        if common.p.is_some() {
            config.p = p_of(common)?;
        }
        if let Some(s) = common.sign {
            config.sign = s;
        }
        config
    };
    if let Some(d) = common.delta {
        config.delta = d;
    }
    Ok(config)
}

fn validate_energies(sign: Sign, p: f64, energies: &[f64], ascending: bool) -> Result<(), Failure> {
    if energies.is_empty() {
        return Err(Failure::Usage("energy list is empty".into()));
    }
    for &e in energies {
        if !(e >= 0.0 && e.is_finite()) {
            return Err(Failure::Usage(format!("energies must be finite and >= 0, got {e}")));
        }
        if sign == Sign::Minus && e >= separatrix_energy(p) {
            return Err(Failure::Usage(format!(
                "energy {e} is not below the separatrix level {}",
                separatrix_energy(p)
            )));
        }
    }
    if ascending && !energies.windows(2).all(|w| w[0] < w[1]) {
        return Err(Failure::Usage("energies must be strictly ascending".into()));
    }
    Ok(())
}

fn default_table_energies(sign: Sign, p: f64) -> Vec<f64> {
    let top = match sign {
        Sign::Plus => 5.0,
        Sign::Minus => 0.95 * separatrix_energy(p),
    };
    (0..=20).map(|i| top * i as f64 / 20.0).collect()
}

pub fn period_table(common: &CommonArgs, energies: Option<&[f64]>) -> Result<(), Failure> {
    let (sign, p) = (sign_of(common), p_of(common)?);
    let energies = energies.map(<[f64]>::to_vec).unwrap_or_else(|| default_table_energies(sign, p));
    validate_energies(sign, p, &energies, true)?;

    let map = PeriodMap64::new(sign, p)?;
    let osc = Oscillator::with_tolerances(sign, p, OdeTolerances::tight())?;
    let mut rows = Vec::with_capacity(energies.len());
    for &e in &energies {
        let quad = map.period(e)?;
        let ret = osc.return_map_period(e)?;
        rows.push([e, map.amplitude(e)?, quad, ret, (quad - ret).abs()]);
    }

    let mut table = CsvTable::create(common.out.as_deref(), "period_table.csv", &["e", "N", "L_quadrature", "L_return_map", "abs_diff"])?;
    for row in &rows {
        table.numbers(row)?;
    }
    table.finish()?;

    let monotone = rows.windows(2).all(|w| match sign {
        Sign::Plus => w[1][2] < w[0][2],
        Sign::Minus => w[1][2] > w[0][2],
    });
    if !monotone {
        return Err(Failure::Numerical(format!(
            "period column is not strictly {}",
            if sign == Sign::Plus { "decreasing" } else { "increasing" }
        )));
    }
    if let Some(row) = rows.iter().find(|r| !(r[4] <= common.tol)) {
        return Err(Failure::Numerical(format!(
            "quadrature and return-map periods differ by {:.3e} at e = {} (tol {:.1e})",
            row[4], row[0], common.tol
        )));
    }
    Ok(())
}

/// Upper and lower halves of the minus separatrix, `ξ ∈ [-1, 1]`.
pub fn separatrix_points(p: f64, n: usize) -> Vec<(f64, f64)> {
    let level = separatrix_energy(p);
    (0..=n)
        .map(|k| {
            let xi = -(std::f64::consts::PI * k as f64 / n as f64).cos();
            let rad = level - xi * xi + 2.0 / (p + 1.0) * xi.abs().powf(p + 1.0);
            (xi, rad.max(0.0).sqrt())
        })
        .collect()
}

pub fn phase_portrait(common: &CommonArgs, energies: Option<&[f64]>, samples: usize) -> Result<(), Failure> {
    let (sign, p) = (sign_of(common), p_of(common)?);
    if samples < 3 {
        return Err(Failure::Usage("--samples must be at least 3".into()));
    }
    let energies = energies.map(<[f64]>::to_vec).unwrap_or_else(|| match sign {
        Sign::Plus => vec![0.5, 2.0],
        Sign::Minus => vec![0.2 * separatrix_energy(p), 0.8 * separatrix_energy(p)],
    });
    validate_energies(sign, p, &energies, false)?;

    let map = PeriodMap64::new(sign, p)?;
    let osc = Oscillator::with_tolerances(sign, p, OdeTolerances::tight())?;
    let mut table = CsvTable::create(common.out.as_deref(), "phase_portrait.csv", &["curve", "e", "y", "ydot"])?;
    for (i, &e) in energies.iter().enumerate() {
        for (y, ydot) in osc.sample_orbit(e, &map, samples)? {
            table.row(&[format!("orbit{i}"), num(e), num(y), num(ydot)])?;
        }
    }
    if sign == Sign::Minus {
        let level = separatrix_energy(p);
        let pts = separatrix_points(p, samples);
        for (name, s) in [("separatrix_upper", 1.0), ("separatrix_lower", -1.0)] {
            for &(xi, eta) in &pts {
                table.row(&[name.to_string(), num(level), num(xi), num(s * eta)])?;
            }
        }
    }
    table.finish()
}

pub fn expansion_check(common: &CommonArgs, points: usize) -> Result<(), Failure> {
    let (sign, p) = (sign_of(common), p_of(common)?);
    if points < 3 {
        return Err(Failure::Usage("--points must be at least 3".into()));
    }
    let report = validate_expansion(sign, p, &expansion_grid(sign, points))?;
    write_json(common.out.as_deref(), "expansion.json", &report)?;
    if !report.passed() {
        return Err(Failure::Numerical(format!(
            "expansion outside tolerance: exponent rel error {:.3e}, prefactor rel error {:.3e}, M' deviation {:.3e}",
            report.exponent_rel_error, report.prefactor_rel_error, report.m_prime_max_rel_deviation
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct Residuals {
    reduced: ResidualReport,
    full_pde: ResidualReport,
    curl_curl: ResidualReport,
    monochromatic: ResidualReport,
}

const SLICE_RADII: usize = 60;
const SLICE_R_MAX: f64 = 6.0;
const SLICE_TIMES: usize = 32;
/// Field grid `{-2, -1.5, …, 2}³`.
const FIELD_HALF: i32 = 4;
const FIELD_STEP: f64 = 0.5;
const FIELD_TIMES: usize = 4;

pub fn construct(common: &CommonArgs) -> Result<(), Failure> {
    let config = resolve_profile(common)?;
    let profile = config.build::<f64>()?;
    let out: PathBuf = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let dir = Some(out.as_path());

    let hyp = check_hypotheses(&profile, &hypothesis_grid(profile.delta(), 13, 400));
    write_json(dir, "hypotheses.json", &hyp)?;
    if let Err(e) = hyp.require() {
        println!("hypotheses: FAIL ({})", hyp.first_failure().unwrap_or("?"));
        return Err(e.into());
    }

    let spec = Breather::new(profile.clone())?;
    export_slices(&spec, dir)?;
    export_field(&spec, dir)?;

    let decay = spec.decay_rate(&decay_grid(profile.delta(), 21))?;
    write_json(dir, "decay.json", &decay)?;

    let base = SweepSettings { seed: common.seed, ..SweepSettings::default() };
    let residuals = Residuals {
        reduced: reduced_residual_sweep(&spec, &SweepSettings { steps: vec![1e-2, 5e-3, 2.5e-3, 1.25e-3], ..base.clone() })?,
        full_pde: full_pde_sweep(&spec, &base)?,
        curl_curl: curl_curl_sweep(&spec, &base)?,
        monochromatic: monochromatic_sweep(&Monochromatic::new(profile), &base)?,
    };
    write_json(dir, "residuals.json", &residuals)?;

    print_summary(&config, &decay, &residuals, &out);
    let failed: Vec<&str> = [&residuals.reduced, &residuals.full_pde, &residuals.curl_curl, &residuals.monochromatic]
        .into_iter()
        .filter(|r| !r.passed)
        .map(|r| r.kind.as_str())
        .collect();
    if !decay.certified {
        return Err(Failure::Numerical(format!(
            "decay rate {:.3e} does not certify δ = {}",
            decay.fitted_rate, decay.configured_delta
        )));
    }
    if !failed.is_empty() {
        return Err(Failure::Numerical(format!("residual order outside window: {}", failed.join(", "))));
    }
    Ok(())
}

fn export_slices(spec: &Breather, dir: Option<&Path>) -> Result<(), Failure> {
    let period = spec.period();
    let mut table = CsvTable::create(dir, "radial_slice.csv", &["r", "t", "psi"])?;
    for i in 0..=SLICE_RADII {
        let r = SLICE_R_MAX * i as f64 / SLICE_RADII as f64;
        let slice = spec.slice(r)?;
        for j in 0..=SLICE_TIMES {
            let t = period * j as f64 / SLICE_TIMES as f64;
            table.numbers(&[r, t, slice.psi(t)])?;
        }
    }
    table.finish()
}

fn export_field(spec: &Breather, dir: Option<&Path>) -> Result<(), Failure> {
    let period = spec.period();
    let mut slices = HashMap::new();
    let mut table = CsvTable::create(dir, "field.csv", &["x1", "x2", "x3", "t", "U1", "U2", "U3"])?;
    let range = -FIELD_HALF..=FIELD_HALF;
    for i in range.clone() {
        for j in range.clone() {
            for k in range.clone() {
                let key = i * i + j * j + k * k;
                let x = [i as f64 * FIELD_STEP, j as f64 * FIELD_STEP, k as f64 * FIELD_STEP];
                let r = FIELD_STEP * (key as f64).sqrt();
                let slice = match slices.entry(key) {
                    Entry::Occupied(e) => e.into_mut(),
                    Entry::Vacant(e) => e.insert(spec.slice(r)?),
                };
                for n in 0..FIELD_TIMES {
                    let t = period * n as f64 / FIELD_TIMES as f64;
                    let u = if key == 0 { [0.0; 3] } else { x.map(|xi| slice.psi(t) * xi / r) };
                    table.numbers(&[x[0], x[1], x[2], t, u[0], u[1], u[2]])?;
                }
            }
        }
    }
    table.finish()
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn print_summary(config: &ProfileConfig, decay: &DecayReport, res: &Residuals, out: &Path) {
    println!("profile: {} sign={} p={} delta={}", config.family, config.sign, config.p, config.delta);
    println!("hypotheses: PASS");
    println!(
        "{:<14} {:>12} {:>12} {:>8}  result",
        "check", "finest max", "order", "window"
    );
    for r in [&res.reduced, &res.full_pde, &res.curl_curl, &res.monochromatic] {
        println!(
            "{:<14} {:>12.3e} {:>12.4} {:>3}-{:<4}  {}",
            r.kind,
            r.max_norm.last().copied().unwrap_or(f64::NAN),
            r.fitted_order,
            r.order_window[0],
            r.order_window[1],
            verdict(r.passed)
        );
    }
    println!(
        "{:<14} {:>12} {:>12.4} {:>8}  {}",
        "decay",
        "",
        decay.fitted_rate,
        format!(">= {}", decay.configured_delta),
        verdict(decay.certified)
    );
    println!("artifacts: {}", out.display());
}

#[cfg(test)]
mod tests {
    use super::*;
    use breather::phase_plane::first_integral;

    #[test]
    fn separatrix_samples_lie_on_the_saddle_level() {
        for p in [1.5, 3.0, 5.0] {
            let pts = separatrix_points(p, 64);
            assert_eq!((pts[0], pts[64]), ((-1.0, 0.0), (1.0, 0.0)));
            for (xi, eta) in pts {
                assert!((first_integral(Sign::Minus, p, xi, eta) - separatrix_energy(p)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn energies_are_validated() {
        assert!(validate_energies(Sign::Plus, 3.0, &[0.0, 1.0], true).is_ok());
        assert!(validate_energies(Sign::Plus, 3.0, &[1.0, 1.0], true).is_err());
        assert!(validate_energies(Sign::Plus, 3.0, &[f64::NAN], false).is_err());
        assert!(validate_energies(Sign::Minus, 3.0, &[0.5], false).is_err());
        assert!(validate_energies(Sign::Minus, 3.0, &[0.49], false).is_ok());
        assert!(validate_energies(Sign::Minus, 3.0, &[], false).is_err());
    }
}
