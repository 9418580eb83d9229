//! The thermal Casimir–Polder potential `U = U_nres + U_res` of a molecule at
//! distance z from a half-space.
//!
//! The non-resonant part is a Matsubara sum over imaginary frequencies. With
//! `y = 2ξz/c` and `t = 2κ⊥z` every term reduces to
//!
//! ```text
//! U_nres = k_B T / (32π ε₀ z³) Σ'_j α_sym(ξ_j) K(y_j),
//! K(y)   = ∫_y^∞ dt e^{−t} [y² r_s − (2t² − y²) r_p],
//! ```
//!
//! so `K(0) = −4 r_p(0)` gives the static term in closed form. The resonant
//! part is a real-frequency integral over the lateral wave number, split at
//! the light line into a finite oscillatory piece and an evanescent tail.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{matsubara_spacing, BOLTZMANN, HBAR, SPEED_OF_LIGHT, VACUUM_PERMEABILITY, VACUUM_PERMITTIVITY};
use crate::dielectric::{eval_eps_imag, eval_eps_real, sqrt_upper, static_eps, PermittivityModel, KK_REL_TOL};
use crate::error::{CpError, Result};
use crate::molecule::{Molecule, Polarisability};
use crate::quad::{integrate, integrate_semi_infinite_with_breaks, CompensatedSum, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    /// Environment temperature, K.
    pub t: f64,
    /// Internal temperature of the molecule, K.
    pub t_m: f64,
    /// Distance from the surface, m.
    pub z: f64,
}

impl EnvConfig {
    pub fn new(t: f64, t_m: f64, z: f64) -> Self {
        Self { t, t_m, z }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z > 0.0 && self.z.is_finite()) {
            return Err(CpError::Domain(format!("distance z = {} must be positive", self.z)));
        }
        if !(self.t >= 0.0 && self.t.is_finite() && self.t_m >= 0.0 && self.t_m.is_finite()) {
            return Err(CpError::Domain("temperatures must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    pub rel_tol: f64,
    pub matsubara_tail_tol: f64,
    pub max_matsubara: usize,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self { rel_tol: 1e-8, matsubara_tail_tol: 1e-10, max_matsubara: 1_000_000, max_subdivisions: 10_000 }
    }
}

impl QuadratureSettings {
    fn opts(&self, rel_tol: f64) -> QuadOptions {
        QuadOptions::rel(rel_tol).with_max_subdivisions(self.max_subdivisions)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialResult {
    pub total: f64,
    pub nonresonant: f64,
    pub resonant: f64,
    pub matsubara_terms_used: usize,
    pub est_error: f64,
}

/// ε(iξ) reduced to what the kernel needs.
#[derive(Debug, Clone, Copy)]
enum Response {
    Perfect,
    Eps(f64),
}

fn response(surf: &PermittivityModel, xi: f64) -> Result<Response> {
    if surf.is_perfect_conductor() {
        Ok(Response::Perfect)
    } else {
        Ok(Response::Eps(eval_eps_imag(surf, xi)?))
    }
}

/// `K(y)` and its quadrature error.
fn kernel(resp: Response, y: f64, q: &QuadratureSettings) -> Result<(f64, f64)> {
    let decay = (-y).exp();
    match resp {
        Response::Perfect => Ok((-2.0 * decay * (y * y + 2.0 * y + 2.0), 0.0)),
        Response::Eps(1.0) => Ok((0.0, 0.0)),
        Response::Eps(eps) => {
            if decay == 0.0 {
                return Ok((0.0, 0.0));
            }
            let chi_y2 = (eps - 1.0) * y * y;
            let y2 = y * y;
            let f = |s: f64| {
                let t = y + s;
                let t1 = (t * t + chi_y2).sqrt();
                let r_s = -chi_y2 / ((t + t1) * (t + t1));
                let r_p = (eps - 1.0) * ((eps + 1.0) * t * t - y2) / ((eps * t + t1) * (eps * t + t1));
                (-s).exp() * (y2 * r_s - (2.0 * t * t - y2) * r_p)
            };
            let r = integrate_semi_infinite_with_breaks(f, 0.0, 1.0, &[1.0, 10.0, 100.0], q.opts(0.1 * q.rel_tol))?;
            Ok((decay * r.value, decay * r.abs_error))
        }
    }
}

/// `α_sym(ξ) K(2ξz/c)` and its error.
fn matsubara_summand(
    pol: &Polarisability,
    surf: &PermittivityModel,
    xi: f64,
    z: f64,
    q: &QuadratureSettings,
) -> Result<(f64, f64)> {
    let y = 2.0 * xi * z / SPEED_OF_LIGHT;
    if (-y).exp() == 0.0 {
        return Ok((0.0, 0.0));
    }
    let a = pol.symmetrised(xi);
    let (k, e) = kernel(response(surf, xi)?, y, q)?;
    Ok((a * k, (a * e).abs()))
}

/// `∫_{ξ_lo}^∞ dξ α_sym(ξ) K(2ξz/c)`.
fn xi_integral(
    pol: &Polarisability,
    surf: &PermittivityModel,
    z: f64,
    xi_lo: f64,
    q: &QuadratureSettings,
) -> Result<(f64, f64)> {
    let scale = SPEED_OF_LIGHT / z;
    let mut breaks = Vec::new();
    if let Some((lo, hi)) = pol.frequency_range() {
        breaks.extend([lo, pol.median_frequency().unwrap_or(lo), hi]);
    }
    breaks.push(xi_lo + 0.5 * scale);
    let breaks: Vec<f64> = breaks.into_iter().filter(|&b| b > xi_lo).collect();
    let mut err = None;
    let f = |xi: f64| match matsubara_summand(pol, surf, xi, z, q) {
        Ok((v, _)) => v,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    };
    let r = integrate_semi_infinite_with_breaks(
        f,
        xi_lo,
        scale.min(breaks.first().copied().unwrap_or(scale)),
        &breaks,
        q.opts(q.rel_tol),
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok((r.value, r.abs_error))
}

fn check_surface_and_env(env: &EnvConfig) -> Result<()> {
    env.validate()
}

/// Non-resonant (virtual-photon) part at T > 0.
pub fn u_nonresonant(
    mol: &Molecule,
    surf: &PermittivityModel,
    env: EnvConfig,
    q: &QuadratureSettings,
) -> Result<PotentialResult> {
    check_surface_and_env(&env)?;
    if !(env.t > 0.0) {
        return Err(CpError::Domain("the Matsubara sum needs T > 0; use u_zero_temperature".into()));
    }
    if surf.is_vacuum() {
        return Ok(PotentialResult {
            total: 0.0,
            nonresonant: 0.0,
            resonant: 0.0,
            matsubara_terms_used: 0,
            est_error: 0.0,
        });
    }
    let pol = mol.polarisability(env.t_m);
    let z = env.z;
    let delta = matsubara_spacing(env.t);
    let prefactor = BOLTZMANN * env.t / (32.0 * PI * VACUUM_PERMITTIVITY * z * z * z);

    // j = 0: K(0) = −4 r_p(0), half weight.
    let rp0 = static_eps(surf)?.rp0();
    let mut sum = CompensatedSum::new();
    sum.add(-2.0 * pol.static_value() * rp0);
    let mut err = CompensatedSum::new();

    const CHUNK: usize = 32;
    const MIN_EM_START: usize = 16;
    let tol = q.matsubara_tail_tol;
    let mut terms: Vec<f64> = vec![f64::NAN]; // index 0 unused below
    let mut quad_errs: Vec<f64> = vec![0.0];
    let mut decreasing_run = 0usize;
    let mut j = 1usize;
    let mut tail = 0.0;
    let used;
    loop {
        // Make sure f_j .. f_{j+2} are available.
        while terms.len() < j + 3 {
            let start = terms.len();
            if start > q.max_matsubara {
                return Err(CpError::MatsubaraBudgetExceeded(q.max_matsubara));
            }
            let end = (start + CHUNK).min(q.max_matsubara + 3);
            let chunk: Vec<(f64, f64)> = (start..end)
                .into_par_iter()
                .map(|k| matsubara_summand(&pol, surf, k as f64 * delta, z, q))
                .collect::<Result<Vec<_>>>()?;
            for (v, e) in chunk {
                terms.push(v);
                quad_errs.push(e);
            }
        }
        if j > q.max_matsubara {
            return Err(CpError::MatsubaraBudgetExceeded(q.max_matsubara));
        }
        let s_abs = sum.value().abs();

        // Smooth-summand regime: Euler–Maclaurin remainder from f_j on.
        if j >= MIN_EM_START {
            let (fm, f0, f1, f2) = (terms[j - 1], terms[j], terms[j + 1], terms[j + 2]);
            let third = (f2 - 3.0 * f1 + 3.0 * f0 - fm).abs() / 720.0;
            if third <= tol * s_abs {
                let (integral, ierr) = xi_integral(&pol, surf, z, j as f64 * delta, q)?;
                tail = integral / delta + 0.5 * f0 - (f1 - fm) / 24.0;
                err.add(third + ierr / delta);
                used = j + 3;
                break;
            }
        }

        let f = terms[j];
        sum.add(f);
        err.add(quad_errs[j]);
        if f == 0.0 && 2.0 * j as f64 * delta * z / SPEED_OF_LIGHT > 700.0 {
            used = j;
            break;
        }
        if j >= 2 && f.abs() < terms[j - 1].abs() {
            decreasing_run += 1;
        } else {
            decreasing_run = 0;
        }
        if decreasing_run >= 5 {
            let rho = f.abs() / terms[j - 1].abs();
            if rho < 1.0 {
                let geometric = f.abs() * rho / (1.0 - rho);
                if geometric <= tol * sum.value().abs() {
                    err.add(geometric);
                    used = j;
                    break;
                }
            }
        }
        j += 1;
    }
    sum.add(tail);
    let value = prefactor * sum.value();
    Ok(PotentialResult {
        total: value,
        nonresonant: value,
        resonant: 0.0,
        matsubara_terms_used: used,
        est_error: (prefactor * err.value()).abs(),
    })
}

/// Non-resonant part at T = 0, where the Matsubara sum becomes an integral.
pub fn u_zero_temperature_at(
    mol: &Molecule,
    surf: &PermittivityModel,
    t_m: f64,
    z: f64,
    q: &QuadratureSettings,
) -> Result<(f64, f64)> {
    EnvConfig::new(0.0, t_m, z).validate()?;
    if surf.is_vacuum() {
        return Ok((0.0, 0.0));
    }
    let pol = mol.polarisability(t_m);
    let (v, e) = xi_integral(&pol, surf, z, 0.0, q)?;
    let prefactor = HBAR / (64.0 * PI * PI * VACUUM_PERMITTIVITY * z * z * z);
    Ok((prefactor * v, (prefactor * e).abs()))
}

/// Zero-temperature potential of the molecule in its ground state.
pub fn u_zero_temperature(mol: &Molecule, surf: &PermittivityModel, z: f64, q: &QuadratureSettings) -> Result<f64> {
    Ok(u_zero_temperature_at(mol, surf, 0.0, z, q)?.0)
}

/// Thermal photon number `1/(e^{ħω/k_BT} − 1)`; zero at T = 0.
pub fn n_thermal(omega: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega / (BOLTZMANN * t);
    1.0 / x.exp_m1()
}

/// ε at a real frequency, as needed by the resonant term.
fn eps_for_resonance(surf: &PermittivityModel, omega: f64) -> Result<Option<Complex64>> {
    match surf {
        PermittivityModel::PerfectConductor => Ok(None),
        PermittivityModel::TabulatedIm(m) => Ok(Some(Complex64::new(m.eps_real_below_edge(omega, KK_REL_TOL)?, 0.0))),
        other => Ok(Some(eval_eps_real(other, omega)?)),
    }
}

/// `∫ dk∥ (k∥/k⊥) Im{e^{2ik⊥z} [r_s − (2k⊥²c²/ω² − 1) r_p]}`, returned with its error.
fn resonant_integral(eps: Option<Complex64>, omega: f64, z: f64, q: &QuadratureSettings) -> Result<(f64, f64)> {
    let k = omega / SPEED_OF_LIGHT;
    let phase = 2.0 * k * z;
    let refl = |kz: Complex64| -> (Complex64, Complex64) {
        match eps {
            None => (Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)),
            Some(e) => {
                // k⊥ and k⊥₁ in units of ω/c
                let kz1 = sqrt_upper(e - 1.0 + kz * kz);
                ((kz - kz1) / (kz + kz1), (e * kz - kz1) / (e * kz + kz1))
            }
        }
    };
    // Propagating part, u = k⊥c/ω ∈ [0, 1], split into half-period panels.
    let prop = |u: f64| {
        let (rs, rp) = refl(Complex64::new(u, 0.0));
        let ph = Complex64::from_polar(1.0, phase * u);
        (ph * (rs - (2.0 * u * u - 1.0) * rp)).im
    };
    let panels = ((phase / PI).ceil() as usize).max(1);
    let mut p_sum = CompensatedSum::new();
    let mut p_err = 0.0;
    for i in 0..panels {
        let a = i as f64 / panels as f64;
        let b = (i + 1) as f64 / panels as f64;
        let r = integrate(prop, a, b, q.opts(0.1 * q.rel_tol).with_abs(1e-14))?;
        p_sum.add(r.value);
        p_err += r.abs_error;
    }
    // Evanescent part, k⊥ = i v ω/c.
    let evan = |v: f64| {
        let decay = (-phase * v).exp();
        if decay == 0.0 {
            return 0.0;
        }
        let (rs, rp) = refl(Complex64::new(0.0, v));
        decay * (rs + (2.0 * v * v + 1.0) * rp).re
    };
    let scale = if phase > 0.0 { (1.0 / phase).max(1e-3) } else { 1.0 };
    let mut breaks = vec![1.0];
    if let Some(e) = eps {
        if e.re > 1.0 {
            breaks.push((e.re - 1.0).sqrt());
        }
    }
    let e_r = integrate_semi_infinite_with_breaks(evan, 0.0, scale, &breaks, q.opts(0.1 * q.rel_tol))?;
    Ok((k * (p_sum.value() - e_r.value), k * (p_err + e_r.abs_error)))
}

/// Resonant (real-photon) part. Electronic levels are taken as unpopulated;
/// each phonon line couples the ground state to one excited level.
pub fn u_resonant(
    mol: &Molecule,
    surf: &PermittivityModel,
    env: EnvConfig,
    q: &QuadratureSettings,
) -> Result<(f64, f64)> {
    env.validate()?;
    if mol.phonon.is_empty() || surf.is_vacuum() || env.t == env.t_m && env.t > 0.0 {
        // In equilibrium emission and absorption cancel line by line.
        return Ok((0.0, 0.0));
    }
    let (p0, pk) = mol.phonon_populations(env.t_m);
    let mut total = CompensatedSum::new();
    let mut err = 0.0;
    for (line, p) in mol.phonon.iter().zip(pk) {
        let n = n_thermal(line.omega_k0, env.t);
        let weight = p * (n + 1.0) - p0 * n;
        if weight == 0.0 {
            continue;
        }
        let (j, e) = resonant_integral(eps_for_resonance(surf, line.omega_k0)?, line.omega_k0, env.z, q)?;
        let pref =
            VACUUM_PERMEABILITY / (12.0 * PI) * weight * line.omega_k0 * line.omega_k0 * line.dipole * line.dipole;
        total.add(pref * j);
        err += (pref * e).abs();
    }
    Ok((total.value(), err))
}

/// Full potential. At T = 0 the non-resonant part uses the frequency integral.
pub fn u_total(
    mol: &Molecule,
    surf: &PermittivityModel,
    env: EnvConfig,
    q: &QuadratureSettings,
) -> Result<PotentialResult> {
    env.validate()?;
    let (nonres, terms, nerr) = if env.t > 0.0 {
        let r = u_nonresonant(mol, surf, env, q)?;
        (r.nonresonant, r.matsubara_terms_used, r.est_error)
    } else {
        let (v, e) = u_zero_temperature_at(mol, surf, env.t_m, env.z, q)?;
        (v, 0, e)
    };
    let (res, rerr) = u_resonant(mol, surf, env, q)?;
    Ok(PotentialResult {
        total: nonres + res,
        nonresonant: nonres,
        resonant: res,
        matsubara_terms_used: terms,
        est_error: nerr + rerr,
    })
}

/// Potential on a grid of distances, evaluated in parallel and returned in grid order.
pub fn potential_curve(
    mol: &Molecule,
    surf: &PermittivityModel,
    t: f64,
    t_m: f64,
    zs: &[f64],
    q: &QuadratureSettings,
) -> Result<Vec<PotentialResult>> {
    zs.par_iter().map(|&z| u_total(mol, surf, EnvConfig::new(t, t_m, z), q)).collect()
}
