//! Power-law coefficients of the potential: nonretarded `C3` (three
//! polarisability conventions), retarded `C4`, thermal `C3T`, and the phonon
//! `C3`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, HBAR, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::dielectric::{eval_eps_imag, static_eps, PermittivityModel, StaticEps};
use crate::error::{CpError, Result};
use crate::molecule::{Molecule, Polarisability};
use crate::quad::{integrate, integrate_with_breaks, CompensatedSum, QuadOptions};

/// Which polarisability enters the nonretarded coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum C3Mode {
    /// ½[α(iξ) + α(−iξ)].
    Symmetrised,
    /// All widths set to zero.
    ZeroWidth,
    /// α(iξ) alone, as in linear-response theory.
    Lrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesRegime {
    LargeEps,
    SmallChi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoeffSet {
    #[serde(rename = "C3")]
    pub c3: f64,
    #[serde(rename = "C3_zero_width")]
    pub c3_zero_width: f64,
    #[serde(rename = "C3_lrt")]
    pub c3_lrt: f64,
    #[serde(rename = "C4")]
    pub c4: f64,
    #[serde(rename = "C3T")]
    pub c3t: f64,
    #[serde(rename = "C3_phonon")]
    pub c3_phonon: f64,
}

/// `3ħcα₀ / (64π²ε₀)`, the common prefactor of every C4 expression.
pub fn c4_prefactor(alpha0: f64) -> f64 {
    3.0 * HBAR * SPEED_OF_LIGHT * alpha0 / (64.0 * PI * PI * VACUUM_PERMITTIVITY)
}

/// `C3T = k_B T α₀ / (16πε₀) · (ε(0) − 1)/(ε(0) + 1)`.
pub fn c3t(alpha0: f64, surf: &PermittivityModel, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(CpError::Domain(format!("temperature {t} must be positive")));
    }
    let rp0 = static_eps(surf)?.rp0();
    Ok(BOLTZMANN * t * alpha0 / (16.0 * PI * VACUUM_PERMITTIVITY) * rp0)
}

fn check_static(eps: StaticEps) -> Result<Option<f64>> {
    match eps {
        StaticEps::Infinite => Ok(None),
        StaticEps::Finite(e) if e >= 1.0 && e.is_finite() => Ok(Some(e)),
        StaticEps::Finite(e) => Err(CpError::Domain(format!("static permittivity {e} must be >= 1"))),
    }
}

/// Dimensionless C4 integral, written in `s = 1/v` so that no term cancels:
/// `∫₀¹ ds (ε−1) [(2 − s²)(ε + 1 − s²)/(ε + w)² + s⁴/(1 + w)²]`, `w = √(1 + (ε−1)s²)`.
fn c4_reduced_integral(eps: f64) -> Result<f64> {
    let chi = eps - 1.0;
    let f = |s: f64| {
        let s2 = s * s;
        let w = (1.0 + chi * s2).sqrt();
        chi * ((2.0 - s2) * (eps + 1.0 - s2) / ((eps + w) * (eps + w)) + s2 * s2 / ((1.0 + w) * (1.0 + w)))
    };
    Ok(integrate(f, 0.0, 1.0, QuadOptions::rel(1e-13))?.value)
}

/// Retarded coefficient by quadrature.
pub fn c4_integral(alpha0: f64, eps_static: StaticEps) -> Result<f64> {
    match check_static(eps_static)? {
        None => Ok(2.0 * c4_prefactor(alpha0)),
        Some(1.0) => Ok(0.0),
        Some(e) => Ok(c4_prefactor(alpha0) * c4_reduced_integral(e)?),
    }
}

// Expansion of the reduced C4 integral in χ = ε − 1, terms χ¹ … χ¹⁶.
const CHI_SERIES: [f64; 16] = [
    0.766_666_666_666_666_666_67,
    -0.402_380_952_380_952_380_95,
    0.224_503_968_253_968_253_97,
    -0.129_685_245_310_245_310_25,
    0.077_256_163_974_913_974_914,
    -0.047_499_939_296_814_296_814,
    0.030_195_162_431_777_781_042,
    -0.019_873_759_121_405_394_141,
    0.013_549_031_887_460_302_103,
    -0.009_560_521_203_242_422_779_6,
    0.006_968_941_334_752_802_741_9,
    -0.005_233_208_019_909_885_728_1,
    0.004_035_474_442_136_390_835_1,
    -0.003_185_058_998_826_379_410_7,
    0.002_564_972_999_551_016_544_6,
    -0.002_101_441_298_159_219_765_8,
];

// Large-ε expansion in t = 1/√ε: Σ tⁿ (A[n] + B[n] ln t).
const LARGE_A: [f64; 14] = [
    2.0,
    -2.5,
    2.933_333_333_333_333_333_3,
    -3.496_108_208_346_502_594_9,
    4.914_285_714_285_714_285_7,
    -3.572_821_413_206_516_267_6,
    3.187_301_587_301_587_301_6,
    -3.700_412_312_519_753_892_4,
    4.738_816_738_816_738_816_7,
    -3.702_247_135_868_939_358_9,
    3.318_015_318_015_317_959_4,
    -3.764_194_774_189_753_615_7,
    4.636_519_175_290_548_634_8,
    -3.751_448_268_135_708_525_2,
];
const LARGE_B: [f64; 14] = [
    0.0,
    0.0,
    0.0,
    3.0,
    0.0,
    2.75,
    0.0,
    4.5,
    0.0,
    4.156_25,
    0.0,
    5.554_687_499_997_200_938_3,
    0.0,
    5.221_650_191_138_153_676_1,
];

const CHI_SWITCH: f64 = 0.02;
const LARGE_SWITCH: f64 = 300.0;

fn c4_reduced_closed(eps: f64) -> f64 {
    let chi = eps - 1.0;
    if chi < CHI_SWITCH {
        return CHI_SERIES.iter().rev().fold(0.0, |acc, &c| (acc + c) * chi);
    }
    if eps > LARGE_SWITCH {
        let t = eps.sqrt().recip();
        let lt = t.ln();
        let mut s = CompensatedSum::new();
        let mut tn = 1.0;
        for n in 0..LARGE_A.len() {
            s.add(tn * (LARGE_A[n] + LARGE_B[n] * lt));
            tn *= t;
        }
        return s.value();
    }
    let se = eps.sqrt();
    let sp = (eps + 1.0).sqrt();
    let sm = chi.sqrt();
    let first = (10.0 - 3.0 * se - 4.0 * eps - 3.0 * eps * se + 6.0 * eps * eps) / (3.0 * chi);
    let second = eps * eps / sp * (((sp - 1.0) / (sp + 1.0)).ln() + 2.0 * (se + sp).ln());
    let third = (2.0 * eps * eps * eps - 4.0 * eps * eps + 3.0 * eps + 1.0) / (chi * sm) * (se + sm).ln();
    first + second - third
}

/// Retarded coefficient from the explicit formula, with series branches
/// close to ε = 1 and for large ε where the formula cancels badly.
pub fn c4_closed(alpha0: f64, eps_static: StaticEps) -> Result<f64> {
    match check_static(eps_static)? {
        None => Ok(2.0 * c4_prefactor(alpha0)),
        Some(1.0) => Ok(0.0),
        Some(e) => Ok(c4_prefactor(alpha0) * c4_reduced_closed(e)),
    }
}

/// Leading terms only: `2 − 5/(2√ε) + 44/(15ε)` or `23χ/30 − 169χ²/420`.
pub fn c4_series(alpha0: f64, eps_static: f64, regime: SeriesRegime) -> Result<f64> {
    if !(eps_static >= 1.0) {
        return Err(CpError::Domain(format!("static permittivity {eps_static} must be >= 1")));
    }
    let reduced = match regime {
        SeriesRegime::LargeEps => 2.0 - 5.0 / (2.0 * eps_static.sqrt()) + 44.0 / (15.0 * eps_static),
        SeriesRegime::SmallChi => {
            let chi = eps_static - 1.0;
            23.0 / 30.0 * chi - 169.0 / 420.0 * chi * chi
        }
    };
    Ok(c4_prefactor(alpha0) * reduced)
}

/// `(ε(iξ) − 1)/(ε(iξ) + 1)`, the nonretarded reflection factor.
pub fn nonretarded_rp(surf: &PermittivityModel, xi: f64) -> Result<f64> {
    if surf.is_perfect_conductor() {
        return Ok(1.0);
    }
    if xi == 0.0 {
        return Ok(static_eps(surf)?.rp0());
    }
    let e = eval_eps_imag(surf, xi)?;
    Ok((e - 1.0) / (e + 1.0))
}

fn c3_from_polarisability(pol: &Polarisability, surf: &PermittivityModel, symmetrised: bool) -> Result<f64> {
    if surf.is_vacuum() {
        return Ok(0.0);
    }
    if pol.residual != 0.0 && surf.is_perfect_conductor() {
        return Err(CpError::QuadratureFailure(
            "a constant polarisability remainder makes C3 diverge against a perfect conductor".into(),
        ));
    }
    let Some(w_ref) = pol.median_frequency() else {
        return Ok(0.0);
    };
    let (w_lo, w_hi) = pol.frequency_range().expect("lines present");
    let mut err = None;
    let mut integrand = |xi: f64| {
        let a = if symmetrised { pol.symmetrised(xi) } else { pol.imag_axis(xi) };
        match nonretarded_rp(surf, xi) {
            Ok(r) => a * r,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        }
    };
    // ξ = ω_ref u/(1 − u)
    let g = move |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let om = 1.0 - u;
        integrand(w_ref * u / om) * w_ref / (om * om)
    };
    let to_u = |xi: f64| xi / (xi + w_ref);
    let breaks = [0.0, to_u(w_lo), to_u(w_ref), to_u(w_hi), 1.0];
    let r = integrate_with_breaks(g, &breaks, QuadOptions::rel(1e-11))?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(HBAR / (16.0 * PI * PI * VACUUM_PERMITTIVITY) * r.value)
}

/// Nonretarded coefficient of the ground-state molecule.
pub fn c3_nonret(mol: &Molecule, surf: &PermittivityModel, mode: C3Mode) -> Result<f64> {
    match mode {
        C3Mode::Symmetrised => c3_from_polarisability(&mol.polarisability(0.0), surf, true),
        C3Mode::ZeroWidth => c3_from_polarisability(&mol.with_zero_widths().polarisability(0.0), surf, true),
        C3Mode::Lrt => c3_from_polarisability(&mol.polarisability(0.0), surf, false),
    }
}

/// `Σ|d_0k|² / (48πε₀)` over the electronic lines, the zero-width
/// perfect-conductor value of C3.
pub fn c3_perfect_zero_width(mol: &Molecule) -> f64 {
    mol.sum_dipole_sq_electronic() / (48.0 * PI * VACUUM_PERMITTIVITY)
}

/// `Σ_{n,k} p_n |d_nk|² / (48πε₀)` over the phonon lines, with the ground
/// state and one excited level per line populated at T_m.
pub fn c3_phonon(mol: &Molecule, t_m: f64) -> f64 {
    if mol.phonon.is_empty() {
        return 0.0;
    }
    let (p0, pk) = mol.phonon_populations(t_m);
    let s: CompensatedSum = mol.phonon.iter().zip(pk).map(|(t, p)| (p0 + p) * t.dipole * t.dipole).collect();
    s.value() / (48.0 * PI * VACUUM_PERMITTIVITY)
}

/// All coefficients for one molecule/surface pair. The optical coefficients
/// use the electronic lines; `C3_phonon` uses the phonon lines.
pub fn coeff_set(mol: &Molecule, surf: &PermittivityModel, t: f64, t_m: f64) -> Result<CoeffSet> {
    let optical = mol.electronic_only();
    let alpha0 = optical.polarisability(0.0).static_value();
    let eps0 = static_eps(surf)?;
    let vacuum = surf.is_vacuum();
    Ok(CoeffSet {
        c3: c3_nonret(&optical, surf, C3Mode::Symmetrised)?,
        c3_zero_width: c3_nonret(&optical, surf, C3Mode::ZeroWidth)?,
        c3_lrt: c3_nonret(&optical, surf, C3Mode::Lrt)?,
        c4: c4_closed(alpha0, eps0)?,
        c3t: if t > 0.0 { c3t(alpha0, surf, t)? } else { 0.0 },
        c3_phonon: if vacuum { 0.0 } else { c3_phonon(mol, t_m) },
    })
}

/// A labelled row of a coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffRow {
    pub molecule: String,
    pub surface: String,
    #[serde(flatten)]
    pub coeffs: CoeffSet,
}

/// Fixed-column text table, one row per pair.
pub fn format_table(rows: &[CoeffRow]) -> String {
    let mut out = format!(
        "{:<10} {:<18} {:>12} {:>14} {:>12} {:>12} {:>12} {:>12}\n",
        "molecule", "surface", "C3[Jm3]", "C3_G0[Jm3]", "C3_LRT[Jm3]", "C4[Jm4]", "C3T[Jm3]", "C3_ph[Jm3]"
    );
    for r in rows {
        let c = &r.coeffs;
        out.push_str(&format!(
            "{:<10} {:<18} {:>12.4e} {:>14.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}\n",
            r.molecule, r.surface, c.c3, c.c3_zero_width, c.c3_lrt, c.c4, c.c3t, c.c3_phonon
        ));
    }
    out
}
