//! Molecular polarisabilities: transition lists, Boltzmann populations,
//! ground-state, thermal and symmetrised polarisabilities, and the route from
//! a film permittivity to transitions via Clausius–Mosotti.

pub mod poly;
mod rational;

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, HBAR};
use crate::error::{CpError, Result};
use crate::quad::CompensatedSum;

pub use rational::{clausius_mosotti, decompose, DecomposedLine, Decomposition, RationalAlpha};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionKind {
    #[default]
    Electronic,
    Phonon,
}

/// A ground-state transition: frequency ω_k0, dipole |d_0k| and width Γ_k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    #[serde(rename = "omega_rad_s")]
    pub omega_k0: f64,
    #[serde(rename = "dipole_Cm")]
    pub dipole: f64,
    #[serde(rename = "width_rad_s", default)]
    pub width: f64,
    #[serde(skip)]
    pub kind: TransitionKind,
}

impl Transition {
    pub fn electronic(omega_k0: f64, dipole: f64, width: f64) -> Self {
        Self { omega_k0, dipole, width, kind: TransitionKind::Electronic }
    }

    pub fn phonon(omega_k0: f64, dipole: f64, width: f64) -> Self {
        Self { omega_k0, dipole, width, kind: TransitionKind::Phonon }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_k0.is_finite() && self.omega_k0 > 0.0) {
            return Err(CpError::InvalidParameters(format!("transition frequency {} must be positive", self.omega_k0)));
        }
        if !(self.dipole.is_finite() && self.dipole > 0.0) {
            return Err(CpError::InvalidParameters(format!("dipole {} must be positive", self.dipole)));
        }
        if !(self.width.is_finite() && self.width >= 0.0) {
            return Err(CpError::InvalidParameters(format!("width {} must be non-negative", self.width)));
        }
        Ok(())
    }

    /// `(2/3ħ) ω_k0 |d|²`, the numerator of the line in α.
    #[inline]
    pub fn strength(&self) -> f64 {
        2.0 / (3.0 * HBAR) * self.omega_k0 * self.dipole * self.dipole
    }

    /// Contribution `(2/3ħ) ω_k0|d|² / (ω_k0² − ω² − iωΓ/2)`.
    #[inline]
    pub fn alpha(&self, w: Complex64) -> Complex64 {
        self.strength() / (self.omega_k0 * self.omega_k0 - w * w - Complex64::i() * w * (0.5 * self.width))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Molecule {
    pub name: String,
    #[serde(rename = "lattice_constant_m", default, skip_serializing_if = "Option::is_none")]
    pub lattice_constant: Option<f64>,
    #[serde(default)]
    pub electronic: Vec<Transition>,
    #[serde(default)]
    pub phonon: Vec<Transition>,
    #[serde(default)]
    pub residual_alpha_inf: f64,
}

impl Molecule {
    pub fn new(name: impl Into<String>, electronic: Vec<Transition>, phonon: Vec<Transition>) -> Result<Self> {
        let mut m = Self { name: name.into(), lattice_constant: None, electronic, phonon, residual_alpha_inf: 0.0 };
        m.normalize();
        m.validate()?;
        Ok(m)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut m: Molecule = serde_json::from_str(text).map_err(|e| CpError::Parse(e.to_string()))?;
        m.normalize();
        m.validate()?;
        Ok(m)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CpError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CpError::Parse(msg) => CpError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("molecule serializes")
    }

    /// Tags transitions by list and sorts both lists by frequency.
    fn normalize(&mut self) {
        for t in &mut self.electronic {
            t.kind = TransitionKind::Electronic;
        }
        for t in &mut self.phonon {
            t.kind = TransitionKind::Phonon;
        }
        self.electronic.sort_by(|a, b| a.omega_k0.total_cmp(&b.omega_k0));
        self.phonon.sort_by(|a, b| a.omega_k0.total_cmp(&b.omega_k0));
    }

    pub fn validate(&self) -> Result<()> {
        for t in self.electronic.iter().chain(&self.phonon) {
            t.validate()?;
        }
        if let Some(a) = self.lattice_constant {
            if !(a.is_finite() && a > 0.0) {
                return Err(CpError::InvalidParameters(format!("lattice constant {a} must be positive")));
            }
        }
        if !(self.residual_alpha_inf.is_finite() && self.residual_alpha_inf >= 0.0) {
            return Err(CpError::InvalidParameters("residual_alpha_inf must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Number density η = 4/a³ of an fcc film.
    pub fn number_density(&self) -> Option<f64> {
        self.lattice_constant.map(|a| 4.0 / (a * a * a))
    }

    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.electronic.iter().chain(self.phonon.iter())
    }

    pub fn electronic_only(&self) -> Self {
        Self { phonon: Vec::new(), ..self.clone() }
    }

    pub fn phonon_only(&self) -> Self {
        Self { electronic: Vec::new(), residual_alpha_inf: 0.0, ..self.clone() }
    }

    /// Copy with every line width set to zero.
    pub fn with_zero_widths(&self) -> Self {
        let mut m = self.clone();
        for t in m.electronic.iter_mut().chain(m.phonon.iter_mut()) {
            t.width = 0.0;
        }
        m
    }

    /// Level scheme of the phonon manifold: the ground state plus one singly
    /// excited state per phonon line.
    pub fn phonon_scheme(&self) -> LevelScheme {
        let mut energies = vec![0.0];
        let mut widths = vec![0.0];
        for t in &self.phonon {
            energies.push(HBAR * t.omega_k0);
            widths.push(t.width);
        }
        LevelScheme { energies, widths }
    }

    /// Populations `(p_0, p_k)` of the phonon level scheme at T_m.
    pub fn phonon_populations(&self, t_m: f64) -> (f64, Vec<f64>) {
        let p = populations(&self.phonon_scheme(), t_m);
        (p[0], p[1..].to_vec())
    }

    /// Thermal factor `p_0k tanh(ħω_k0 / 2k_B T_m)` with `p_0k = p_0 + p_k`.
    pub fn phonon_weights(&self, t_m: f64) -> Vec<f64> {
        let (p0, pk) = self.phonon_populations(t_m);
        self.phonon.iter().zip(pk).map(|(t, p)| (p0 + p) * tanh_factor(t.omega_k0, t_m)).collect()
    }

    /// Lines of the thermal polarisability at internal temperature T_m.
    pub fn polarisability(&self, t_m: f64) -> Polarisability {
        let mut lines: Vec<Line> = self
            .electronic
            .iter()
            .map(|t| Line { omega: t.omega_k0, strength: t.strength(), half_width: 0.5 * t.width })
            .collect();
        let weights = self.phonon_weights(t_m);
        for (t, w) in self.phonon.iter().zip(weights) {
            lines.push(Line { omega: t.omega_k0, strength: w * t.strength(), half_width: 0.5 * t.width });
        }
        Polarisability { lines, residual: self.residual_alpha_inf }
    }

    /// Σ|d_0k|² over the electronic lines.
    pub fn sum_dipole_sq_electronic(&self) -> f64 {
        self.electronic.iter().map(|t| t.dipole * t.dipole).collect::<CompensatedSum>().value()
    }
}

/// `tanh(ħω / 2k_B T)`, equal to 1 at T = 0.
pub fn tanh_factor(omega: f64, t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else {
        (HBAR * omega / (2.0 * BOLTZMANN * t)).tanh()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelScheme {
    /// Energies in J, ground state first with `E_0 = 0`.
    pub energies: Vec<f64>,
    /// Level widths in rad/s, `Γ_0 = 0`.
    pub widths: Vec<f64>,
}

/// Boltzmann populations `p_n = e^{−E_n/k_B T} / Σ e^{−E_k/k_B T}`.
///
/// At T = 0 the weight is shared equally among the levels degenerate with
/// the lowest one.
pub fn populations(scheme: &LevelScheme, t_m: f64) -> Vec<f64> {
    let e = &scheme.energies;
    if e.is_empty() {
        return Vec::new();
    }
    let e_min = e.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = if t_m <= 0.0 {
        e.iter().map(|&x| if x == e_min { 1.0 } else { 0.0 }).collect()
    } else {
        let kt = BOLTZMANN * t_m;
        e.iter().map(|&x| (-(x - e_min) / kt).exp()).collect()
    };
    let z = weights.iter().copied().collect::<CompensatedSum>().value();
    weights.into_iter().map(|w| w / z).collect()
}

/// One Lorentzian line of α in the form `s / (ω₀² − ω² − iωh)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub omega: f64,
    pub strength: f64,
    pub half_width: f64,
}

/// A polarisability ready for repeated evaluation: weighted lines plus a
/// frequency-independent remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct Polarisability {
    pub lines: Vec<Line>,
    pub residual: f64,
}

impl Polarisability {
    pub fn at(&self, w: Complex64) -> Complex64 {
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        re.add(self.residual);
        for l in &self.lines {
            let v = l.strength / (l.omega * l.omega - w * w - Complex64::i() * w * l.half_width);
            re.add(v.re);
            im.add(v.im);
        }
        Complex64::new(re.value(), im.value())
    }

    /// α(iξ), real.
    pub fn imag_axis(&self, xi: f64) -> f64 {
        let mut s = CompensatedSum::new();
        s.add(self.residual);
        for l in &self.lines {
            s.add(l.strength / (l.omega * l.omega + xi * xi + xi * l.half_width));
        }
        s.value()
    }

    /// ½[α(iξ) + α(−iξ)].
    pub fn symmetrised(&self, xi: f64) -> f64 {
        let mut s = CompensatedSum::new();
        s.add(self.residual);
        let x2 = xi * xi;
        for l in &self.lines {
            let base = l.omega * l.omega + x2;
            let h = xi * l.half_width;
            // ½ (1/(b + h) + 1/(b − h)) = b / (b² − h²)
            s.add(l.strength * base / ((base - h) * (base + h)));
        }
        s.value()
    }

    pub fn static_value(&self) -> f64 {
        self.imag_axis(0.0)
    }

    /// Smallest and largest line frequencies.
    pub fn frequency_range(&self) -> Option<(f64, f64)> {
        let lo = self.lines.iter().map(|l| l.omega).reduce(f64::min)?;
        let hi = self.lines.iter().map(|l| l.omega).reduce(f64::max)?;
        Some((lo, hi))
    }

    /// Median line frequency, a natural scale for ξ-integrals.
    pub fn median_frequency(&self) -> Option<f64> {
        let mut w: Vec<f64> = self.lines.iter().map(|l| l.omega).collect();
        if w.is_empty() {
            return None;
        }
        w.sort_by(f64::total_cmp);
        Some(w[w.len() / 2])
    }
}

/// α_0(ω) summed over all transitions, plus the residual constant.
pub fn alpha_ground(mol: &Molecule, omega: Complex64) -> Complex64 {
    mol.polarisability(0.0).at(omega)
}

/// Thermal α at internal temperature T_m: electronic lines unweighted,
/// phonon lines weighted by `p_0k tanh(ħω_k0/2k_B T_m)`.
pub fn alpha_thermal(mol: &Molecule, t_m: f64, omega: Complex64) -> Complex64 {
    mol.polarisability(t_m).at(omega)
}

/// ½[α(iξ) + α(−iξ)] at internal temperature T_m.
pub fn alpha_sym(mol: &Molecule, t_m: f64, xi: f64) -> f64 {
    mol.polarisability(t_m).symmetrised(xi)
}
