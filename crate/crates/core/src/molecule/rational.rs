//! Clausius–Mosotti polarisability as an exact rational function, and its
//! partial-fraction decomposition into molecular transitions.
//!
//! Everything is written in the imaginary-axis variable ξ (ω = iξ), scaled by
//! a reference frequency for conditioning: `x = ξ / scale`. In this variable
//! every oscillator factor `x² + (γ/s) x + (Ω/s)²` has real coefficients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly;
use super::{populations, tanh_factor, LevelScheme, Molecule, Transition, TransitionKind};
use crate::constants::{HBAR, VACUUM_PERMITTIVITY};
use crate::dielectric::OscillatorSet;
use crate::error::{CpError, Result};
use crate::quad::CompensatedSum;

/// `α(iξ) = prefactor · [constant + N(x) / D(x)]` with `x = ξ / scale` and
/// `deg N < deg D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalAlpha {
    pub scale: f64,
    pub prefactor: f64,
    pub constant: f64,
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
}

impl RationalAlpha {
    /// α(iξ).
    pub fn eval_imag(&self, xi: f64) -> f64 {
        let x = xi / self.scale;
        let n = poly::eval_real(&self.numerator, x);
        let d = poly::eval_real(&self.denominator, x);
        self.prefactor * (self.constant + n / d)
    }

    /// α(ω) for complex ω.
    pub fn eval(&self, w: Complex64) -> Complex64 {
        let x = -Complex64::i() * w / self.scale;
        let n = poly::eval(&self.numerator, x);
        let d = poly::eval(&self.denominator, x);
        self.prefactor * (self.constant + n / d)
    }

    pub fn static_value(&self) -> f64 {
        self.eval_imag(0.0)
    }
}

/// `α = (3ε₀/η) (ε − 1)/(ε + 2)` as an exact rational function.
pub fn clausius_mosotti(eps: &OscillatorSet, number_density: f64) -> Result<RationalAlpha> {
    eps.validate()?;
    if !(number_density.is_finite() && number_density > 0.0) {
        return Err(CpError::InvalidParameters("number density must be positive".into()));
    }
    let scale = if eps.oscillators.is_empty() {
        1.0
    } else {
        let mean_log = eps.oscillators.iter().map(|o| o.omega.ln()).sum::<f64>() / eps.oscillators.len() as f64;
        mean_log.exp()
    };
    let factors: Vec<[f64; 3]> = eps
        .oscillators
        .iter()
        .map(|o| {
            let w = o.omega / scale;
            [w * w, o.gamma / scale, 1.0]
        })
        .collect();
    let mut common = vec![1.0];
    for q in &factors {
        common = poly::mul(&common, q);
    }
    // ε · D = ε_∞ D + Σ_i f_i Ω_i² Π_{j≠i} q_j
    let mut eps_num = poly::scale(&common, eps.eps_inf);
    for (i, o) in eps.oscillators.iter().enumerate() {
        let w = o.omega / scale;
        let mut term = vec![o.f * w * w];
        for (j, q) in factors.iter().enumerate() {
            if j != i {
                term = poly::mul(&term, q);
            }
        }
        eps_num = poly::add(&eps_num, &term);
    }
    let num = poly::add(&eps_num, &poly::scale(&common, -1.0));
    let den = poly::add(&eps_num, &poly::scale(&common, 2.0));
    let n = den.len() - 1;
    let constant = num.get(n).copied().unwrap_or(0.0) / den[n];
    let mut rem = poly::add(&num, &poly::scale(&den, -constant));
    rem.truncate(n);
    let rem = poly::trim(rem, 1e-15);
    Ok(RationalAlpha {
        scale,
        prefactor: 3.0 * VACUUM_PERMITTIVITY / number_density,
        constant,
        numerator: rem,
        denominator: den,
    })
}

/// One partial fraction `(A − iBω) / (ω_k0² − ω² − iωΓ/2)`. The form with
/// `B = 0` is a molecular transition; `B` is kept so that the decomposition
/// reproduces the rational function exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecomposedLine {
    pub omega_k0: f64,
    pub width: f64,
    /// C²m²/J · rad²/s²
    pub a: f64,
    /// C²m²/J · rad/s
    pub b: f64,
}

impl DecomposedLine {
    /// |d_0k| from `A = (2/3ħ) ω_k0 |d|²`.
    pub fn dipole(&self) -> f64 {
        (1.5 * HBAR * self.a / self.omega_k0).sqrt()
    }

    fn at(&self, w: Complex64) -> Complex64 {
        let i = Complex64::i();
        (self.a - i * self.b * w) / (self.omega_k0 * self.omega_k0 - w * w - i * w * (0.5 * self.width))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub lines: Vec<DecomposedLine>,
    pub residual_alpha_inf: f64,
}

impl Decomposition {
    /// Rebuilt α(ω), including the `B` terms.
    pub fn eval(&self, w: Complex64) -> Complex64 {
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        re.add(self.residual_alpha_inf);
        for l in &self.lines {
            let v = l.at(w);
            re.add(v.re);
            im.add(v.im);
        }
        Complex64::new(re.value(), im.value())
    }

    /// Transitions read off in the `B = 0` form.
    pub fn transitions(&self, kind: TransitionKind) -> Vec<Transition> {
        self.lines
            .iter()
            .map(|l| Transition { omega_k0: l.omega_k0, dipole: l.dipole(), width: l.width, kind })
            .collect()
    }

    /// Phonon transitions of a spectrum measured at internal temperature
    /// T_m, with the thermal factor `p_0k tanh(ħω/2k_BT_m)` divided out.
    /// Populations use the ground state plus one excited level per line.
    pub fn ground_state_phonons(&self, t_m: f64) -> Vec<Transition> {
        let mut scheme = LevelScheme { energies: vec![0.0], widths: vec![0.0] };
        for l in &self.lines {
            scheme.energies.push(HBAR * l.omega_k0);
            scheme.widths.push(l.width);
        }
        let p = populations(&scheme, t_m);
        self.lines
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let weight = (p[0] + p[k + 1]) * tanh_factor(l.omega_k0, t_m);
                Transition {
                    omega_k0: l.omega_k0,
                    dipole: l.dipole() / weight.sqrt(),
                    width: l.width,
                    kind: TransitionKind::Phonon,
                }
            })
            .collect()
    }

    /// Electronic molecule carrying the residual constant.
    pub fn into_molecule(self, name: impl Into<String>) -> Result<Molecule> {
        let mut m = Molecule::new(name, self.transitions(TransitionKind::Electronic), Vec::new())?;
        m.residual_alpha_inf = self.residual_alpha_inf;
        Ok(m)
    }
}

/// Splits α into partial fractions over conjugate root pairs of the denominator.
pub fn decompose(alpha: &RationalAlpha) -> Result<Decomposition> {
    let den = &alpha.denominator;
    let residual = alpha.prefactor * alpha.constant;
    if den.len() <= 1 || alpha.numerator.is_empty() {
        return Ok(Decomposition { lines: Vec::new(), residual_alpha_inf: residual });
    }
    let roots = poly::roots(den)?;
    let scale_mag = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let tiny = 1e-9 * scale_mag;
    let upper: Vec<Complex64> = roots.iter().copied().filter(|r| r.im > tiny).collect();
    let lower: Vec<Complex64> = roots.iter().copied().filter(|r| r.im < -tiny).collect();
    if upper.len() + lower.len() != roots.len() {
        return Err(CpError::DecompositionFailure(
            "denominator has real roots; the response is overdamped or not passive".into(),
        ));
    }
    if upper.len() != lower.len() {
        return Err(CpError::DecompositionFailure("roots do not form conjugate pairs".into()));
    }
    for r in &upper {
        let partner = lower.iter().map(|l| (l - r.conj()).norm()).fold(f64::INFINITY, f64::min);
        if partner > 1e-6 * r.norm() {
            return Err(CpError::DecompositionFailure(format!("no conjugate partner for root {r}")));
        }
    }
    let dden = poly::derivative(den);
    let s = alpha.scale;
    let mut lines = Vec::with_capacity(upper.len());
    for r in upper {
        if r.re >= 0.0 {
            return Err(CpError::DecompositionFailure(format!("root {r} lies in the growing half-plane")));
        }
        let res = poly::eval(&alpha.numerator, r) / poly::eval(&dden, r);
        // R/(x − ρ) + R̄/(x − ρ̄) = (2Re R · x − 2Re(R ρ̄)) / (x² − 2Re ρ · x + |ρ|²)
        let b = 2.0 * res.re;
        let a = -2.0 * (res * r.conj()).re;
        let line = DecomposedLine {
            omega_k0: r.norm() * s,
            width: -4.0 * r.re * s,
            a: alpha.prefactor * a * s * s,
            b: alpha.prefactor * b * s,
        };
        if !(line.a > 0.0) {
            return Err(CpError::DecompositionFailure(format!(
                "negative oscillator strength at {:.4e} rad/s",
                line.omega_k0
            )));
        }
        lines.push(line);
    }
    lines.sort_by(|x, y| x.omega_k0.total_cmp(&y.omega_k0));
    // Merge numerically coincident roots.
    let mut merged: Vec<DecomposedLine> = Vec::with_capacity(lines.len());
    for l in lines {
        match merged.last_mut() {
            Some(prev) if (l.omega_k0 - prev.omega_k0).abs() <= 1e-9 * l.omega_k0 => {
                prev.a += l.a;
                prev.b += l.b;
            }
            _ => merged.push(l),
        }
    }
    Ok(Decomposition { lines: merged, residual_alpha_inf: residual })
}
