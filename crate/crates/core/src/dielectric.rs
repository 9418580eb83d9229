//! Surface and film permittivity models, evaluated on the real axis and on
//! the imaginary axis, plus Fresnel reflection coefficients for both.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::SPEED_OF_LIGHT;
use crate::error::{CpError, Result};
use crate::quad::{integrate_with_breaks, CompensatedSum, QuadOptions};

/// One Lorentz oscillator `f Ω² / (Ω² − ω² − iγω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Oscillator {
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub f: f64,
    pub gamma: f64,
}

impl Oscillator {
    pub fn new(omega: f64, f: f64, gamma: f64) -> Self {
        Self { omega, f, gamma }
    }

    #[inline]
    pub fn at(&self, w: Complex64) -> Complex64 {
        let o2 = self.omega * self.omega;
        self.f * o2 / (o2 - w * w - Complex64::i() * self.gamma * w)
    }

    #[inline]
    pub fn at_imag(&self, xi: f64) -> f64 {
        let o2 = self.omega * self.omega;
        self.f * o2 / (o2 + xi * xi + self.gamma * xi)
    }
}

fn check_oscillators(osc: &[Oscillator]) -> Result<()> {
    for o in osc {
        if !(o.omega.is_finite()
            && o.omega > 0.0
            && o.f.is_finite()
            && o.f > 0.0
            && o.gamma.is_finite()
            && o.gamma > 0.0)
        {
            return Err(CpError::InvalidParameters(format!("oscillator {o:?} must be finite and positive")));
        }
    }
    if osc.windows(2).any(|w| w[0].omega > w[1].omega) {
        return Err(CpError::InvalidParameters("oscillators must be sorted by Omega".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorSet {
    pub eps_inf: f64,
    #[serde(default)]
    pub oscillators: Vec<Oscillator>,
}

impl OscillatorSet {
    pub fn new(eps_inf: f64, mut oscillators: Vec<Oscillator>) -> Result<Self> {
        oscillators.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        let s = Self { eps_inf, oscillators };
        s.validate()?;
        Ok(s)
    }

    /// ε ≡ 1.
    pub fn vacuum() -> Self {
        Self { eps_inf: 1.0, oscillators: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_inf.is_finite() && self.eps_inf >= 1.0) {
            return Err(CpError::InvalidParameters(format!("eps_inf = {} must be >= 1", self.eps_inf)));
        }
        check_oscillators(&self.oscillators)
    }

    pub fn eps(&self, w: Complex64) -> Complex64 {
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        re.add(self.eps_inf);
        for o in &self.oscillators {
            let t = o.at(w);
            re.add(t.re);
            im.add(t.im);
        }
        Complex64::new(re.value(), im.value())
    }

    pub fn eps_imag(&self, xi: f64) -> f64 {
        let mut s = CompensatedSum::new();
        s.add(self.eps_inf);
        for o in &self.oscillators {
            s.add(o.at_imag(xi));
        }
        s.value()
    }

    pub fn static_eps(&self) -> f64 {
        let mut s = CompensatedSum::new();
        s.add(self.eps_inf);
        for o in &self.oscillators {
            s.add(o.f);
        }
        s.value()
    }
}

/// Drude term for the conduction electrons plus Lorentz oscillators, with ε_∞ = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrudeLorentz {
    #[serde(rename = "Omega_0")]
    pub plasma: f64,
    #[serde(rename = "gamma_0")]
    pub damping: f64,
    #[serde(default)]
    pub oscillators: Vec<Oscillator>,
}

impl DrudeLorentz {
    pub fn validate(&self) -> Result<()> {
        if !(self.plasma.is_finite() && self.plasma > 0.0 && self.damping.is_finite() && self.damping > 0.0) {
            return Err(CpError::InvalidParameters("Omega_0 and gamma_0 must be positive".into()));
        }
        check_oscillators(&self.oscillators)
    }

    pub fn eps(&self, w: Complex64) -> Complex64 {
        let drude = -self.plasma * self.plasma / (w * (w + Complex64::i() * self.damping));
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        re.add(1.0);
        re.add(drude.re);
        im.add(drude.im);
        for o in &self.oscillators {
            let t = o.at(w);
            re.add(t.re);
            im.add(t.im);
        }
        Complex64::new(re.value(), im.value())
    }

    pub fn eps_imag(&self, xi: f64) -> f64 {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        s.add(self.plasma * self.plasma / (xi * (xi + self.damping)));
        for o in &self.oscillators {
            s.add(o.at_imag(xi));
        }
        s.value()
    }
}

/// Sign convention for the resonance denominator of the tabulated Im ε model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SinxDenominator {
    /// `(ω² − Ω²)² − γ²ω²`, as the model is usually quoted. Changes sign twice.
    #[default]
    #[serde(alias = "paper")]
    Printed,
    /// `(ω² − Ω²)² + γ²ω²`, the damped-oscillator form. Passive everywhere.
    Lorentzian,
}

impl std::str::FromStr for SinxDenominator {
    type Err = CpError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" | "paper" => Ok(Self::Printed),
            "lorentzian" => Ok(Self::Lorentzian),
            other => Err(CpError::Parse(format!("unknown denominator `{other}` (printed|lorentzian)"))),
        }
    }
}

/// Absorption-edge model: only Im ε(ω) is known, for ω > Ω_T.
/// Imaginary-axis values come from the Kramers–Kronig transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedImEps {
    #[serde(rename = "Omega_T")]
    pub omega_t: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub f: f64,
    pub gamma: f64,
    #[serde(default)]
    pub denominator: SinxDenominator,
}

impl TabulatedImEps {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("Omega_T", self.omega_t), ("Omega", self.omega), ("f", self.f), ("gamma", self.gamma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CpError::InvalidParameters(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    fn denom(&self, w: f64) -> f64 {
        let d = w * w - self.omega * self.omega;
        let g = self.gamma * w;
        match self.denominator {
            SinxDenominator::Printed => d * d - g * g,
            SinxDenominator::Lorentzian => d * d + g * g,
        }
    }

    /// Im ε(ω) on the real axis.
    pub fn im_eps(&self, w: f64) -> f64 {
        if w <= self.omega_t {
            return 0.0;
        }
        let edge = w - self.omega_t;
        self.f * self.omega * self.gamma * edge * edge / (self.denom(w) * w)
    }

    /// Positive real zeros of the denominator above Ω_T (only for [`SinxDenominator::Printed`]).
    pub fn poles(&self) -> Vec<f64> {
        if self.denominator == SinxDenominator::Lorentzian {
            return Vec::new();
        }
        // ω² ∓ γω − Ω² = 0
        let (o, g) = (self.omega, self.gamma);
        let disc = (g * g + 4.0 * o * o).sqrt();
        let mut p: Vec<f64> = [0.5 * (disc - g), 0.5 * (disc + g)].into_iter().filter(|&w| w > self.omega_t).collect();
        p.sort_by(f64::total_cmp);
        p
    }

    /// ε(iξ) = 1 + (2/π) ∫ ω Im ε(ω) / (ω² + ξ²) dω. Poles of the `printed`
    /// denominator are handled as Cauchy principal values.
    pub fn eps_imag(&self, xi: f64, rel_tol: f64) -> Result<f64> {
        let integrand = |w: f64| w * self.im_eps(w) / (w * w + xi * xi);
        let ot = self.omega_t;
        // ω = Ω_T (1 + tan θ)
        let mapped = |theta: f64| {
            let c = theta.cos();
            if c <= 0.0 {
                return 0.0;
            }
            let w = ot * (1.0 + theta.tan());
            integrand(w) * ot / (c * c)
        };
        let to_theta = |w: f64| ((w / ot) - 1.0).atan();
        let opts = QuadOptions::rel(rel_tol).with_max_subdivisions(20_000);
        let poles = self.poles();
        let total = if poles.is_empty() {
            let peak = to_theta(self.omega);
            integrate_with_breaks(mapped, &[0.0, peak, 0.5 * PI], opts)?.value
        } else {
            // Symmetric windows around each pole, in ω; the rest in θ.
            let mut half = f64::INFINITY;
            let mut prev = ot;
            for &p in &poles {
                half = half.min(0.5 * (p - prev));
                prev = p;
            }
            let half = half.min(0.25 * poles[0]);
            let mut acc = CompensatedSum::new();
            let mut lo = 0.0;
            for &p in &poles {
                let a = to_theta(p - half);
                acc.add(integrate_with_breaks(mapped, &[lo, a], opts)?.value);
                let sym = |s: f64| integrand(p + s) + integrand(p - s);
                acc.add(integrate_with_breaks(sym, &[0.0, half], opts)?.value);
                lo = to_theta(p + half);
            }
            acc.add(integrate_with_breaks(mapped, &[lo, 0.5 * PI], opts)?.value);
            acc.value()
        };
        Ok(1.0 + 2.0 / PI * total)
    }

    /// Re ε(ω) below the absorption edge, where Im ε vanishes and the
    /// real-axis Kramers–Kronig integral has no singularity.
    pub fn eps_real_below_edge(&self, w: f64, rel_tol: f64) -> Result<f64> {
        if !(w >= 0.0 && w < self.omega_t) {
            return Err(CpError::RealPartUnavailable);
        }
        if !self.poles().is_empty() {
            return Err(CpError::RealPartUnavailable);
        }
        let ot = self.omega_t;
        let mapped = |theta: f64| {
            let c = theta.cos();
            if c <= 0.0 {
                return 0.0;
            }
            let x = ot * (1.0 + theta.tan());
            x * self.im_eps(x) / ((x - w) * (x + w)) * ot / (c * c)
        };
        let peak = ((self.omega / ot) - 1.0).atan();
        let opts = QuadOptions::rel(rel_tol).with_max_subdivisions(20_000);
        let v = integrate_with_breaks(mapped, &[0.0, peak, 0.5 * PI], opts)?.value;
        Ok(1.0 + 2.0 / PI * v)
    }
}

/// ε(ω) = (Ω_L² − ω² − iωγ_L) / (Ω_T² − ω² − iωγ_T).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiQuantum4 {
    #[serde(rename = "Omega_L")]
    pub omega_l: f64,
    #[serde(rename = "Omega_T")]
    pub omega_t: f64,
    #[serde(rename = "gamma_L")]
    pub gamma_l: f64,
    #[serde(rename = "gamma_T")]
    pub gamma_t: f64,
}

impl SemiQuantum4 {
    pub fn validate(&self) -> Result<()> {
        for v in [self.omega_l, self.omega_t, self.gamma_l, self.gamma_t] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CpError::InvalidParameters("semi-quantum parameters must be positive".into()));
            }
        }
        if self.omega_l <= self.omega_t {
            return Err(CpError::InvalidParameters("Omega_L must exceed Omega_T".into()));
        }
        Ok(())
    }

    pub fn eps(&self, w: Complex64) -> Complex64 {
        let i = Complex64::i();
        (self.omega_l * self.omega_l - w * w - i * w * self.gamma_l)
            / (self.omega_t * self.omega_t - w * w - i * w * self.gamma_t)
    }

    pub fn eps_imag(&self, xi: f64) -> f64 {
        (self.omega_l * self.omega_l + xi * xi + xi * self.gamma_l)
            / (self.omega_t * self.omega_t + xi * xi + xi * self.gamma_t)
    }

    /// Whether Im ε(ω) ≥ 0 for every ω > 0.
    pub fn is_passive(&self) -> bool {
        // Im ε ∝ ω [γ_T Ω_L² − γ_L Ω_T² + ω² (γ_L − γ_T)]
        self.gamma_l >= self.gamma_t
            && self.gamma_t * self.omega_l * self.omega_l >= self.gamma_l * self.omega_t * self.omega_t
    }
}

/// Permittivity model. JSON form: `{"type": "...", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "kebab-case")]
pub enum PermittivityModel {
    PerfectConductor,
    DrudeLorentz(DrudeLorentz),
    Oscillators(OscillatorSet),
    TabulatedIm(TabulatedImEps),
    SemiQuantum(SemiQuantum4),
}

/// Static permittivity, or the flag for models whose ε(0) is infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StaticEps {
    Finite(f64),
    Infinite,
}

impl StaticEps {
    /// `(ε − 1)/(ε + 1)`, exactly 1 for [`StaticEps::Infinite`].
    pub fn rp0(self) -> f64 {
        match self {
            StaticEps::Finite(e) => (e - 1.0) / (e + 1.0),
            StaticEps::Infinite => 1.0,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            StaticEps::Finite(e) => Some(e),
            StaticEps::Infinite => None,
        }
    }
}

impl std::fmt::Display for StaticEps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StaticEps::Finite(e) => write!(f, "{e}"),
            StaticEps::Infinite => f.write_str("inf"),
        }
    }
}

/// Default relative tolerance for the Kramers–Kronig quadrature.
pub const KK_REL_TOL: f64 = 1e-8;

impl PermittivityModel {
    pub fn vacuum() -> Self {
        PermittivityModel::Oscillators(OscillatorSet::vacuum())
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PermittivityModel::PerfectConductor => Ok(()),
            PermittivityModel::DrudeLorentz(m) => m.validate(),
            PermittivityModel::Oscillators(m) => m.validate(),
            PermittivityModel::TabulatedIm(m) => m.validate(),
            PermittivityModel::SemiQuantum(m) => m.validate(),
        }
    }

    pub fn is_perfect_conductor(&self) -> bool {
        matches!(self, PermittivityModel::PerfectConductor)
    }

    /// True for ε ≡ 1.
    pub fn is_vacuum(&self) -> bool {
        matches!(self, PermittivityModel::Oscillators(s) if s.eps_inf == 1.0 && s.oscillators.is_empty())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PermittivityModel::PerfectConductor => "perfect-conductor",
            PermittivityModel::DrudeLorentz(_) => "drude-lorentz",
            PermittivityModel::Oscillators(_) => "oscillators",
            PermittivityModel::TabulatedIm(_) => "tabulated-im",
            PermittivityModel::SemiQuantum(_) => "semi-quantum",
        }
    }

    /// Largest characteristic frequency of the model (rad/s), if any.
    pub fn max_frequency(&self) -> Option<f64> {
        match self {
            PermittivityModel::PerfectConductor => None,
            PermittivityModel::DrudeLorentz(m) => Some(m.oscillators.iter().map(|o| o.omega).fold(m.plasma, f64::max)),
            PermittivityModel::Oscillators(m) => m.oscillators.iter().map(|o| o.omega).reduce(f64::max),
            PermittivityModel::TabulatedIm(m) => Some(m.omega.max(m.omega_t)),
            PermittivityModel::SemiQuantum(m) => Some(m.omega_l),
        }
    }
}

/// ε(ω) at a real frequency.
pub fn eval_eps_real(model: &PermittivityModel, omega: f64) -> Result<Complex64> {
    if !(omega >= 0.0) {
        return Err(CpError::Domain(format!("omega = {omega} must be non-negative")));
    }
    let w = Complex64::new(omega, 0.0);
    match model {
        PermittivityModel::PerfectConductor => Err(CpError::PerfectConductorHasNoEps),
        PermittivityModel::TabulatedIm(_) => Err(CpError::RealPartUnavailable),
        PermittivityModel::DrudeLorentz(m) => {
            if omega == 0.0 {
                return Err(CpError::StaticDrudeDivergence);
            }
            Ok(m.eps(w))
        }
        PermittivityModel::Oscillators(m) => Ok(m.eps(w)),
        PermittivityModel::SemiQuantum(m) => Ok(m.eps(w)),
    }
}

/// ε(iξ), real.
pub fn eval_eps_imag(model: &PermittivityModel, xi: f64) -> Result<f64> {
    if !(xi >= 0.0) {
        return Err(CpError::Domain(format!("xi = {xi} must be non-negative")));
    }
    match model {
        PermittivityModel::PerfectConductor => Err(CpError::PerfectConductorHasNoEps),
        PermittivityModel::DrudeLorentz(m) => {
            if xi == 0.0 {
                return Err(CpError::StaticDrudeDivergence);
            }
            Ok(m.eps_imag(xi))
        }
        PermittivityModel::Oscillators(m) => Ok(m.eps_imag(xi)),
        PermittivityModel::TabulatedIm(m) => m.eps_imag(xi, KK_REL_TOL),
        PermittivityModel::SemiQuantum(m) => Ok(m.eps_imag(xi)),
    }
}

pub fn static_eps(model: &PermittivityModel) -> Result<StaticEps> {
    match model {
        PermittivityModel::PerfectConductor | PermittivityModel::DrudeLorentz(_) => Ok(StaticEps::Infinite),
        PermittivityModel::Oscillators(m) => Ok(StaticEps::Finite(m.static_eps())),
        PermittivityModel::SemiQuantum(m) => Ok(StaticEps::Finite((m.omega_l * m.omega_l) / (m.omega_t * m.omega_t))),
        PermittivityModel::TabulatedIm(m) => Ok(StaticEps::Finite(m.eps_imag(0.0, KK_REL_TOL)?)),
    }
}

/// Pair of reflection coefficients; complex in general, real on the imaginary axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionPair<T> {
    pub r_s: T,
    pub r_p: T,
}

/// Imaginary-axis coefficients given ε(iξ) directly. Written so that the
/// numerators never cancel: with κ₁² − κ² = (ε − 1)ξ²/c².
pub fn fresnel_imag(eps: f64, xi: f64, kappa: f64) -> ReflectionPair<f64> {
    if eps == 1.0 {
        return ReflectionPair { r_s: 0.0, r_p: 0.0 };
    }
    let q = xi / SPEED_OF_LIGHT;
    let chi_q2 = (eps - 1.0) * q * q;
    let kappa1 = (kappa * kappa + chi_q2).sqrt();
    let r_s = -chi_q2 / (kappa + kappa1).powi(2);
    // ε κ − κ₁ = [(ε² − 1) κ² − (ε − 1) q²] / (ε κ + κ₁)
    let r_p = (eps - 1.0) * ((eps + 1.0) * kappa * kappa - q * q) / (eps * kappa + kappa1).powi(2);
    ReflectionPair { r_s, r_p }
}

/// Reflection coefficients at imaginary frequency ξ and κ⊥ ≥ ξ/c.
pub fn refl_imag(model: &PermittivityModel, xi: f64, kappa_perp: f64) -> Result<ReflectionPair<f64>> {
    let q = xi / SPEED_OF_LIGHT;
    if !(kappa_perp >= q) || !(xi >= 0.0) {
        return Err(CpError::Domain(format!("kappa_perp = {kappa_perp} must be >= xi/c = {q}")));
    }
    if model.is_perfect_conductor() {
        return Ok(ReflectionPair { r_s: -1.0, r_p: 1.0 });
    }
    if xi == 0.0 {
        return Ok(ReflectionPair { r_s: 0.0, r_p: static_eps(model)?.rp0() });
    }
    Ok(fresnel_imag(eval_eps_imag(model, xi)?, xi, kappa_perp))
}

/// Principal square root with the branch fixed so that Im ≥ 0 (Re ≥ 0 when real).
pub fn sqrt_upper(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 || (r.im == 0.0 && r.re < 0.0) {
        -r
    } else {
        r
    }
}

/// Real-frequency coefficients given ε(ω) directly.
pub fn fresnel_real(eps: Complex64, omega: f64, k_par: f64) -> ReflectionPair<Complex64> {
    let q = omega / SPEED_OF_LIGHT;
    let kz = if k_par <= q {
        Complex64::new(((q - k_par) * (q + k_par)).sqrt(), 0.0)
    } else {
        Complex64::new(0.0, ((k_par - q) * (k_par + q)).sqrt())
    };
    let kz1 = sqrt_upper(eps * q * q - k_par * k_par);
    ReflectionPair { r_s: (kz - kz1) / (kz + kz1), r_p: (eps * kz - kz1) / (eps * kz + kz1) }
}

/// Reflection coefficients at real ω > 0 and lateral wave number k∥ ≥ 0.
pub fn refl_real(model: &PermittivityModel, omega: f64, k_par: f64) -> Result<ReflectionPair<Complex64>> {
    if !(omega > 0.0) || !(k_par >= 0.0) {
        return Err(CpError::Domain("refl_real needs omega > 0 and k_par >= 0".into()));
    }
    if model.is_perfect_conductor() {
        return Ok(ReflectionPair { r_s: Complex64::new(-1.0, 0.0), r_p: Complex64::new(1.0, 0.0) });
    }
    Ok(fresnel_real(eval_eps_real(model, omega)?, omega, k_par))
}
