//! Least-squares fits of permittivity models to tabulated spectra.
//!
//! Positive parameters are fitted in log space so they stay positive; ε_∞ is
//! fitted directly and projected onto [1, ∞).

use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dielectric::{eval_eps_real, Oscillator, OscillatorSet, PermittivityModel, SemiQuantum4};
use crate::error::{CpError, Result};
use crate::quad::CompensatedSum;

pub const MAX_ITERATIONS: usize = 10_000;
const GRADIENT_TOL: f64 = 1e-10;
const STEP_TOL: f64 = 1e-12;
/// Largest change of any log-parameter in one step.
const MAX_LOG_STEP: f64 = 1.0;
const INIT_ITERATIONS: usize = 500;
const CANDIDATES_PER_ADDITION: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub omega: f64,
    pub re_eps: Option<f64>,
    pub im_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    rows: Vec<SpectrumRow>,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    omega_rad_s: f64,
    #[serde(default)]
    re_eps: Option<f64>,
    im_eps: f64,
}

impl SpectrumTable {
    pub fn new(rows: Vec<SpectrumRow>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if !(r.omega.is_finite() && r.omega > 0.0) {
                return Err(CpError::Parse(format!("row {}: omega must be positive", i + 1)));
            }
            if !(r.im_eps.is_finite() && r.im_eps >= 0.0) {
                return Err(CpError::Parse(format!("row {}: im_eps must be non-negative", i + 1)));
            }
            if r.re_eps.is_some_and(|v| !v.is_finite()) {
                return Err(CpError::Parse(format!("row {}: re_eps is not finite", i + 1)));
            }
            if i > 0 && r.omega <= rows[i - 1].omega {
                return Err(CpError::Parse(format!("row {}: omega must be strictly ascending", i + 1)));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[SpectrumRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn has_re(&self) -> bool {
        self.rows.iter().all(|r| r.re_eps.is_some())
    }

    /// Reads `omega_rad_s,re_eps,im_eps`; the `re_eps` column may be absent.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| CpError::Parse(e.to_string()))?.clone();
        for need in ["omega_rad_s", "im_eps"] {
            if !headers.iter().any(|h| h == need) {
                return Err(CpError::Parse(format!("missing column `{need}`")));
            }
        }
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<CsvRow>() {
            let r = rec.map_err(|e| CpError::Parse(e.to_string()))?;
            rows.push(SpectrumRow { omega: r.omega_rad_s, re_eps: r.re_eps, im_eps: r.im_eps });
        }
        Self::new(rows)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| CpError::Io(format!("{}: {e}", path.display())))?;
        Self::from_reader(f)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| CpError::Io(e.to_string());
        writeln!(out, "omega_rad_s,re_eps,im_eps").map_err(io)?;
        for r in &self.rows {
            match r.re_eps {
                Some(re) => writeln!(out, "{:.17e},{:.17e},{:.17e}", r.omega, re, r.im_eps),
                None => writeln!(out, "{:.17e},,{:.17e}", r.omega, r.im_eps),
            }
            .map_err(io)?;
        }
        Ok(())
    }

    /// Exact ε(ω) of a model on the given frequencies.
    pub fn synthesize(model: &PermittivityModel, omegas: &[f64]) -> Result<Self> {
        let rows = omegas
            .iter()
            .map(|&w| {
                let e = eval_eps_real(model, w)?;
                Ok(SpectrumRow { omega: w, re_eps: Some(e.re), im_eps: e.im })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }
}

/// Frequency grid for oscillator spectra: half log-uniform over the band,
/// half clustered across each line so that narrow resonances are resolved.
pub fn resonance_grid(set: &OscillatorSet, points: usize) -> Vec<f64> {
    let osc = &set.oscillators;
    if osc.is_empty() || points < 2 {
        return Vec::new();
    }
    let lo = osc.iter().map(|o| o.omega).fold(f64::INFINITY, f64::min) / 3.0;
    let hi = osc.iter().map(|o| o.omega).fold(0.0, f64::max) * 3.0;
    let per = (points - points / 2) / osc.len();
    let base = points - per * osc.len();
    let mut grid: Vec<f64> = (0..base).map(|i| lo * (hi / lo).powf(i as f64 / (base - 1).max(1) as f64)).collect();
    for o in osc {
        for i in 0..per {
            let th = -1.4 + 2.8 * i as f64 / (per - 1).max(1) as f64;
            grid.push(o.omega + 0.5 * o.gamma * th.tan());
        }
    }
    grid.retain(|&w| w > 0.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init<T> {
    Auto,
    Given(T),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    #[default]
    Unweighted,
    /// Each row divided by |ε| of the data.
    Relative,
}

impl FromStr for Weighting {
    type Err = CpError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "unweighted" => Ok(Self::Unweighted),
            "relative" => Ok(Self::Relative),
            _ => Err(CpError::InvalidParameters(format!("unknown weighting `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub weighting: Weighting,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { weighting: Weighting::Unweighted, max_iterations: MAX_ITERATIONS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: PermittivityModel,
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FitReport {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(CpError::NonConvergence(self.iterations))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit report serialises")
    }
}

/// Weighted data on which residuals are formed.
struct Data {
    omega: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
    weight: Vec<f64>,
}

impl Data {
    fn new(table: &SpectrumTable, weighting: Weighting) -> Result<Self> {
        if !table.has_re() {
            return Err(CpError::InsufficientData("both re_eps and im_eps are required".into()));
        }
        let omega = table.rows.iter().map(|r| r.omega).collect();
        let re: Vec<f64> = table.rows.iter().map(|r| r.re_eps.unwrap_or(0.0)).collect();
        let im: Vec<f64> = table.rows.iter().map(|r| r.im_eps).collect();
        let weight = match weighting {
            Weighting::Unweighted => vec![1.0; re.len()],
            Weighting::Relative => re
                .iter()
                .zip(&im)
                .map(|(a, b)| {
                    let m = a.hypot(*b);
                    if m > 0.0 {
                        1.0 / m
                    } else {
                        1.0
                    }
                })
                .collect(),
        };
        Ok(Self { omega, re, im, weight })
    }

    fn len(&self) -> usize {
        self.omega.len()
    }
}

trait Model {
    fn n_params(&self) -> usize;
    /// ε at one frequency and, if requested, ∂ε/∂p.
    fn eval(&self, p: &[f64], w: f64, grad: Option<&mut [Complex64]>) -> Complex64;
    fn project(&self, _p: &mut [f64]) {}
    /// Indices of log-parameters, whose steps are capped.
    fn is_log(&self, i: usize) -> bool;
}

fn residuals(model: &dyn Model, p: &[f64], d: &Data) -> Vec<f64> {
    let n = d.len();
    let mut r = vec![0.0; 2 * n];
    for i in 0..n {
        let e = model.eval(p, d.omega[i], None);
        r[i] = d.weight[i] * (e.re - d.re[i]);
        r[n + i] = d.weight[i] * (e.im - d.im[i]);
    }
    r
}

fn jacobian(model: &dyn Model, p: &[f64], d: &Data) -> DMatrix<f64> {
    let n = d.len();
    let m = model.n_params();
    let mut j = DMatrix::zeros(2 * n, m);
    let mut g = vec![Complex64::new(0.0, 0.0); m];
    for i in 0..n {
        model.eval(p, d.omega[i], Some(&mut g));
        for k in 0..m {
            j[(i, k)] = d.weight[i] * g[k].re;
            j[(n + i, k)] = d.weight[i] * g[k].im;
        }
    }
    j
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).collect::<CompensatedSum>().value()
}

struct Outcome {
    params: Vec<f64>,
    cost: f64,
    iterations: usize,
    converged: bool,
}

/// Damped Gauss–Newton with a Marquardt-scaled diagonal and a ×10 / ÷10
/// damping schedule. `iterations` counts accepted steps.
fn levenberg_marquardt(model: &dyn Model, mut p: Vec<f64>, d: &Data, max_iterations: usize) -> Outcome {
    let mut lambda = 1e-3;
    let mut r = residuals(model, &p, d);
    let mut cost = sum_sq(&r);
    let mut iterations = 0;
    let done = |p: Vec<f64>, cost, iterations, converged| Outcome { params: p, cost, iterations, converged };
    if !cost.is_finite() {
        return done(p, cost, 0, false);
    }
    while iterations < max_iterations {
        if cost == 0.0 {
            return done(p, cost, iterations, true);
        }
        let j = jacobian(model, &p, d);
        let rv = DVector::from_column_slice(&r);
        let g = j.transpose() * &rv;
        let a = j.transpose() * &j;
        let norm_r = cost.sqrt();
        let scaled_grad = (0..p.len())
            .map(|k| {
                let col = j.column(k).norm();
                if col > 0.0 {
                    g[k].abs() / (col * norm_r)
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        if scaled_grad < GRADIENT_TOL {
            return done(p, cost, iterations, true);
        }
        let dmax = (0..p.len()).map(|k| a[(k, k)]).fold(0.0, f64::max);
        loop {
            let mut m = a.clone();
            for k in 0..p.len() {
                m[(k, k)] += lambda * a[(k, k)].max(1e-12 * dmax);
            }
            let step = m.lu().solve(&(-&g));
            let mut trial = p.clone();
            let mut step_size = f64::INFINITY;
            if let Some(mut s) = step {
                let big = (0..p.len()).filter(|&k| model.is_log(k)).map(|k| s[k].abs()).fold(0.0, f64::max);
                if big > MAX_LOG_STEP {
                    s /= big / MAX_LOG_STEP;
                }
                for k in 0..p.len() {
                    trial[k] += s[k];
                }
                model.project(&mut trial);
                step_size = trial.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let rt = residuals(model, &trial, d);
                let ct = sum_sq(&rt);
                if ct.is_finite() && ct < cost {
                    p = trial;
                    r = rt;
                    cost = ct;
                    lambda = (lambda / 10.0).max(1e-15);
                    iterations += 1;
                    if step_size < STEP_TOL {
                        return done(p, cost, iterations, true);
                    }
                    break;
                }
            }
            if step_size < STEP_TOL {
                return done(p, cost, iterations, true);
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                return done(p, cost, iterations, false);
            }
        }
    }
    done(p, cost, iterations, false)
}

/// ε_∞ + Σ f Ω²/(Ω² − ω² − iγω); p = [ln Ω, ln f, ln γ]ₖ…, ε_∞.
struct OscModel {
    n: usize,
}

impl Model for OscModel {
    fn n_params(&self) -> usize {
        3 * self.n + 1
    }

    fn eval(&self, p: &[f64], w: f64, mut grad: Option<&mut [Complex64]>) -> Complex64 {
        let i = Complex64::i();
        let mut e = Complex64::new(p[3 * self.n], 0.0);
        for k in 0..self.n {
            let (om, f, g) = (p[3 * k].exp(), p[3 * k + 1].exp(), p[3 * k + 2].exp());
            let d = om * om - w * w - i * g * w;
            let term = f * om * om / d;
            e += term;
            if let Some(gr) = grad.as_deref_mut() {
                let d2 = d * d;
                gr[3 * k] = 2.0 * f * om * om * (-w * w - i * g * w) / d2;
                gr[3 * k + 1] = term;
                gr[3 * k + 2] = g * f * om * om * i * w / d2;
            }
        }
        if let Some(gr) = grad {
            gr[3 * self.n] = Complex64::new(1.0, 0.0);
        }
        e
    }

    fn project(&self, p: &mut [f64]) {
        let last = 3 * self.n;
        p[last] = p[last].max(1.0);
    }

    fn is_log(&self, i: usize) -> bool {
        i < 3 * self.n
    }
}

impl OscModel {
    fn pack(set: &OscillatorSet) -> Vec<f64> {
        let mut p: Vec<f64> = set.oscillators.iter().flat_map(|o| [o.omega.ln(), o.f.ln(), o.gamma.ln()]).collect();
        p.push(set.eps_inf.max(1.0));
        p
    }

    fn unpack(&self, p: &[f64]) -> OscillatorSet {
        let mut osc: Vec<Oscillator> =
            (0..self.n).map(|k| Oscillator::new(p[3 * k].exp(), p[3 * k + 1].exp(), p[3 * k + 2].exp())).collect();
        osc.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        OscillatorSet { eps_inf: p[3 * self.n], oscillators: osc }
    }
}

/// (ΩL² − ω² − iγLω)/(ΩT² − ω² − iγTω); p = ln[ΩL, ΩT, γL, γT].
struct SemiQuantumModel;

impl Model for SemiQuantumModel {
    fn n_params(&self) -> usize {
        4
    }

    fn eval(&self, p: &[f64], w: f64, grad: Option<&mut [Complex64]>) -> Complex64 {
        let i = Complex64::i();
        let (l, t, gl, gt) = (p[0].exp(), p[1].exp(), p[2].exp(), p[3].exp());
        let num = l * l - w * w - i * gl * w;
        let den = t * t - w * w - i * gt * w;
        let e = num / den;
        if let Some(g) = grad {
            let d2 = den * den;
            g[0] = 2.0 * l * l / den;
            g[1] = -num * 2.0 * t * t / d2;
            g[2] = -i * w * gl / den;
            g[3] = num * i * w * gt / d2;
        }
        e
    }

    fn is_log(&self, _i: usize) -> bool {
        true
    }
}

fn moving_average(y: &[f64], half: usize) -> Vec<f64> {
    (0..y.len())
        .map(|i| {
            let a = i.saturating_sub(half);
            let b = (i + half + 1).min(y.len());
            y[a..b].iter().sum::<f64>() / (b - a) as f64
        })
        .collect()
}

/// Local maxima of `y` whose prominence is at least `rel` times their height.
fn prominent_maxima(y: &[f64], rel: f64) -> Vec<usize> {
    let n = y.len();
    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let h = y[i];
        if !(h > y[i - 1] && h >= y[i + 1] && h > 0.0) {
            continue;
        }
        let mut j = i;
        let mut left = h;
        while j > 0 && y[j - 1] <= h {
            j -= 1;
            left = left.min(y[j]);
        }
        let mut k = i;
        let mut right = h;
        while k + 1 < n && y[k + 1] <= h {
            k += 1;
            right = right.min(y[k]);
        }
        if h - left.max(right) >= rel * h {
            out.push(i);
        }
    }
    out
}

/// Single-Lorentzian inversion of a peak: (Ω, f, γ) from height and width.
fn invert_peak(w: &[f64], y: &[f64], i: usize) -> Oscillator {
    let h = y[i];
    let half = 0.5 * h;
    let mut widths = Vec::new();
    let mut j = i;
    while j > 0 && y[j] > half {
        j -= 1;
    }
    if y[j] <= half {
        widths.push(w[i] - w[j]);
    }
    let mut k = i;
    while k + 1 < w.len() && y[k] > half {
        k += 1;
    }
    if y[k] <= half {
        widths.push(w[k] - w[i]);
    }
    let mut fwhm = match widths.iter().copied().reduce(f64::min) {
        Some(hw) => 2.0 * hw,
        None => w[k] - w[j],
    };
    if i > 0 && i + 1 < w.len() {
        let (x0, x1, x2) = (w[i - 1], w[i], w[i + 1]);
        let d2 = 2.0 * ((y[i + 1] - y[i]) / (x2 - x1) - (y[i] - y[i - 1]) / (x1 - x0)) / (x2 - x0);
        if d2 < 0.0 {
            fwhm = fwhm.min((-8.0 * h / d2).sqrt());
        }
    }
    if !(fwhm > 0.0) {
        fwhm = 0.1 * w[i];
    }
    Oscillator::new(w[i], h * fwhm / w[i], fwhm)
}

fn rms(cost: f64, n: usize) -> f64 {
    (cost / n as f64).sqrt()
}

fn auto_oscillators(d: &Data, n: usize, max_iterations: usize) -> Vec<f64> {
    let smooth = moving_average(&d.im, 2);
    let mut peaks = prominent_maxima(&smooth, 0.05);
    if peaks.is_empty() {
        let top = (0..smooth.len()).max_by(|&a, &b| smooth[a].total_cmp(&smooth[b])).unwrap_or(0);
        peaks.push(top);
    }
    peaks.sort_by(|&a, &b| smooth[b].total_cmp(&smooth[a]).then(a.cmp(&b)));
    peaks.truncate(n);
    peaks.sort_unstable();
    let eps_inf = d.re.last().copied().unwrap_or(1.0).max(1.0);
    let mut set =
        OscillatorSet { eps_inf, oscillators: peaks.iter().map(|&i| invert_peak(&d.omega, &smooth, i)).collect() };
    let mut k = set.oscillators.len();
    let model = OscModel { n: k };
    let out = levenberg_marquardt(&model, OscModel::pack(&set), d, INIT_ITERATIONS.min(max_iterations));
    let mut p = out.params;
    set = model.unpack(&p);
    while k < n {
        // Add the line that best explains what is still missing.
        let current = OscModel { n: k };
        let missing: Vec<f64> = (0..d.len()).map(|i| d.im[i] - current.eval(&p, d.omega[i], None).im).collect();
        let smooth = moving_average(&missing, 2);
        let mut cands = prominent_maxima(&smooth, 0.0);
        if cands.is_empty() {
            let top = (0..smooth.len()).max_by(|&a, &b| smooth[a].abs().total_cmp(&smooth[b].abs())).unwrap_or(0);
            cands.push(top);
        }
        cands.sort_by(|&a, &b| smooth[b].total_cmp(&smooth[a]).then(a.cmp(&b)));
        cands.truncate(CANDIDATES_PER_ADDITION);
        let trial = OscModel { n: k + 1 };
        let mut best: Option<(f64, Vec<f64>)> = None;
        for &i in &cands {
            let mut s = set.clone();
            let mut added = invert_peak(&d.omega, &smooth.iter().map(|v| v.abs()).collect::<Vec<_>>(), i);
            if !(added.f > 0.0) {
                added.f = 1e-3;
            }
            s.oscillators.push(added);
            s.oscillators.sort_by(|a, b| a.omega.total_cmp(&b.omega));
            let out = levenberg_marquardt(&trial, OscModel::pack(&s), d, INIT_ITERATIONS.min(max_iterations));
            if best.as_ref().is_none_or(|(c, _)| out.cost < *c) {
                best = Some((out.cost, out.params));
            }
        }
        p = best.expect("at least one candidate").1;
        k += 1;
        set = trial.unpack(&p);
    }
    OscModel::pack(&set)
}

/// Fits `n` Lorentz oscillators plus ε_∞ to Re and Im ε.
pub fn fit_oscillators(
    data: &SpectrumTable,
    n: usize,
    init: Init<OscillatorSet>,
    opts: &FitOptions,
) -> Result<FitReport> {
    if n == 0 {
        return Err(CpError::InvalidParameters("at least one oscillator is required".into()));
    }
    if data.len() < 3 * n + 1 {
        return Err(CpError::InsufficientData(format!(
            "{} rows cannot determine {} parameters",
            data.len(),
            3 * n + 1
        )));
    }
    let d = Data::new(data, opts.weighting)?;
    let p0 = match init {
        Init::Given(set) => {
            set.validate()?;
            if set.oscillators.len() != n {
                return Err(CpError::InvalidParameters(format!(
                    "initial guess has {} oscillators, expected {n}",
                    set.oscillators.len()
                )));
            }
            OscModel::pack(&set)
        }
        Init::Auto => auto_oscillators(&d, n, opts.max_iterations),
    };
    let model = OscModel { n };
    let out = levenberg_marquardt(&model, p0, &d, opts.max_iterations);
    Ok(FitReport {
        model: PermittivityModel::Oscillators(model.unpack(&out.params)),
        residual_rms: rms(out.cost, 2 * d.len()),
        iterations: out.iterations,
        converged: out.converged,
    })
}

/// Fits the four-parameter single-resonance model.
pub fn fit_semi_quantum(data: &SpectrumTable, init: Init<SemiQuantum4>, opts: &FitOptions) -> Result<FitReport> {
    if data.len() < 5 {
        return Err(CpError::InsufficientData("at least 5 rows are required".into()));
    }
    let d = Data::new(data, opts.weighting)?;
    let start = match init {
        Init::Given(m) => {
            m.validate()?;
            m
        }
        Init::Auto => {
            let smooth = moving_average(&d.im, 2);
            let top = prominent_maxima(&smooth, 0.05)
                .into_iter()
                .max_by(|&a, &b| smooth[a].total_cmp(&smooth[b]))
                .unwrap_or_else(|| (0..smooth.len()).max_by(|&a, &b| smooth[a].total_cmp(&smooth[b])).unwrap_or(0));
            let peak = invert_peak(&d.omega, &smooth, top);
            let eps0 = d.re[0].max(1.01);
            let omega_l = peak.omega * eps0.sqrt();
            SemiQuantum4 {
                omega_l,
                omega_t: peak.omega,
                gamma_l: peak.gamma * omega_l / peak.omega,
                gamma_t: peak.gamma,
            }
        }
    };
    let p0 = vec![start.omega_l.ln(), start.omega_t.ln(), start.gamma_l.ln(), start.gamma_t.ln()];
    let out = levenberg_marquardt(&SemiQuantumModel, p0, &d, opts.max_iterations);
    let p = &out.params;
    Ok(FitReport {
        model: PermittivityModel::SemiQuantum(SemiQuantum4 {
            omega_l: p[0].exp(),
            omega_t: p[1].exp(),
            gamma_l: p[2].exp(),
            gamma_t: p[3].exp(),
        }),
        residual_rms: rms(out.cost, 2 * d.len()),
        iterations: out.iterations,
        converged: out.converged,
    })
}
