#![allow(dead_code)]

use cpforce::{Database, Molecule, PermittivityModel};

pub fn db() -> Database {
    Database::open_default().expect("bundled database")
}

pub fn material(id: &str) -> PermittivityModel {
    db().material(id).unwrap()
}

pub fn molecule(id: &str) -> Molecule {
    db().molecule(id).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

pub const SURFACES: [&str; 4] = ["perfect-conductor", "Au", "Si3N4", "SiNx"];

/// Printed asymptotic coefficients: (surface, molecule, C3, C4, C3T).
pub const POWER_LAWS: [(&str, &str, f64, f64, f64); 8] = [
    ("perfect-conductor", "C60", 2.4e-47, 3.3e-55, 9.0e-50),
    ("perfect-conductor", "C70", 3.0e-47, 4.0e-55, 1.1e-49),
    ("Au", "C60", 1.0e-47, 3.3e-55, 9.0e-50),
    ("Au", "C70", 1.3e-47, 4.0e-55, 1.1e-49),
    ("Si3N4", "C60", 8.4e-48, 1.5e-55, 5.5e-50),
    ("Si3N4", "C70", 1.1e-47, 1.9e-55, 6.7e-50),
    ("SiNx", "C60", 6.3e-48, 1.4e-55, 5.3e-50),
    ("SiNx", "C70", 7.9e-48, 1.8e-55, 6.5e-50),
];

/// Printed nonretarded coefficients: (surface, molecule, C3, C3 zero width, C3 LRT).
pub const WIDTH_IMPACT: [(&str, &str, f64, f64, f64); 8] = [
    ("perfect-conductor", "C60", 2.36e-47, 2.34e-47, 2.15e-47),
    ("perfect-conductor", "C70", 2.96e-47, 2.93e-47, 2.68e-47),
    ("Au", "C60", 1.01e-47, 1.00e-47, 9.28e-48),
    ("Au", "C70", 1.27e-47, 1.25e-47, 1.15e-47),
    ("Si3N4", "C60", 8.45e-48, 8.36e-48, 7.69e-48),
    ("Si3N4", "C70", 1.06e-47, 1.05e-47, 9.55e-48),
    ("SiNx", "C60", 6.26e-48, 6.21e-48, 5.75e-48),
    ("SiNx", "C70", 7.86e-48, 7.76e-48, 7.11e-48),
];

/// Multiplies Re and Im of every row by `1 + σ·N(0,1)`; returns the table and
/// the rms of the perturbation actually applied.
pub fn with_noise(table: &cpforce::SpectrumTable, sigma: f64, seed: u64) -> (cpforce::SpectrumTable, f64) {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut sq = 0.0;
    let rows: Vec<cpforce::SpectrumRow> = table
        .rows()
        .iter()
        .map(|r| {
            let re = r.re_eps.unwrap();
            let (a, b) = (normal.sample(&mut rng), normal.sample(&mut rng));
            sq += (re * a).powi(2) + (r.im_eps * b).powi(2);
            cpforce::SpectrumRow { omega: r.omega, re_eps: Some(re * (1.0 + a)), im_eps: r.im_eps * (1.0 + b) }
        })
        .collect();
    let floor = (sq / (2 * rows.len()) as f64).sqrt();
    (cpforce::SpectrumTable::new(rows).unwrap(), floor)
}

/// Largest relative parameter difference between two oscillator sets, compared
/// after sorting by resonance frequency.
pub fn worst_oscillator_error(a: &cpforce::OscillatorSet, b: &cpforce::OscillatorSet) -> f64 {
    assert_eq!(a.oscillators.len(), b.oscillators.len());
    let mut worst = rel(a.eps_inf, b.eps_inf);
    for (x, y) in a.oscillators.iter().zip(&b.oscillators) {
        worst = worst.max(rel(x.omega, y.omega)).max(rel(x.f, y.f)).max(rel(x.gamma, y.gamma));
    }
    worst
}

pub fn worst_semi_quantum_error(a: &cpforce::SemiQuantum4, b: &cpforce::SemiQuantum4) -> f64 {
    [rel(a.omega_l, b.omega_l), rel(a.omega_t, b.omega_t), rel(a.gamma_l, b.gamma_l), rel(a.gamma_t, b.gamma_t)]
        .into_iter()
        .fold(0.0, f64::max)
}

/// Frequencies where the bundled Si3N4 model is absorptive.
pub fn semi_quantum_grid(points: usize) -> Vec<f64> {
    log_grid(6e15, 2e17, points)
}
