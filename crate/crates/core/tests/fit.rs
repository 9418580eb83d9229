mod common;

use common::{material, rel, semi_quantum_grid, with_noise, worst_oscillator_error, worst_semi_quantum_error};
use cpforce::{
    fit_oscillators, fit_semi_quantum, resonance_grid, static_eps, CpError, FitOptions, FitReport, Init, Oscillator,
    OscillatorSet, PermittivityModel, SemiQuantum4, SpectrumRow, SpectrumTable, Weighting,
};

fn set(id: &str) -> OscillatorSet {
    match material(id) {
        PermittivityModel::Oscillators(s) => s,
        _ => panic!(),
    }
}

fn si3n4() -> SemiQuantum4 {
    match material("Si3N4") {
        PermittivityModel::SemiQuantum(m) => m,
        _ => panic!(),
    }
}

fn fitted_set(r: &FitReport) -> &OscillatorSet {
    match &r.model {
        PermittivityModel::Oscillators(s) => s,
        _ => panic!(),
    }
}

fn fitted_sq(r: &FitReport) -> &SemiQuantum4 {
    match &r.model {
        PermittivityModel::SemiQuantum(s) => s,
        _ => panic!(),
    }
}

fn synth(s: &OscillatorSet, points: usize) -> SpectrumTable {
    SpectrumTable::synthesize(&PermittivityModel::Oscillators(s.clone()), &resonance_grid(s, points)).unwrap()
}

#[test]
fn exact_spectra_recovered_from_automatic_start() {
    for id in ["C60-film-optical", "C70-film-optical", "C60-film-infrared"] {
        let truth = set(id);
        let data = synth(&truth, 200);
        let r = fit_oscillators(&data, truth.oscillators.len(), Init::Auto, &FitOptions::default()).unwrap();
        assert!(r.converged, "{id}");
        let worst = worst_oscillator_error(fitted_set(&r), &truth);
        assert!(worst < 1e-4, "{id}: {worst}");
        assert!(r.residual_rms < 1e-8, "{id}: {}", r.residual_rms);
    }
}

#[test]
fn exact_start_is_a_fixed_point() {
    let truth = OscillatorSet::new(1.3, vec![Oscillator::new(5e15, 0.7, 9e14)]).unwrap();
    let data = synth(&truth, 40);
    let r = fit_oscillators(&data, 1, Init::Given(truth.clone()), &FitOptions::default()).unwrap();
    assert!(r.converged);
    assert_eq!(r.iterations, 0);
    // zero up to the round-off of exp(ln p)
    assert!(r.residual_rms < 1e-13, "{}", r.residual_rms);
    assert!(worst_oscillator_error(fitted_set(&r), &truth) < 1e-14);
}

#[test]
fn noisy_c70_film() {
    let truth = set("C70-film-optical");
    let (data, floor) = with_noise(&synth(&truth, 1000), 0.01, 70);
    let r = fit_oscillators(&data, truth.oscillators.len(), Init::Auto, &FitOptions::default()).unwrap();
    assert!(r.converged);
    assert!(r.residual_rms <= 2.0 * floor, "{} vs floor {floor}", r.residual_rms);
    let worst = worst_oscillator_error(fitted_set(&r), &truth);
    assert!(worst < 0.10, "{worst}");
}

#[test]
fn accepted_steps_never_raise_the_residual() {
    let truth = set("C60-film-infrared");
    let data = synth(&truth, 200);
    let mut start = truth.clone();
    for (k, o) in start.oscillators.iter_mut().enumerate() {
        o.omega *= 1.0 + 0.004 * (k as f64 + 1.0);
        o.f *= 1.3;
        o.gamma *= 0.6;
    }
    let mut prev = f64::INFINITY;
    for max_iterations in 0..40 {
        let opts = FitOptions { max_iterations, ..FitOptions::default() };
        let r = fit_oscillators(&data, 4, Init::Given(start.clone()), &opts).unwrap();
        assert!(r.residual_rms <= prev, "after {max_iterations}: {} > {prev}", r.residual_rms);
        prev = r.residual_rms;
        for o in &fitted_set(&r).oscillators {
            assert!(o.omega > 0.0 && o.f > 0.0 && o.gamma > 0.0);
        }
    }
}

#[test]
fn iteration_budget_reports_non_convergence() {
    let truth = set("C60-film-optical");
    let data = synth(&truth, 200);
    let opts = FitOptions { max_iterations: 2, ..FitOptions::default() };
    let r = fit_oscillators(&data, 9, Init::Auto, &opts).unwrap();
    assert!(!r.converged);
    assert!(matches!(r.require_converged(), Err(CpError::NonConvergence(2))));
}

#[test]
fn relative_weighting_recovers_exact_data() {
    let truth = set("C60-film-infrared");
    let data = synth(&truth, 200);
    let opts = FitOptions { weighting: Weighting::Relative, ..FitOptions::default() };
    let r = fit_oscillators(&data, 4, Init::Auto, &opts).unwrap();
    assert!(worst_oscillator_error(fitted_set(&r), &truth) < 1e-4);
    assert_eq!("none".parse::<Weighting>().unwrap(), Weighting::Unweighted);
    assert!("squared".parse::<Weighting>().is_err());
}

#[test]
fn insufficient_data() {
    let truth = set("C60-film-optical");
    let few = SpectrumTable::synthesize(&material("C60-film-optical"), &[1e15, 2e15, 3e15, 4e15, 5e15]).unwrap();
    assert!(matches!(fit_oscillators(&few, 2, Init::Auto, &FitOptions::default()), Err(CpError::InsufficientData(_))));
    assert!(fit_oscillators(&few, 0, Init::Auto, &FitOptions::default()).is_err());
    let im_only =
        SpectrumTable::new(synth(&truth, 50).rows().iter().map(|r| SpectrumRow { re_eps: None, ..*r }).collect())
            .unwrap();
    assert!(matches!(
        fit_oscillators(&im_only, 1, Init::Auto, &FitOptions::default()),
        Err(CpError::InsufficientData(_))
    ));
    let four = SpectrumTable::synthesize(&material("Si3N4"), &[1e16, 2e16, 3e16, 4e16]).unwrap();
    assert!(matches!(fit_semi_quantum(&four, Init::Auto, &FitOptions::default()), Err(CpError::InsufficientData(_))));
}

#[test]
fn table_validation() {
    let row = |omega: f64, im: f64| SpectrumRow { omega, re_eps: Some(1.0), im_eps: im };
    assert!(SpectrumTable::new(vec![row(2.0, 0.1), row(1.0, 0.1)]).is_err());
    assert!(SpectrumTable::new(vec![row(1.0, 0.1), row(1.0, 0.1)]).is_err());
    assert!(SpectrumTable::new(vec![row(1.0, -0.1)]).is_err());
    assert!(SpectrumTable::new(vec![row(-1.0, 0.1)]).is_err());
    assert!(SpectrumTable::from_reader("omega_rad_s,im_eps\n1e15,abc\n".as_bytes()).is_err());
    assert!(SpectrumTable::from_reader("frequency,im_eps\n1e15,0.1\n".as_bytes()).is_err());
}

#[test]
fn csv_round_trip_is_lossless() {
    let data = synth(&set("C70-film-optical"), 120);
    let mut buf = Vec::new();
    data.write_csv(&mut buf).unwrap();
    assert!(buf.starts_with(b"omega_rad_s,re_eps,im_eps\n"));
    let back = SpectrumTable::from_reader(buf.as_slice()).unwrap();
    assert_eq!(back, data);
}

#[test]
fn report_serialises() {
    let truth = OscillatorSet::new(1.0, vec![Oscillator::new(5e15, 0.7, 9e14)]).unwrap();
    let r = fit_oscillators(&synth(&truth, 30), 1, Init::Given(truth), &FitOptions::default()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(v["model"]["type"], "oscillators");
    assert_eq!(v["iterations"], 0);
    assert_eq!(v["converged"], true);
    assert!(v["residual_rms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn semi_quantum_round_trip() {
    let truth = si3n4();
    let data = SpectrumTable::synthesize(&material("Si3N4"), &semi_quantum_grid(200)).unwrap();
    let r = fit_semi_quantum(&data, Init::Auto, &FitOptions::default()).unwrap();
    assert!(r.converged);
    assert!(worst_semi_quantum_error(fitted_sq(&r), &truth) < 1e-4);
    let e0 = static_eps(&r.model).unwrap().finite().unwrap();
    assert!((e0 - 4.10).abs() < 0.01, "{e0}");

    let exact = fit_semi_quantum(&data, Init::Given(truth.clone()), &FitOptions::default()).unwrap();
    assert!(exact.residual_rms < 1e-13, "{}", exact.residual_rms);
    assert_eq!(exact.iterations, 0);
}

#[test]
fn semi_quantum_with_noise() {
    let truth = si3n4();
    let clean = SpectrumTable::synthesize(&material("Si3N4"), &semi_quantum_grid(200)).unwrap();
    let (data, floor) = with_noise(&clean, 0.01, 4);
    let r = fit_semi_quantum(&data, Init::Auto, &FitOptions::default()).unwrap();
    assert!(r.residual_rms <= 2.0 * floor);
    assert!(worst_semi_quantum_error(fitted_sq(&r), &truth) < 0.10);
    let e0 = static_eps(&r.model).unwrap().finite().unwrap();
    assert!(rel(e0, 4.0907) < 0.01, "{e0}");
}
