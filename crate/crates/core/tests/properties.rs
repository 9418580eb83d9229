mod common;

use common::{db, log_grid, material, molecule, SURFACES};
use cpforce::dielectric::fresnel_imag;
use cpforce::{
    alpha_sym, eval_eps_imag, eval_eps_real, populations, potential_curve, LevelScheme, Molecule, Oscillator,
    OscillatorSet, PermittivityModel, QuadratureSettings, SinxDenominator, TabulatedImEps, Transition,
};
use num_complex::Complex64;
use proptest::prelude::*;

const C: f64 = 299_792_458.0;

fn oscillator() -> impl Strategy<Value = Oscillator> {
    (12.0f64..17.5, -3.0f64..1.0, -2.0f64..0.0).prop_map(|(lw, lf, lg)| {
        let omega = 10f64.powf(lw);
        Oscillator::new(omega, 10f64.powf(lf), omega * 10f64.powf(lg))
    })
}

fn oscillator_set() -> impl Strategy<Value = OscillatorSet> {
    (1.0f64..3.0, prop::collection::vec(oscillator(), 0..6)).prop_map(|(e, osc)| OscillatorSet::new(e, osc).unwrap())
}

fn transition() -> impl Strategy<Value = Transition> {
    (13.0f64..17.0, -31.0f64..-28.0, 0.0f64..2.0).prop_map(|(lw, ld, g)| {
        let omega = 10f64.powf(lw);
        Transition::electronic(omega, 10f64.powf(ld), g * omega)
    })
}

proptest! {
    #[test]
    fn oscillator_models_are_passive(set in oscillator_set(), lw in 11.0f64..18.0) {
        let e = set.eps(Complex64::new(10f64.powf(lw), 0.0));
        prop_assert!(e.im >= 0.0);
    }

    #[test]
    fn imaginary_axis_is_real_bounded_and_decreasing(set in oscillator_set(), a in 10.0f64..18.0, b in 10.0f64..18.0) {
        let m = PermittivityModel::Oscillators(set.clone());
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let e_lo = eval_eps_imag(&m, 10f64.powf(lo)).unwrap();
        let e_hi = eval_eps_imag(&m, 10f64.powf(hi)).unwrap();
        prop_assert!(e_lo.is_finite() && e_hi >= set.eps_inf.min(1.0));
        prop_assert!(e_hi <= e_lo);
    }

    #[test]
    fn reflection_bounds(le in 0.0f64..8.0, lx in 8.0f64..18.0, extra in 0.0f64..10.0) {
        let xi = 10f64.powf(lx);
        let kappa = xi / C * (1.0 + extra);
        let r = fresnel_imag(10f64.powf(le), xi, kappa);
        prop_assert!((-1.0..=0.0).contains(&r.r_s), "{:?}", r);
        prop_assert!((0.0..=1.0).contains(&r.r_p), "{:?}", r);
    }

    #[test]
    fn populations_normalised_and_ordered(mut es in prop::collection::vec(0.0f64..1e-19, 1..8), t in 0.0f64..3000.0) {
        es[0] = 0.0;
        es.sort_by(f64::total_cmp);
        let p = populations(&LevelScheme { widths: vec![0.0; es.len()], energies: es }, t);
        let s: f64 = p.iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        prop_assert!(p.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn populations_depend_on_energy_over_temperature(es in prop::collection::vec(0.0f64..1e-19, 2..6), t in 1.0f64..3000.0, k in 0.01f64..100.0) {
        let a = populations(&LevelScheme { widths: vec![0.0; es.len()], energies: es.clone() }, t);
        let scaled: Vec<f64> = es.iter().map(|e| e * k).collect();
        let b = populations(&LevelScheme { widths: vec![0.0; es.len()], energies: scaled }, t * k);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * x.max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn symmetrised_alpha_positive_and_decreasing(lines in prop::collection::vec(transition(), 1..6), a in 10.0f64..18.0, b in 10.0f64..18.0) {
        let m = Molecule::new("p", lines, vec![]).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let x = alpha_sym(&m, 0.0, 10f64.powf(lo));
        let y = alpha_sym(&m, 0.0, 10f64.powf(hi));
        prop_assert!(y > 0.0 && y <= x);
    }

    #[test]
    fn static_sum_rule(lines in prop::collection::vec(transition(), 0..6), rest in 0.0f64..1e-39) {
        let m = Molecule { residual_alpha_inf: rest, ..Molecule::new("p", lines, vec![]).unwrap() };
        let want: f64 = m.transitions().map(|t| 2.0 / (3.0 * 1.054571817e-34) * t.dipole * t.dipole / t.omega_k0).sum::<f64>() + rest;
        let got = alpha_sym(&m, 0.0, 0.0);
        prop_assert!((got - want).abs() <= 1e-12 * want.max(1e-300));
    }
}

fn passivity_grid() -> Vec<f64> {
    log_grid(1e11, 1e18, 1000)
}

#[test]
fn bundled_models_are_passive() {
    for id in ["Au", "C60-film-optical", "C70-film-optical", "C60-film-infrared", "vacuum"] {
        let m = material(id);
        for &w in &passivity_grid() {
            assert!(eval_eps_real(&m, w).unwrap().im >= 0.0, "{id} at {w}");
        }
    }
    let PermittivityModel::TabulatedIm(sinx) = material("SiNx") else { panic!() };
    assert_eq!(sinx.denominator, SinxDenominator::Lorentzian);
    assert!(passivity_grid().iter().all(|&w| sinx.im_eps(w) >= 0.0));

    // printed denominator: absorptive only below its first zero
    let printed = TabulatedImEps { denominator: SinxDenominator::Printed, ..sinx };
    let edge = printed.poles()[0];
    assert!(passivity_grid().iter().filter(|&&w| w < edge).all(|&w| printed.im_eps(w) >= 0.0));
    assert!(passivity_grid().iter().any(|&w| printed.im_eps(w) < 0.0));
}

#[test]
fn bundled_si3n4_parameters_are_not_passive() {
    // γ_L/γ_T exceeds Ω_L²/Ω_T², so Im ε turns negative at low frequency and
    // ε(iξ) rises above ε(0) before it falls. Recorded, not corrected.
    let PermittivityModel::SemiQuantum(m) = material("Si3N4") else { panic!() };
    assert!(!m.is_passive());
    let low = eval_eps_real(&material("Si3N4"), 1e15).unwrap();
    assert!(low.im < 0.0);
    let e0 = eval_eps_imag(&material("Si3N4"), 0.0).unwrap();
    let e_mid = eval_eps_imag(&material("Si3N4"), 6.3e14).unwrap();
    assert!(e_mid > e0);
}

#[test]
fn bundled_imaginary_axis_monotone() {
    for id in ["Au", "C60-film-optical", "C70-film-optical", "C60-film-infrared", "SiNx", "vacuum"] {
        let m = material(id);
        let mut prev = f64::INFINITY;
        for xi in log_grid(1e9, 1e19, 300) {
            let e = eval_eps_imag(&m, xi).unwrap();
            assert!(e >= 1.0 && e <= prev, "{id} at {xi}");
            prev = e;
        }
    }
}

#[test]
fn bundled_reflection_bounds() {
    for id in SURFACES.iter().chain(&["vacuum", "C60-film-optical"]) {
        let m = material(id);
        for xi in log_grid(1e11, 1e18, 40) {
            for f in [1.0, 1.5, 10.0, 1e3] {
                let r = cpforce::refl_imag(&m, xi, f * xi / C).unwrap();
                let eps_ok = id == &"perfect-conductor" || eval_eps_imag(&m, xi).unwrap() >= 1.0;
                if eps_ok {
                    assert!((-1.0..=0.0).contains(&r.r_s) && (0.0..=1.0).contains(&r.r_p), "{id} {xi} {f}");
                }
            }
        }
    }
}

#[test]
fn bundled_attraction_and_monotone_decay() {
    let zs = log_grid(1e-10, 1e-3, 36);
    let q = QuadratureSettings::default();
    for mol in ["C60", "C70"] {
        let m = molecule(mol);
        for surf in SURFACES {
            let s = material(surf);
            for t in [0.001, 300.0, 600.0] {
                let u = potential_curve(&m, &s, t, t, &zs, &q).unwrap();
                for (k, r) in u.iter().enumerate() {
                    assert!(r.total < 0.0, "{mol}/{surf} T={t} z={}", zs[k]);
                    if k > 0 {
                        assert!(r.total.abs() < u[k - 1].total.abs(), "{mol}/{surf} T={t} z={}", zs[k]);
                    }
                }
            }
        }
    }
}

#[test]
fn bundled_populations_normalised() {
    for id in db().molecule_ids().unwrap() {
        let m = molecule(&id);
        for t in [0.0, 1.0, 300.0, 6000.0] {
            let (p0, pk) = m.phonon_populations(t);
            let s = p0 + pk.iter().sum::<f64>();
            assert!((s - 1.0).abs() < 1e-12, "{id} {t}");
        }
    }
}
