//! Thermal Casimir–Polder potential of fullerene-like molecules near planar
//! surfaces: permittivity models, molecular polarisabilities, spectral
//! fitting, the Lifshitz/Matsubara potential and its asymptotic coefficients.
// Quadrature nodes and series coefficients are kept at their published
// precision; `!(x > 0.0)` is how NaN gets rejected.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptote;
pub mod constants;
pub mod database;
pub mod dielectric;
pub mod error;
pub mod fit;
pub mod molecule;
pub mod potential;
pub mod quad;

pub use asymptote::{
    c3_nonret, c3_phonon, c3t, c4_closed, c4_integral, c4_series, coeff_set, C3Mode, CoeffRow, CoeffSet, SeriesRegime,
};
pub use database::Database;
pub use dielectric::{
    eval_eps_imag, eval_eps_real, refl_imag, refl_real, static_eps, DrudeLorentz, Oscillator, OscillatorSet,
    PermittivityModel, ReflectionPair, SemiQuantum4, SinxDenominator, StaticEps, TabulatedImEps,
};
pub use error::{CpError, Result};
pub use fit::{
    fit_oscillators, fit_semi_quantum, resonance_grid, FitOptions, FitReport, Init, SpectrumRow, SpectrumTable,
    Weighting,
};
pub use molecule::{
    alpha_ground, alpha_sym, alpha_thermal, clausius_mosotti, decompose, populations, Decomposition, LevelScheme,
    Molecule, Polarisability, RationalAlpha, Transition, TransitionKind,
};
pub use potential::{
    n_thermal, potential_curve, u_nonresonant, u_resonant, u_total, u_zero_temperature, EnvConfig, PotentialResult,
    QuadratureSettings,
};
