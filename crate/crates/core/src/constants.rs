//! Physical constants in SI units (CODATA 2018 exact and recommended values).

pub const HBAR: f64 = 1.054_571_817e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
pub const VACUUM_PERMEABILITY: f64 = 1.256_637_062_12e-6;

use std::f64::consts::PI;

/// Spacing of the Matsubara frequencies, 2π k_B T / ħ.
pub fn matsubara_spacing(temperature: f64) -> f64 {
    2.0 * PI * BOLTZMANN * temperature / HBAR
}
