//! Dense real polynomials in ascending-degree order, and their complex roots.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{CpError, Result};

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n).map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0)).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Drops trailing coefficients that are zero relative to the largest one.
pub fn trim(mut a: Vec<f64>, rel: f64) -> Vec<f64> {
    let big = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    while let Some(&last) = a.last() {
        if last.abs() <= rel * big {
            a.pop();
        } else {
            break;
        }
    }
    a
}

pub fn derivative(a: &[f64]) -> Vec<f64> {
    a.iter().enumerate().skip(1).map(|(i, &x)| x * i as f64).collect()
}

pub fn eval(a: &[f64], x: Complex64) -> Complex64 {
    a.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

pub fn eval_real(a: &[f64], x: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// All complex roots, from companion-matrix eigenvalues followed by a few
/// Newton steps on the original polynomial.
pub fn roots(a: &[f64]) -> Result<Vec<Complex64>> {
    let a = trim(a.to_vec(), 0.0);
    let n = a.len().saturating_sub(1);
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = a[n];
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -a[i] / lead;
    }
    let eig = m.complex_eigenvalues();
    let d = derivative(&a);
    let mut out = Vec::with_capacity(n);
    for &z0 in eig.iter() {
        let mut z = z0;
        for _ in 0..8 {
            let f = eval(&a, z);
            let fp = eval(&d, z);
            if fp.norm() == 0.0 {
                break;
            }
            let step = f / fp;
            let next = z - step;
            if !(next.re.is_finite() && next.im.is_finite()) {
                break;
            }
            z = next;
            if step.norm() <= 1e-15 * z.norm() {
                break;
            }
        }
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(CpError::DecompositionFailure("non-finite polynomial root".into()));
        }
        out.push(z);
    }
    Ok(out)
}
