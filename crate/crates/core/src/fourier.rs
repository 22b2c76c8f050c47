//! Frequency spectrum of the single-feature model in its encoding angle.
//!
//! With `n` RY encodings per layer and `L` layers, `u -> f(u)` is a
//! trigonometric polynomial of degree at most `n * L`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::ansatz::{AnsatzSpec, ParamVector};
use crate::error::{Error, Result};
use crate::model::Program;

#[derive(Clone, Debug)]
pub struct FourierSpectrum {
    /// Coefficients in FFT order: index `k` holds frequency `k` for
    /// `k < N/2` and `k - N` above.
    coeffs: Vec<Complex64>,
}

impl FourierSpectrum {
    pub fn n_samples(&self) -> usize {
        self.coeffs.len()
    }

    /// Largest `|omega|` the sampling resolves unambiguously.
    pub fn max_frequency(&self) -> i64 {
        (self.coeffs.len() as i64 - 1) / 2
    }

    /// `c_omega` with `f(u) = sum_omega c_omega e^{i omega u}`.
    pub fn coefficient(&self, omega: i64) -> Complex64 {
        let n = self.coeffs.len() as i64;
        self.coeffs[omega.rem_euclid(n) as usize]
    }

    pub fn total_energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Energy carried by frequencies with `|omega| > bound`.
    pub fn energy_beyond(&self, bound: i64) -> f64 {
        let n = self.coeffs.len() as i64;
        (0..n)
            .map(|k| if k <= n / 2 { k } else { k - n })
            .filter(|w| w.abs() > bound)
            .map(|w| self.coefficient(w).norm_sqr())
            .sum()
    }

    /// Frequencies with `|c_omega| > tol`, ascending.
    pub fn support(&self, tol: f64) -> Vec<i64> {
        let m = self.max_frequency();
        (-m..=m).filter(|&w| self.coefficient(w).norm() > tol).collect()
    }
}

/// Samples `u -> f(u)` at `n_samples` points on `[-pi, pi)`, feeding `u`
/// straight into every encoding rotation, and returns its discrete Fourier
/// coefficients.
pub fn fourier_coefficients(
    spec: &AnsatzSpec,
    params: &ParamVector,
    n_samples: usize,
) -> Result<FourierSpectrum> {
    if spec.n_features() != 1 {
        return Err(Error::UnsupportedAnalysis(format!(
            "Fourier analysis needs a single input feature, ansatz reads {}",
            spec.n_features()
        )));
    }
    let degree = spec.n_qubits * spec.n_layers;
    if n_samples < 2 * degree + 2 {
        return Err(Error::Config(format!(
            "{n_samples} samples cannot resolve frequencies up to {degree}; need at least {}",
            2 * degree + 2
        )));
    }
    params.check_len(spec)?;
    let program = Program::new(spec, None)?;
    let mut buf: Vec<Complex64> = (0..n_samples)
        .map(|k| {
            let u = -PI + TAU * k as f64 / n_samples as f64;
            Complex64::new(program.evaluate(&params.values, &[u]), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n_samples).process(&mut buf);
    // sample grid starts at -pi: c_w = (-1)^w X_w / N
    let n = n_samples as f64;
    let coeffs = buf
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let w = if k <= n_samples / 2 { k as i64 } else { k as i64 - n_samples as i64 };
            let sign = if w.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            x * (sign / n)
        })
        .collect();
    Ok(FourierSpectrum { coeffs })
}
