//! Type-I discrete sine transform through an odd-extended FFT.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{GeckoError, Result};

/// `φ̂_n = 2/(L+1) Σ_l φ_l sin(π n l / (L+1))`, `n = 1..=L`.
pub fn dst1_forward(signal: &[f64]) -> Result<Vec<f64>> {
    let l = signal.len();
    let raw = odd_extension_sine_sums(signal)?;
    Ok(raw.into_iter().map(|x| x * 2.0 / (l as f64 + 1.0)).collect())
}

/// `φ_l = Σ_n φ̂_n sin(π n l / (L+1))`.
pub fn dst1_inverse(coeffs: &[f64]) -> Result<Vec<f64>> {
    odd_extension_sine_sums(coeffs)
}

/// `Σ_j x_j sin(π n j / (L+1))` for `n = 1..=L`.
fn odd_extension_sine_sums(x: &[f64]) -> Result<Vec<f64>> {
    let l = x.len();
    if l == 0 {
        return Err(GeckoError::input("sine transform of an empty signal"));
    }
    let m = 2 * (l + 1);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (j, &v) in x.iter().enumerate() {
        buf[j + 1] = Complex64::new(v, 0.0);
        buf[m - j - 1] = Complex64::new(-v, 0.0);
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    Ok((1..=l).map(|n| -0.5 * buf[n].im).collect())
}

/// Row `n-1`, column `l-1` holds `sin(π n l/(L+1))`; the forward transform is
/// `2/(L+1)` times this matrix and the inverse is the matrix itself.
pub fn sine_matrix(l: usize) -> nalgebra::DMatrix<f64> {
    let denom = l as f64 + 1.0;
    nalgebra::DMatrix::from_fn(l, l, |i, j| (PI * (i + 1) as f64 * (j + 1) as f64 / denom).sin())
}

/// Frequencies per unit time of modes `1..=L`: `n / (2(L+1)Δt)`.
pub fn mode_frequencies(l: usize, dt: f64) -> Vec<f64> {
    (1..=l).map(|n| n as f64 / (2.0 * (l as f64 + 1.0) * dt)).collect()
}
