use crate::error::{GeckoError, Result};
use crate::pulse::PulseParams;

/// Smooths each channel with a normalized Gaussian (truncated at 4σ) after
/// padding `pad` zeros on both ends. Reflective boundaries, then cropped back
/// to `L` samples. Fidelity is not preserved.
pub fn gaussian_baseline(pulse: &PulseParams, sigma: f64, pad: usize) -> Result<PulseParams> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(GeckoError::input(format!("sigma must be positive, got {sigma}")));
    }
    let radius = (4.0 * sigma + 0.5) as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= total);

    let (l, kc) = (pulse.n_segments(), pulse.n_controls());
    let mut amps = vec![0.0; l * kc];
    for k in 0..kc {
        let mut padded = vec![0.0; pad];
        padded.extend(pulse.channel(k));
        padded.extend(std::iter::repeat_n(0.0, pad));
        let smoothed = convolve_reflect(&padded, &kernel, radius);
        for i in 0..l {
            amps[i * kc + k] = smoothed[i + pad];
        }
    }
    pulse.with_amplitudes(amps)
}

/// Half-sample symmetric reflection: `d c b a | a b c d | d c b a`.
fn reflect(i: isize, n: isize) -> usize {
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

fn convolve_reflect(x: &[f64], kernel: &[f64], radius: isize) -> Vec<f64> {
    let n = x.len() as isize;
    (0..n)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, w)| w * x[reflect(i + j as isize - radius, n)])
                .sum()
        })
        .collect()
}
