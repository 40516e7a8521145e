use std::fmt;
use std::str::FromStr;

use crate::error::{GeckoError, Result};
use crate::pulse::PulseParams;

use super::dst::{dst1_forward, dst1_inverse, mode_frequencies};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterKind {
    Lowpass,
    Highpass,
    Bandstop,
    Custom,
}

impl FilterKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterKind::Lowpass => "lowpass",
            FilterKind::Highpass => "highpass",
            FilterKind::Bandstop => "bandstop",
            FilterKind::Custom => "custom",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterKind {
    type Err = GeckoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lowpass" => Ok(FilterKind::Lowpass),
            "highpass" => Ok(FilterKind::Highpass),
            "bandstop" => Ok(FilterKind::Bandstop),
            "custom" => Ok(FilterKind::Custom),
            other => Err(GeckoError::input(format!("unknown filter kind '{other}'"))),
        }
    }
}

/// Shape parameters, in the same frequency units as `mode_frequencies(L, dt)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterParams {
    pub cutoff: f64,
    pub center: f64,
    pub width: f64,
    pub steepness: u32,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            cutoff: 1.0,
            center: 10.0,
            width: 1.0,
            steepness: 4,
        }
    }
}

/// Per-mode weights `w_n ∈ [0, 1]`; mode `n` keeps the fraction `w_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterSpec {
    kind: FilterKind,
    weights: Vec<f64>,
}

impl FilterSpec {
    pub fn custom(weights: Vec<f64>) -> Result<Self> {
        Self::with_kind(FilterKind::Custom, weights)
    }

    fn with_kind(kind: FilterKind, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(GeckoError::input("filter needs at least one weight"));
        }
        if let Some((n, w)) = weights.iter().enumerate().find(|(_, w)| !(0.0..=1.0).contains(*w)) {
            return Err(GeckoError::input(format!("filter weight {w} at mode {} outside [0, 1]", n + 1)));
        }
        Ok(Self { kind, weights })
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub fn make_filter(kind: FilterKind, params: &FilterParams, n_segments: usize, dt: f64) -> Result<FilterSpec> {
    if n_segments == 0 || !(dt > 0.0) {
        return Err(GeckoError::input("filter needs L >= 1 and dt > 0"));
    }
    let freqs = mode_frequencies(n_segments, dt);
    let f_max = *freqs.last().unwrap();
    let lowpass = |fc: f64| -> Result<Vec<f64>> {
        if !(fc > 0.0 && fc <= f_max) {
            return Err(GeckoError::input(format!("cutoff {fc} outside (0, {f_max}]")));
        }
        let p = 2 * params.steepness.max(1) as i32;
        Ok(freqs.iter().map(|f| 1.0 / (1.0 + (f / fc).powi(p))).collect())
    };
    let weights = match kind {
        FilterKind::Lowpass => lowpass(params.cutoff)?,
        FilterKind::Highpass => lowpass(params.cutoff)?.into_iter().map(|w| 1.0 - w).collect(),
        FilterKind::Bandstop => {
            if !(params.center > 0.0 && params.center <= f_max) {
                return Err(GeckoError::input(format!("center {} outside (0, {f_max}]", params.center)));
            }
            if !(params.width > 0.0) {
                return Err(GeckoError::input("band-stop width must be positive"));
            }
            let two_var = 2.0 * params.width * params.width;
            freqs
                .iter()
                .map(|f| 1.0 - (-(f - params.center).powi(2) / two_var).exp())
                .collect()
        }
        FilterKind::Custom => return Err(GeckoError::input("custom filters take explicit weights")),
    };
    FilterSpec::with_kind(kind, weights.into_iter().map(|w: f64| w.clamp(0.0, 1.0)).collect())
}

/// `φ̂²` per mode, one vector per channel.
pub fn power_spectrum(pulse: &PulseParams) -> Result<Vec<Vec<f64>>> {
    (0..pulse.n_controls())
        .map(|k| Ok(dst1_forward(&pulse.channel(k))?.into_iter().map(|c| c * c).collect()))
        .collect()
}

/// Applies `H`: scales each channel's sine coefficients by the weights.
pub fn apply_filter(pulse: &PulseParams, fs: &FilterSpec) -> Result<PulseParams> {
    check_len(pulse, fs)?;
    let (l, kc) = (pulse.n_segments(), pulse.n_controls());
    let mut amps = vec![0.0; l * kc];
    for k in 0..kc {
        let mut c = dst1_forward(&pulse.channel(k))?;
        c.iter_mut().zip(fs.weights()).for_each(|(c, w)| *c *= w);
        for (i, v) in dst1_inverse(&c)?.into_iter().enumerate() {
            amps[i * kc + k] = v;
        }
    }
    pulse.with_amplitudes(amps)
}

fn check_len(pulse: &PulseParams, fs: &FilterSpec) -> Result<()> {
    if fs.len() != pulse.n_segments() {
        return Err(GeckoError::input(format!(
            "filter has {} weights but pulse has {} segments",
            fs.len(),
            pulse.n_segments()
        )));
    }
    Ok(())
}

pub fn q_filter(pulse: &PulseParams, fs: &FilterSpec) -> Result<f64> {
    check_len(pulse, fs)?;
    let mut q = 0.0;
    for k in 0..pulse.n_controls() {
        let c = dst1_forward(&pulse.channel(k))?;
        q += c.iter().zip(fs.weights()).map(|(c, w)| ((1.0 - w) * c).powi(2)).sum::<f64>();
    }
    Ok(q)
}

/// Gradient with respect to the `L·K` amplitudes, row-major like the pulse.
pub fn grad_q_filter(pulse: &PulseParams, fs: &FilterSpec) -> Result<Vec<f64>> {
    check_len(pulse, fs)?;
    let (l, kc) = (pulse.n_segments(), pulse.n_controls());
    let scale = 4.0 / (l as f64 + 1.0);
    let mut grad = vec![0.0; l * kc];
    for k in 0..kc {
        let mut c = dst1_forward(&pulse.channel(k))?;
        c.iter_mut().zip(fs.weights()).for_each(|(c, w)| *c *= (1.0 - w).powi(2));
        for (i, v) in dst1_inverse(&c)?.into_iter().enumerate() {
            grad[i * kc + k] = scale * v;
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pulse() -> PulseParams {
        let amps = (0..24).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        PulseParams::from_flat(amps, 12, 2, 0.3).unwrap()
    }

    #[test]
    fn identity_and_annihilating_filters() {
        let p = pulse();
        let ones = FilterSpec::custom(vec![1.0; 12]).unwrap();
        assert_eq!(q_filter(&p, &ones).unwrap(), 0.0);
        assert!(grad_q_filter(&p, &ones).unwrap().iter().all(|g| *g == 0.0));
        let zeros = FilterSpec::custom(vec![0.0; 12]).unwrap();
        let energy: f64 = power_spectrum(&p).unwrap().iter().flatten().sum();
        assert!((q_filter(&p, &zeros).unwrap() - energy).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = pulse();
        let fs = make_filter(FilterKind::Lowpass, &FilterParams { cutoff: 0.5, ..Default::default() }, 12, 0.3).unwrap();
        let g = grad_q_filter(&p, &fs).unwrap();
        let h = 1e-6;
        for j in 0..24 {
            let mut d = vec![0.0; 24];
            d[j] = h;
            let qp = q_filter(&p.displaced(&d).unwrap(), &fs).unwrap();
            d[j] = -h;
            let qm = q_filter(&p.displaced(&d).unwrap(), &fs).unwrap();
            assert!(((qp - qm) / (2.0 * h) - g[j]).abs() < 1e-7);
        }
    }

    #[test]
    fn filter_shapes() {
        let params = FilterParams { cutoff: 2.0, center: 10.0, width: 1.5, steepness: 4 };
        let lp = make_filter(FilterKind::Lowpass, &params, 40, 0.05).unwrap();
        let hp = make_filter(FilterKind::Highpass, &params, 40, 0.05).unwrap();
        assert!(lp.weights().windows(2).all(|w| w[1] <= w[0]));
        for (a, b) in lp.weights().iter().zip(hp.weights()) {
            assert!((a + b - 1.0).abs() < 1e-15);
        }
        let bs = make_filter(FilterKind::Bandstop, &params, 40, 0.04).unwrap();
        let freqs = mode_frequencies(40, 0.04);
        let argmin = (0..40).min_by(|&a, &b| bs.weights()[a].total_cmp(&bs.weights()[b])).unwrap();
        let nearest = (0..40).min_by(|&a, &b| (freqs[a] - 10.0).abs().total_cmp(&(freqs[b] - 10.0).abs())).unwrap();
        assert_eq!(argmin, nearest);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(FilterSpec::custom(vec![0.5, 1.2]).is_err());
        assert!(FilterSpec::custom(vec![-0.1]).is_err());
        let bad = FilterParams { cutoff: 0.0, ..Default::default() };
        assert!(make_filter(FilterKind::Lowpass, &bad, 10, 0.1).is_err());
        let far = FilterParams { center: 1e3, ..Default::default() };
        assert!(make_filter(FilterKind::Bandstop, &far, 10, 0.1).is_err());
        let fs = FilterSpec::custom(vec![1.0; 3]).unwrap();
        assert!(q_filter(&pulse(), &fs).is_err());
    }

    #[test]
    fn apply_filter_removes_stopband_energy() {
        let p = pulse();
        let zeros = FilterSpec::custom(vec![0.0; 12]).unwrap();
        let out = apply_filter(&p, &zeros).unwrap();
        assert!(out.amplitudes().iter().all(|x| x.abs() < 1e-12));
        let ones = FilterSpec::custom(vec![1.0; 12]).unwrap();
        let same = apply_filter(&p, &ones).unwrap();
        for (a, b) in same.amplitudes().iter().zip(p.amplitudes()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
