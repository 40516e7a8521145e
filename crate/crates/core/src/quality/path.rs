use crate::error::{GeckoError, Result};
use crate::pulse::{HamiltonianSpec, PulseParams};

fn segment_speeds(spec: &HamiltonianSpec, pulse: &PulseParams) -> Result<Vec<f64>> {
    pulse.check_against(spec)?;
    let g2 = spec.drift_norm_sq();
    Ok((0..pulse.n_segments())
        .map(|l| (pulse.segment(l).iter().map(|x| x * x).sum::<f64>() + g2).sqrt())
        .collect())
}

/// Geodesic length of the pulse: `Σ_l √(φ_l·φ_l + Σ g_d²) Δt`.
pub fn q_path(spec: &HamiltonianSpec, pulse: &PulseParams) -> Result<f64> {
    Ok(segment_speeds(spec, pulse)?.iter().sum::<f64>() * pulse.dt())
}

/// Amplitude gradient followed by `∂Q/∂Δt` when `include_dt`.
pub fn grad_q_path(spec: &HamiltonianSpec, pulse: &PulseParams, include_dt: bool) -> Result<Vec<f64>> {
    if include_dt && !pulse.optimize_dt() {
        return Err(GeckoError::input("Δt gradient requested but Δt is not a parameter"));
    }
    let speeds = segment_speeds(spec, pulse)?;
    let kc = pulse.n_controls();
    let mut grad = Vec::with_capacity(pulse.param_count());
    for (l, v) in speeds.iter().enumerate() {
        for k in 0..kc {
            grad.push(if *v > 0.0 { pulse.amplitude(l, k) * pulse.dt() / v } else { 0.0 });
        }
    }
    if include_dt {
        grad.push(speeds.iter().sum());
    }
    Ok(grad)
}

pub fn q_drift(pulse: &PulseParams) -> Result<f64> {
    if !pulse.optimize_dt() {
        return Err(GeckoError::input("duration quality needs an optimizable Δt"));
    }
    Ok(pulse.dt())
}

pub fn grad_q_drift(pulse: &PulseParams) -> Result<Vec<f64>> {
    q_drift(pulse)?;
    let mut g = vec![0.0; pulse.param_count()];
    *g.last_mut().unwrap() = 1.0;
    Ok(g)
}
