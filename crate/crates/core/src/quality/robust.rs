use rayon::prelude::*;

use crate::error::{GeckoError, Result};
use crate::pulse::{fidelity, GateTarget, HamiltonianSpec, PulseParams};
use crate::restore::fidelity_gradient;

pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct RobustSpec {
    controls: Vec<usize>,
    delta: f64,
    points: usize,
}

impl RobustSpec {
    /// `points` grid values per channel spanning `[-delta, delta]`.
    pub fn new(controls: Vec<usize>, delta: f64, points: usize) -> Result<Self> {
        if controls.is_empty() {
            return Err(GeckoError::input("robustness needs at least one control channel"));
        }
        let mut sorted = controls.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != controls.len() {
            return Err(GeckoError::input("duplicate robust control channel"));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(GeckoError::input(format!("delta must be nonnegative, got {delta}")));
        }
        if delta > 0.0 && points < 2 {
            return Err(GeckoError::input("need at least 2 grid points per channel when delta > 0"));
        }
        Ok(Self { controls, delta, points })
    }

    pub fn controls(&self) -> &[usize] {
        &self.controls
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Offsets along one channel.
    pub fn axis(&self) -> Vec<f64> {
        if self.delta == 0.0 {
            return vec![0.0];
        }
        let s = self.points;
        (0..s)
            .map(|i| -self.delta + 2.0 * self.delta * i as f64 / (s - 1) as f64)
            .collect()
    }

    pub fn grid_size(&self) -> Result<usize> {
        let per = self.axis().len();
        per.checked_pow(self.controls.len() as u32)
            .filter(|n| *n <= MAX_GRID_POINTS)
            .ok_or_else(|| {
                GeckoError::Budget(format!(
                    "{per}^{} robustness grid exceeds {MAX_GRID_POINTS} points",
                    self.controls.len()
                ))
            })
    }

    /// Grid point `index` in lexicographic order, first channel most significant.
    fn offsets(&self, axis: &[f64], mut index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.controls.len()];
        for slot in out.iter_mut().rev() {
            *slot = axis[index % axis.len()];
            index /= axis.len();
        }
        out
    }

    fn check(&self, spec: &HamiltonianSpec) -> Result<()> {
        match self.controls.iter().find(|&&k| k >= spec.n_controls()) {
            Some(k) => Err(GeckoError::input(format!(
                "robust channel {k} out of range for {} controls",
                spec.n_controls()
            ))),
            None => Ok(()),
        }
    }
}

/// Adds `offsets[i]` to every segment of channel `controls[i]`.
pub fn offset_pulse(pulse: &PulseParams, controls: &[usize], offsets: &[f64]) -> Result<PulseParams> {
    let kc = pulse.n_controls();
    let mut amps = pulse.amplitudes().to_vec();
    for (&k, &d) in controls.iter().zip(offsets) {
        if k >= kc {
            return Err(GeckoError::input(format!("channel {k} out of range")));
        }
        amps.iter_mut().skip(k).step_by(kc).for_each(|a| *a += d);
    }
    pulse.with_amplitudes(amps)
}

/// Worst grid fidelity and its offsets.
pub fn worst_case(
    spec: &HamiltonianSpec,
    pulse: &PulseParams,
    target: &GateTarget,
    rs: &RobustSpec,
) -> Result<(f64, Vec<f64>)> {
    rs.check(spec)?;
    let n = rs.grid_size()?;
    let axis = rs.axis();
    let values = (0..n)
        .into_par_iter()
        .map(|i| fidelity(spec, &offset_pulse(pulse, &rs.controls, &rs.offsets(&axis, i))?, target))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    Ok((values[best], rs.offsets(&axis, best)))
}

pub fn q_robust(spec: &HamiltonianSpec, pulse: &PulseParams, target: &GateTarget, rs: &RobustSpec) -> Result<f64> {
    Ok(1.0 - worst_case(spec, pulse, target, rs)?.0)
}

/// `−∇F` at the worst grid point; length matches `pulse.param_count()`.
pub fn grad_q_robust(
    spec: &HamiltonianSpec,
    pulse: &PulseParams,
    target: &GateTarget,
    rs: &RobustSpec,
) -> Result<Vec<f64>> {
    let (_, offsets) = worst_case(spec, pulse, target, rs)?;
    let shifted = offset_pulse(pulse, &rs.controls, &offsets)?;
    Ok(fidelity_gradient(spec, &shifted, target)?.into_iter().map(|g| -g).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::restore::random_pulse;

    fn setup() -> (HamiltonianSpec, PulseParams, GateTarget) {
        let spec = HamiltonianSpec::tfim1(1.0);
        let p = random_pulse(&spec, 6, 0.3, 1.0, 11).unwrap();
        (spec, p, GateTarget::cz())
    }

    #[test]
    fn zero_delta_is_infidelity() {
        let (spec, p, t) = setup();
        let rs = RobustSpec::new(vec![0, 1], 0.0, 5).unwrap();
        assert_eq!(rs.grid_size().unwrap(), 1);
        let q = q_robust(&spec, &p, &t, &rs).unwrap();
        assert_eq!(q + fidelity(&spec, &p, &t).unwrap(), 1.0);
    }

    #[test]
    fn grid_axis_and_nesting() {
        let rs = RobustSpec::new(vec![0], 0.05, 5).unwrap();
        let axis = rs.axis();
        for (a, b) in axis.iter().zip([-0.05, -0.025, 0.0, 0.025, 0.05]) {
            assert!((a - b).abs() < 1e-15);
        }
        let (spec, p, t) = setup();
        let mut last = 0.0;
        for d in [0.0, 0.01, 0.05, 0.1] {
            let q = q_robust(&spec, &p, &t, &RobustSpec::new(vec![0, 1], d, 5).unwrap()).unwrap();
            assert!(q >= last - 1e-15);
            last = q;
        }
    }

    #[test]
    fn gradient_matches_finite_differences_away_from_ties() {
        let (spec, p, t) = setup();
        let rs = RobustSpec::new(vec![0], 0.05, 5).unwrap();
        let g = grad_q_robust(&spec, &p, &t, &rs).unwrap();
        let h = 1e-7;
        for j in 0..p.param_count() {
            let mut e = vec![0.0; p.param_count()];
            e[j] = h;
            let qp = q_robust(&spec, &p.displaced(&e).unwrap(), &t, &rs).unwrap();
            e[j] = -h;
            let qm = q_robust(&spec, &p.displaced(&e).unwrap(), &t, &rs).unwrap();
            assert!(((qp - qm) / (2.0 * h) - g[j]).abs() < 1e-6);
        }
    }

    #[test]
    fn budget_and_validation() {
        let rs = RobustSpec::new(vec![0, 1, 2, 3, 4, 5, 6, 7, 8], 0.1, 5).unwrap();
        assert!(matches!(rs.grid_size(), Err(GeckoError::Budget(_))));
        assert!(RobustSpec::new(vec![], 0.1, 5).is_err());
        assert!(RobustSpec::new(vec![0], 0.1, 1).is_err());
        assert!(RobustSpec::new(vec![0, 0], 0.1, 5).is_err());
        let (spec, p, t) = setup();
        let bad = RobustSpec::new(vec![3], 0.1, 3).unwrap();
        assert!(q_robust(&spec, &p, &t, &bad).is_err());
    }

    #[test]
    fn lexicographic_offsets() {
        let rs = RobustSpec::new(vec![0, 1], 1.0, 3).unwrap();
        let axis = rs.axis();
        assert_eq!(rs.offsets(&axis, 0), vec![-1.0, -1.0]);
        assert_eq!(rs.offsets(&axis, 1), vec![-1.0, 0.0]);
        assert_eq!(rs.offsets(&axis, 3), vec![0.0, -1.0]);
    }
}
