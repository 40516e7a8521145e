//! Fidelity maximization: finds initial solutions and restores `F > 1 − ε`
//! after kernel steps have drifted off the level set at second order.

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GeckoError, Result};
use nalgebra::DVector;
use num_complex::Complex64;

use crate::kernel::{jacobian_from_derivatives, PulseEvolution};
use crate::operator::{project_unchecked, trace_adjoint_product, CMatrix};
use crate::pulse::{fidelity, GateTarget, HamiltonianSpec, PulseParams};

struct Iterate {
    fidelity: f64,
    gradient: Vec<f64>,
    /// Left-translated derivatives and `U_G† U_t`, kept for the geodesic step.
    derivatives: Vec<CMatrix>,
    overlap: CMatrix,
}

fn iterate(spec: &HamiltonianSpec, pulse: &PulseParams, target: &GateTarget) -> Result<Iterate> {
    if spec.dim() != target.dim() {
        return Err(GeckoError::input(format!(
            "target acts on dimension {}, Hamiltonian on {}",
            target.dim(),
            spec.dim()
        )));
    }
    let evo = PulseEvolution::new(spec, pulse)?;
    let n = spec.dim() as f64;
    // τ = Tr{U_G† U_t};  ∂τ = Tr{(U_G Ω)† U_t} = Tr{Ω† A} with A = U_G† U_t
    let a = evo.unitary().adjoint() * target.matrix();
    let tau = a.trace();
    let derivatives = evo.left_translated_derivatives(spec, pulse);
    let gradient = if tau.norm() == 0.0 {
        vec![0.0; pulse.param_count()]
    } else {
        derivatives
            .iter()
            .map(|omega| (tau.conj() * trace_adjoint_product(omega, &a)).re / (n * tau.norm()))
            .collect()
    };
    Ok(Iterate {
        fidelity: tau.norm() / n,
        gradient,
        derivatives,
        overlap: a,
    })
}

/// Fidelity and its exact gradient with respect to every pulse parameter
/// (including `Δt` when it is optimizable).
pub fn fidelity_and_gradient(
    spec: &HamiltonianSpec,
    pulse: &PulseParams,
    target: &GateTarget,
) -> Result<(f64, Vec<f64>)> {
    let it = iterate(spec, pulse, target)?;
    Ok((it.fidelity, it.gradient))
}

pub fn fidelity_gradient(spec: &HamiltonianSpec, pulse: &PulseParams, target: &GateTarget) -> Result<Vec<f64>> {
    Ok(fidelity_and_gradient(spec, pulse, target)?.1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RestoreMethod {
    /// Armijo gradient ascent only.
    GradientAscent,
    /// Close to the target, least-squares steps towards `log(U_G† U_t)` in
    /// su(N) coordinates; gradient steps elsewhere and whenever those stall.
    Geodesic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestoreConfig {
    pub epsilon: f64,
    pub max_iters: usize,
    pub initial_step: f64,
    /// Backtracking contraction factor.
    pub shrink: f64,
    /// Sufficient-increase constant.
    pub armijo: f64,
    /// Step expansion after an accepted iterate.
    pub growth: f64,
    /// Seeds the one-off random kick at stationary points.
    pub seed: u64,
    pub method: RestoreMethod,
}

impl Default for RestoreConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-7,
            max_iters: 20_000,
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            growth: 2.0,
            seed: 0,
            method: RestoreMethod::Geodesic,
        }
    }
}

impl RestoreConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(GeckoError::input(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(GeckoError::input("restorer needs max_iters >= 1"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(GeckoError::input("shrink factor must lie in (0, 1)"));
        }
        if !(self.initial_step > 0.0) || !(self.armijo > 0.0 && self.armijo < 1.0) || !(self.growth >= 1.0) {
            return Err(GeckoError::input("invalid line-search parameters"));
        }
        Ok(())
    }
}

const KICK_NORM: f64 = 1e-3;
const MIN_STEP: f64 = 1e-16;
const GEODESIC_HALVINGS: usize = 12;
const GEODESIC_CONTRACTION: f64 = 0.9;
/// Infidelity below which the linearized geodesic step is trusted.
const GEODESIC_RANGE: f64 = 1e-2;

/// Fidelity ascent until `F > 1 − ε`. Returns the first iterate satisfying
/// the constraint; a pulse that already satisfies it is returned as is.
pub fn restore(
    spec: &HamiltonianSpec,
    pulse: &PulseParams,
    target: &GateTarget,
    cfg: &RestoreConfig,
) -> Result<PulseParams> {
    cfg.validate()?;
    let threshold = 1.0 - cfg.epsilon;
    let mut current = pulse.clone();
    let mut it = iterate(spec, &current, target)?;
    if it.fidelity > threshold {
        return Ok(current);
    }
    let mut step = cfg.initial_step;
    let mut kicked = false;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    for iter in 0..cfg.max_iters {
        let mut accepted = None;
        let mut marginal = None;
        if cfg.method == RestoreMethod::Geodesic && 1.0 - it.fidelity < GEODESIC_RANGE {
            if let Some((candidate, fc)) = geodesic_step(spec, target, &current, &it)? {
                // demand a real cut in infidelity, else let the gradient try first
                if 1.0 - fc <= GEODESIC_CONTRACTION * (1.0 - it.fidelity) {
                    accepted = Some(candidate);
                } else {
                    marginal = Some(candidate);
                }
            }
        }
        if accepted.is_none() {
            let gnorm_sq: f64 = it.gradient.iter().map(|g| g * g).sum();
            if gnorm_sq > 1e-30 {
                accepted = line_search(spec, target, &current, it.fidelity, &it.gradient, gnorm_sq, &mut step, cfg)?;
                if accepted.is_some() {
                    step *= cfg.growth;
                }
            }
            accepted = accepted.or(marginal);
        }
        match accepted {
            Some(next) => {
                current = next;
                it = iterate(spec, &current, target)?;
                if it.fidelity > threshold {
                    debug!("restored to F = {:.12} after {} iterations", it.fidelity, iter + 1);
                    return Ok(current);
                }
            }
            None if !kicked => {
                // Stationary point below the threshold: one random kick.
                kicked = true;
                let mut kick: Vec<f64> = (0..current.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
                if current.optimize_dt() {
                    *kick.last_mut().unwrap() = 0.0;
                }
                let norm = kick.iter().map(|x| x * x).sum::<f64>().sqrt();
                kick.iter_mut().for_each(|x| *x *= KICK_NORM / norm);
                current = current.displaced(&kick)?;
                it = iterate(spec, &current, target)?;
                step = cfg.initial_step;
            }
            None => {
                return Err(GeckoError::RestoreFailed {
                    best: Box::new(current),
                    fidelity: it.fidelity,
                    iterations: iter + 1,
                })
            }
        }
    }
    Err(GeckoError::RestoreFailed {
        best: Box::new(current),
        fidelity: it.fidelity,
        iterations: cfg.max_iters,
    })
}

/// `log W` for unitary `W`, with the global phase `arg Tr W` removed first so
/// the eigenphases sit away from the branch cut near a solution.
fn unitary_log(w: &CMatrix) -> CMatrix {
    let phase = Complex64::from_polar(1.0, -w.trace().arg());
    let (q, t) = nalgebra::Schur::new(w * phase).unpack();
    let logs = CMatrix::from_diagonal(&t.diagonal().map(|z| Complex64::new(0.0, z.arg())));
    &q * logs * q.adjoint()
}

fn geodesic_step(
    spec: &HamiltonianSpec,
    target: &GateTarget,
    current: &PulseParams,
    it: &Iterate,
) -> Result<Option<(PulseParams, f64)>> {
    let jac = jacobian_from_derivatives(&it.derivatives, spec);
    let rhs = DVector::from_vec(project_unchecked(&unitary_log(&it.overlap), spec.basis()).into_vec());
    let svd = jac.matrix().clone().svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return Ok(None);
    }
    let delta = match svd.solve(&rhs, 1e-10 * smax) {
        Ok(d) => d,
        Err(_) => return Ok(None),
    };
    if !delta.iter().all(|d| d.is_finite()) {
        return Ok(None);
    }
    let mut alpha = 1.0;
    for _ in 0..GEODESIC_HALVINGS {
        let scaled: Vec<f64> = delta.iter().map(|d| alpha * d).collect();
        match current.displaced(&scaled) {
            Ok(candidate) => {
                let fc = fidelity(spec, &candidate, target)?;
                if fc > it.fidelity {
                    return Ok(Some((candidate, fc)));
                }
            }
            Err(GeckoError::StepRejected { .. }) => {}
            Err(e) => return Err(e),
        }
        alpha *= 0.5;
    }
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn line_search(
    spec: &HamiltonianSpec,
    target: &GateTarget,
    current: &PulseParams,
    f: f64,
    grad: &[f64],
    gnorm_sq: f64,
    step: &mut f64,
    cfg: &RestoreConfig,
) -> Result<Option<PulseParams>> {
    while *step > MIN_STEP {
        let delta: Vec<f64> = grad.iter().map(|g| *step * g).collect();
        match current.displaced(&delta) {
            Ok(candidate) => {
                let fc = fidelity(spec, &candidate, target)?;
                if fc >= f + cfg.armijo * *step * gnorm_sq {
                    return Ok(Some(candidate));
                }
            }
            Err(GeckoError::StepRejected { .. }) => {}
            Err(e) => return Err(e),
        }
        *step *= cfg.shrink;
    }
    *step = cfg.initial_step;
    Ok(None)
}

/// Entries uniform in `[-amplitude_scale, amplitude_scale]` from a seeded
/// ChaCha stream; identical seeds give identical pulses.
pub fn random_pulse(
    spec: &HamiltonianSpec,
    n_segments: usize,
    dt: f64,
    amplitude_scale: f64,
    seed: u64,
) -> Result<PulseParams> {
    if !(amplitude_scale > 0.0 && amplitude_scale.is_finite()) {
        return Err(GeckoError::input(format!(
            "amplitude scale must be positive, got {amplitude_scale}"
        )));
    }
    let k = spec.n_controls();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..n_segments * k)
        .map(|_| rng.random_range(-amplitude_scale..=amplitude_scale))
        .collect();
    PulseParams::from_flat(amps, n_segments, k, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{kernel_basis, pulse_jacobian, DEFAULT_KERNEL_TOL};
    use crate::pulse::pulse_unitary;

    fn fd_gradient(spec: &HamiltonianSpec, pulse: &PulseParams, target: &GateTarget, h: f64) -> Vec<f64> {
        (0..pulse.param_count())
            .map(|j| {
                let mut e = vec![0.0; pulse.param_count()];
                e[j] = h;
                let fp = fidelity(spec, &pulse.displaced(&e).unwrap(), target).unwrap();
                e[j] = -h;
                let fm = fidelity(spec, &pulse.displaced(&e).unwrap(), target).unwrap();
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (spec, target) in [
            (HamiltonianSpec::tfim1(1.0), GateTarget::cz()),
            (HamiltonianSpec::tfim2(1.0), GateTarget::cnot()),
        ] {
            for seed in 0..10 {
                let pulse = random_pulse(&spec, 6, 0.8, 1.0, seed).unwrap().with_optimize_dt(seed % 2 == 1);
                let g = fidelity_gradient(&spec, &pulse, &target).unwrap();
                let fd = fd_gradient(&spec, &pulse, &target, 1e-6);
                let scale = fd.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                for (a, b) in g.iter().zip(&fd) {
                    assert!((a - b).abs() < 1e-6 * scale.max(1e-3), "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn gradient_vanishes_at_exact_solution() {
        let spec = HamiltonianSpec::tfim1_h2zero(1.0);
        let pulse = PulseParams::zeros(4, 1, std::f64::consts::PI / 16.0).unwrap();
        let (f, g) = fidelity_and_gradient(&spec, &pulse, &GateTarget::cz()).unwrap();
        assert!((f - 1.0).abs() < 1e-14);
        assert!(g.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn gradient_is_phase_invariant() {
        let spec = HamiltonianSpec::tfim1(1.0);
        let pulse = random_pulse(&spec, 5, 1.0, 1.0, 3).unwrap();
        let cz = GateTarget::cz();
        let rotated = GateTarget::custom(cz.matrix() * Complex64::from_polar(1.0, 0.9)).unwrap();
        let a = fidelity_gradient(&spec, &pulse, &cz).unwrap();
        let b = fidelity_gradient(&spec, &pulse, &rotated).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn feasible_input_returned_unchanged() {
        let spec = HamiltonianSpec::tfim1_h2zero(1.0);
        let pulse = PulseParams::zeros(4, 1, std::f64::consts::PI / 16.0).unwrap();
        let out = restore(&spec, &pulse, &GateTarget::cz(), &RestoreConfig::default()).unwrap();
        assert_eq!(out, pulse);
    }

    #[test]
    fn random_pulse_is_seeded_and_bounded() {
        let spec = HamiltonianSpec::tfim1(1.0);
        let a = random_pulse(&spec, 8, 1.0, 0.5, 42).unwrap();
        let b = random_pulse(&spec, 8, 1.0, 0.5, 42).unwrap();
        let c = random_pulse(&spec, 8, 1.0, 0.5, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.amplitudes().iter().all(|x| x.abs() <= 0.5));
        assert!(random_pulse(&spec, 8, 1.0, 0.0, 1).is_err());
    }

    #[test]
    fn solves_cz_from_random_start() {
        let spec = HamiltonianSpec::tfim1(1.0);
        let target = GateTarget::cz();
        let cfg = RestoreConfig::default();
        let mut solved = 0;
        for seed in 0..10 {
            let start = random_pulse(&spec, 4, 0.5, 1.0, seed).unwrap();
            if let Ok(p) = restore(&spec, &start, &target, &cfg) {
                assert!(fidelity(&spec, &p, &target).unwrap() > 1.0 - 1e-7);
                solved += 1;
            }
        }
        assert!(solved >= 8, "solved {solved}/10");
    }

    #[test]
    fn restores_non_kernel_perturbation() {
        let spec = HamiltonianSpec::tfim1_h2zero(1.0);
        let target = GateTarget::cz();
        let cfg = RestoreConfig::default();
        let start = random_pulse(&spec, 20, 1.0, 1.0, 5).unwrap();
        let solution = restore(&spec, &start, &target, &cfg).unwrap();
        // displace along a row-space (non-kernel) direction
        let j = pulse_jacobian(&spec, &solution).unwrap();
        let k = kernel_basis(&j, DEFAULT_KERNEL_TOL).unwrap();
        let row = j.matrix().row(0).transpose();
        let z = k.z();
        let residual = &row - z * (z.transpose() * &row);
        let norm = residual.norm();
        let delta: Vec<f64> = residual.iter().map(|x| 0.01 * x / norm).collect();
        let perturbed = solution.displaced(&delta).unwrap();
        assert!(fidelity(&spec, &perturbed, &target).unwrap() < 1.0 - 1e-7);
        let capped = RestoreConfig { max_iters: 200, ..cfg };
        let restored = restore(&spec, &perturbed, &target, &capped).unwrap();
        assert!(fidelity(&spec, &restored, &target).unwrap() > 1.0 - 1e-7);
        let _ = pulse_unitary(&spec, &restored).unwrap();
    }
}
