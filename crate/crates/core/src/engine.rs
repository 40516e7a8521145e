//! The GECKO driver: Jacobian, kernel, quality step, fidelity check, restore.

use std::fmt;
use std::io::Write;

use log::{debug, info};
use nalgebra::DVector;

use crate::error::{GeckoError, Result};
use crate::kernel::{jacobian_from, kernel_basis, project_gradient, take_step, KernelBasis, PulseEvolution, DEFAULT_KERNEL_TOL};
use crate::pulse::{fidelity, refine_pulse, GateTarget, HamiltonianSpec, PulseParams};
use crate::quality::{quadratic_direct_solve, QualitySpec};
use crate::restore::{restore, RestoreConfig};

/// Anything that can push a pulse back above `1 − ε`.
pub trait Restorer {
    fn restore(&self, spec: &HamiltonianSpec, pulse: &PulseParams, target: &GateTarget, epsilon: f64) -> Result<PulseParams>;
}

impl Restorer for RestoreConfig {
    fn restore(&self, spec: &HamiltonianSpec, pulse: &PulseParams, target: &GateTarget, epsilon: f64) -> Result<PulseParams> {
        restore(spec, pulse, target, &RestoreConfig { epsilon, ..self.clone() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RestoreSchedule {
    /// Restore whenever a step leaves `F > 1 − ε`.
    OnViolation,
    /// Restore after every `n`-th iteration and before returning.
    Every(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepMode {
    /// `Δx = −Zᵀ∇Q`.
    ProjectGradient,
    /// `Δx = argmin_x Q(Φ + Zx)`, clipped to the step size.
    DirectSolve,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeckoConfig {
    pub step_size: f64,
    pub max_iters: usize,
    pub q_aim: f64,
    pub epsilon: f64,
    pub restore: RestoreSchedule,
    pub tol_rel: f64,
    pub mode: StepMode,
}

impl Default for GeckoConfig {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            max_iters: 100,
            q_aim: 0.0,
            epsilon: 1e-7,
            restore: RestoreSchedule::OnViolation,
            tol_rel: DEFAULT_KERNEL_TOL,
            mode: StepMode::ProjectGradient,
        }
    }
}

impl GeckoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(GeckoError::input(format!("step size must be positive, got {}", self.step_size)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(GeckoError::input(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.tol_rel > 0.0 && self.tol_rel < 1.0) {
            return Err(GeckoError::input("kernel tolerance must lie in (0, 1)"));
        }
        if self.restore == RestoreSchedule::Every(0) {
            return Err(GeckoError::input("restore interval must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub quality: f64,
    pub fidelity: f64,
    pub kernel_dim: usize,
    pub step_norm: f64,
    pub restored: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeckoStatus {
    AimReached,
    BudgetExhausted,
    Stationary,
}

impl fmt::Display for GeckoStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeckoStatus::AimReached => "aim_reached",
            GeckoStatus::BudgetExhausted => "budget_exhausted",
            GeckoStatus::Stationary => "stationary",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeckoTrace {
    pub records: Vec<IterationRecord>,
    pub pulse: PulseParams,
    pub status: GeckoStatus,
}

impl GeckoTrace {
    pub const CSV_HEADER: &'static str = "iter,Q,F,R,step_norm,restored";

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{},{:.16e},{}",
                r.iter, r.quality, r.fidelity, r.kernel_dim, r.step_norm, r.restored
            )?;
        }
        Ok(())
    }
}

fn kernel_at(spec: &HamiltonianSpec, pulse: &PulseParams, tol_rel: f64) -> Result<KernelBasis> {
    let evo = PulseEvolution::new(spec, pulse)?;
    kernel_basis(&jacobian_from(&evo, spec, pulse), tol_rel)
}

const INNER_ITERS: usize = 50;

/// Bounded backtracking descent on `x ↦ Q(Φ + Zx)` for non-quadratic qualities.
fn inner_descent(
    spec: &HamiltonianSpec,
    pulse: &PulseParams,
    target: &GateTarget,
    quality: &QualitySpec,
    kernel: &KernelBasis,
    initial: f64,
) -> Result<Vec<f64>> {
    let z = kernel.z();
    let mut x = DVector::zeros(kernel.dim());
    let mut t = initial;
    let eval = |x: &DVector<f64>| -> Result<Option<(PulseParams, f64)>> {
        let delta: Vec<f64> = (z * x).iter().copied().collect();
        match pulse.displaced(&delta) {
            Ok(p) => {
                let q = quality.value(spec, &p, target)?;
                Ok(Some((p, q)))
            }
            Err(GeckoError::StepRejected { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let (mut here, mut q) = eval(&x)?.expect("zero displacement is always valid");
    for _ in 0..INNER_ITERS {
        let g = z.transpose() * DVector::from_vec(quality.gradient(spec, &here, target)?);
        let gn = g.norm();
        if gn < 1e-14 {
            break;
        }
        let dir = g / gn;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &x - &dir * t;
            if let Some((p, qt)) = eval(&trial)? {
                if qt <= q - 1e-4 * t * gn {
                    (x, here, q) = (trial, p, qt);
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        t *= 2.0;
    }
    Ok(x.iter().copied().collect())
}

fn direction(
    spec: &HamiltonianSpec,
    pulse: &PulseParams,
    target: &GateTarget,
    quality: &QualitySpec,
    kernel: &KernelBasis,
    cfg: &GeckoConfig,
) -> Result<(Vec<f64>, f64)> {
    match cfg.mode {
        StepMode::ProjectGradient => {
            let grad = quality.gradient(spec, pulse, target)?;
            Ok((project_gradient(kernel, &grad)?, cfg.step_size))
        }
        StepMode::DirectSolve => {
            let x = match quality.quadratic_form(pulse)? {
                Some((a, c)) => quadratic_direct_solve(&a, &c, &pulse.to_vector(), kernel)?,
                None => inner_descent(spec, pulse, target, quality, kernel, cfg.step_size)?,
            };
            let norm = kernel.lift(&x)?.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok((x, cfg.step_size.min(norm)))
        }
    }
}

/// Runs GECKO from a pulse that already satisfies `F > 1 − ε`.
pub fn gecko_run(
    spec: &HamiltonianSpec,
    pulse0: &PulseParams,
    target: &GateTarget,
    quality: &QualitySpec,
    cfg: &GeckoConfig,
    restorer: &dyn Restorer,
) -> Result<GeckoTrace> {
    cfg.validate()?;
    let threshold = 1.0 - cfg.epsilon;
    let f0 = fidelity(spec, pulse0, target)?;
    if !(f0 > threshold) {
        return Err(GeckoError::input(format!(
            "initial pulse has fidelity {f0:.12}, needs > {threshold}"
        )));
    }
    let mut trace = GeckoTrace {
        records: Vec::new(),
        pulse: pulse0.clone(),
        status: GeckoStatus::BudgetExhausted,
    };
    if cfg.max_iters == 0 {
        return Ok(trace);
    }
    let q0 = quality.value(spec, pulse0, target)?;
    if q0 <= cfg.q_aim {
        let r = kernel_at(spec, pulse0, cfg.tol_rel)?.dim();
        trace.records.push(IterationRecord { iter: 0, quality: q0, fidelity: f0, kernel_dim: r, step_norm: 0.0, restored: false });
        trace.status = GeckoStatus::AimReached;
        return Ok(trace);
    }

    let mut pulse = pulse0.clone();
    let mut f = f0;
    for iter in 1..=cfg.max_iters {
        let kernel = kernel_at(spec, &pulse, cfg.tol_rel)?;
        let (dx, s) = direction(spec, &pulse, target, quality, &kernel, cfg)?;
        let step = match take_step(spec, &pulse, target, &kernel, &dx, s) {
            Ok(step) => step,
            Err(GeckoError::DegenerateStep) => {
                trace.status = GeckoStatus::Stationary;
                break;
            }
            Err(e) => return Err(e),
        };
        let (mut next, mut step_norm) = (step.pulse, step.step_norm);
        f = step.fidelity;
        let due = match cfg.restore {
            RestoreSchedule::OnViolation => !(f > threshold),
            RestoreSchedule::Every(n) => iter % n == 0,
        };
        let mut restored = false;
        if due && !(f > threshold) {
            next = match restorer.restore(spec, &next, target, cfg.epsilon) {
                Ok(p) => p,
                Err(GeckoError::RestoreFailed { .. }) => {
                    debug!("restore failed at iteration {iter}; retrying with half step");
                    let half = take_step(spec, &pulse, target, &kernel, &dx, s / 2.0)?;
                    step_norm = half.step_norm;
                    restorer.restore(spec, &half.pulse, target, cfg.epsilon)?
                }
                Err(e) => return Err(e),
            };
            f = fidelity(spec, &next, target)?;
            restored = true;
        }
        pulse = next;
        let q = quality.value(spec, &pulse, target)?;
        trace.records.push(IterationRecord { iter, quality: q, fidelity: f, kernel_dim: kernel.dim(), step_norm, restored });
        if q <= cfg.q_aim {
            trace.status = GeckoStatus::AimReached;
            break;
        }
    }
    if !(f > threshold) {
        pulse = restorer.restore(spec, &pulse, target, cfg.epsilon)?;
        if let Some(last) = trace.records.last_mut() {
            last.fidelity = fidelity(spec, &pulse, target)?;
            last.quality = quality.value(spec, &pulse, target)?;
            last.restored = true;
        }
    }
    info!(
        "gecko: {} iterations, status {}, Q {:.6e} -> {:.6e}",
        trace.records.len(),
        trace.status,
        q0,
        trace.records.last().map_or(q0, |r| r.quality)
    );
    trace.pulse = pulse;
    Ok(trace)
}

/// Doubles the segment count and smooths, `rounds` times.
pub fn refine_and_smooth(
    spec: &HamiltonianSpec,
    pulse0: &PulseParams,
    target: &GateTarget,
    rounds: usize,
    cfg: &GeckoConfig,
    restorer: &dyn Restorer,
) -> Result<GeckoTrace> {
    let mut trace = GeckoTrace { records: Vec::new(), pulse: pulse0.clone(), status: GeckoStatus::BudgetExhausted };
    for _ in 0..rounds {
        let refined = refine_pulse(&trace.pulse, 2)?;
        let round = gecko_run(spec, &refined, target, &QualitySpec::Smooth, cfg, restorer)?;
        let offset = trace.records.last().map_or(0, |r| r.iter);
        trace.records.extend(round.records.into_iter().map(|mut r| {
            r.iter += offset;
            r
        }));
        trace.pulse = restorer.restore(spec, &round.pulse, target, cfg.epsilon)?;
        trace.status = round.status;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quality::q_smooth;
    use crate::restore::random_pulse;

    fn solution(l: usize, dt: f64, seed: u64) -> (HamiltonianSpec, PulseParams, GateTarget) {
        let spec = HamiltonianSpec::tfim1_h2zero(1.0);
        let target = GateTarget::cz();
        let start = random_pulse(&spec, l, dt, 3.0, seed).unwrap();
        let p = restore(&spec, &start, &target, &RestoreConfig::default()).unwrap();
        (spec, p, target)
    }

    #[test]
    fn zero_budget_and_immediate_aim() {
        let (spec, p, t) = solution(4, 1.0, 1);
        let r = RestoreConfig::default();
        let cfg = GeckoConfig { max_iters: 0, ..Default::default() };
        let trace = gecko_run(&spec, &p, &t, &QualitySpec::Smooth, &cfg, &r).unwrap();
        assert!(trace.records.is_empty());
        assert_eq!(trace.pulse, p);
        let cfg = GeckoConfig { q_aim: 1e9, ..Default::default() };
        let trace = gecko_run(&spec, &p, &t, &QualitySpec::Smooth, &cfg, &r).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.status, GeckoStatus::AimReached);
    }

    #[test]
    fn rejects_infeasible_start() {
        let spec = HamiltonianSpec::tfim1_h2zero(1.0);
        let p = random_pulse(&spec, 4, 1.0, 3.0, 0).unwrap();
        let err = gecko_run(&spec, &p, &GateTarget::cz(), &QualitySpec::Smooth, &GeckoConfig::default(), &RestoreConfig::default());
        assert!(matches!(err, Err(GeckoError::Input(_))));
    }

    #[test]
    fn smoothing_keeps_constraint_and_reduces_quality() {
        let (spec, p, t) = solution(4, 1.0, 2);
        let p = refine_pulse(&p, 8).unwrap();
        let r = RestoreConfig::default();
        for mode in [StepMode::ProjectGradient, StepMode::DirectSolve] {
            let cfg = GeckoConfig { step_size: 0.05, max_iters: 30, mode, ..Default::default() };
            let trace = gecko_run(&spec, &p, &t, &QualitySpec::Smooth, &cfg, &r).unwrap();
            assert!(fidelity(&spec, &trace.pulse, &t).unwrap() > 1.0 - 1e-7);
            assert!(q_smooth(&trace.pulse) < q_smooth(&p));
            for rec in trace.records.iter().filter(|r| !r.restored) {
                assert!(rec.fidelity >= 1.0 - 1e-7 - 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_traces() {
        let (spec, p, t) = solution(6, 0.5, 3);
        let cfg = GeckoConfig { step_size: 0.05, max_iters: 10, ..Default::default() };
        let r = RestoreConfig::default();
        let a = gecko_run(&spec, &p, &t, &QualitySpec::Smooth, &cfg, &r).unwrap();
        let b = gecko_run(&spec, &p, &t, &QualitySpec::Smooth, &cfg, &r).unwrap();
        assert_eq!(a, b);
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("iter,Q,F,R,step_norm,restored\n"));
    }

    #[test]
    fn refine_rounds() {
        let (spec, p, t) = solution(4, 1.0, 4);
        let cfg = GeckoConfig { step_size: 0.2, max_iters: 5, mode: StepMode::DirectSolve, ..Default::default() };
        let r = RestoreConfig::default();
        let none = refine_and_smooth(&spec, &p, &t, 0, &cfg, &r).unwrap();
        assert_eq!(none.pulse, p);
        let two = refine_and_smooth(&spec, &p, &t, 2, &cfg, &r).unwrap();
        assert_eq!(two.pulse.n_segments(), 16);
        assert!(fidelity(&spec, &two.pulse, &t).unwrap() > 1.0 - 1e-7);
    }
}
