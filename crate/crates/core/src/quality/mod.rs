//! Pulse-quality objectives `Q(Φ)` and their gradients.
//!
//! Every gradient returned by [`QualitySpec::gradient`] is laid out like
//! [`PulseParams::to_vector`]: row-major amplitudes, then `Δt` when it is a
//! parameter.

mod dst;
mod filter;
mod gaussian;
mod path;
mod robust;
mod smooth;

use nalgebra::{DMatrix, DVector};

pub use dst::{dst1_forward, dst1_inverse, mode_frequencies, sine_matrix};
pub use filter::{
    apply_filter, grad_q_filter, make_filter, power_spectrum, q_filter, FilterKind, FilterParams, FilterSpec,
};
pub use gaussian::gaussian_baseline;
pub use path::{grad_q_drift, grad_q_path, q_drift, q_path};
pub use robust::{grad_q_robust, offset_pulse, q_robust, worst_case, RobustSpec, MAX_GRID_POINTS};
pub use smooth::{difference_operator, grad_q_smooth, q_smooth, quadratic_direct_solve, smooth_direct_solve};

use crate::error::{GeckoError, Result};
use crate::pulse::{GateTarget, HamiltonianSpec, PulseParams};

#[derive(Clone, Debug, PartialEq)]
pub enum QualitySpec {
    Filter(FilterSpec),
    Smooth,
    Robust(RobustSpec),
    Path,
    Drift,
    Composite(Vec<(f64, QualitySpec)>),
}

impl QualitySpec {
    pub fn composite(terms: Vec<(f64, QualitySpec)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(GeckoError::input("composite quality needs at least one term"));
        }
        if terms.iter().any(|(w, _)| !(*w >= 0.0 && w.is_finite())) {
            return Err(GeckoError::input("composite weights must be nonnegative"));
        }
        if terms.iter().all(|(w, _)| *w == 0.0) {
            return Err(GeckoError::input("composite needs a positive weight"));
        }
        Ok(QualitySpec::Composite(terms))
    }

    pub fn name(&self) -> &'static str {
        match self {
            QualitySpec::Filter(_) => "filter",
            QualitySpec::Smooth => "smooth",
            QualitySpec::Robust(_) => "robust",
            QualitySpec::Path => "path",
            QualitySpec::Drift => "drift",
            QualitySpec::Composite(_) => "composite",
        }
    }

    pub fn value(&self, spec: &HamiltonianSpec, pulse: &PulseParams, target: &GateTarget) -> Result<f64> {
        match self {
            QualitySpec::Filter(fs) => q_filter(pulse, fs),
            QualitySpec::Smooth => Ok(q_smooth(pulse)),
            QualitySpec::Robust(rs) => q_robust(spec, pulse, target, rs),
            QualitySpec::Path => q_path(spec, pulse),
            QualitySpec::Drift => q_drift(pulse),
            QualitySpec::Composite(terms) => {
                validate_terms(terms)?;
                terms.iter().try_fold(0.0, |acc, (w, q)| {
                    Ok(if *w == 0.0 { acc } else { acc + w * q.value(spec, pulse, target)? })
                })
            }
        }
    }

    pub fn gradient(&self, spec: &HamiltonianSpec, pulse: &PulseParams, target: &GateTarget) -> Result<Vec<f64>> {
        let pad = |mut g: Vec<f64>| {
            g.resize(pulse.param_count(), 0.0);
            g
        };
        match self {
            QualitySpec::Filter(fs) => Ok(pad(grad_q_filter(pulse, fs)?)),
            QualitySpec::Smooth => Ok(pad(grad_q_smooth(pulse))),
            QualitySpec::Robust(rs) => grad_q_robust(spec, pulse, target, rs),
            QualitySpec::Path => grad_q_path(spec, pulse, pulse.optimize_dt()),
            QualitySpec::Drift => grad_q_drift(pulse),
            QualitySpec::Composite(terms) => {
                validate_terms(terms)?;
                let mut total = vec![0.0; pulse.param_count()];
                for (w, q) in terms.iter().filter(|(w, _)| *w > 0.0) {
                    for (t, g) in total.iter_mut().zip(q.gradient(spec, pulse, target)?) {
                        *t += w * g;
                    }
                }
                Ok(total)
            }
        }
    }

    /// `(A, c)` with `Q(θ) = ‖Aθ − c‖²` when the quality is quadratic in the
    /// parameters, `None` otherwise.
    pub fn quadratic_form(&self, pulse: &PulseParams) -> Result<Option<(DMatrix<f64>, DVector<f64>)>> {
        let p = pulse.param_count();
        match self {
            QualitySpec::Smooth => {
                let d = difference_operator(pulse);
                let rows = d.nrows();
                Ok(Some((d, DVector::zeros(rows))))
            }
            QualitySpec::Filter(fs) => {
                if fs.len() != pulse.n_segments() {
                    return Err(GeckoError::input("filter length does not match the pulse"));
                }
                let (l, kc) = (pulse.n_segments(), pulse.n_controls());
                let s = sine_matrix(l) * (2.0 / (l as f64 + 1.0));
                let mut a = DMatrix::zeros(l * kc, p);
                for k in 0..kc {
                    for n in 0..l {
                        let keep = 1.0 - fs.weights()[n];
                        for j in 0..l {
                            a[(k * l + n, j * kc + k)] = keep * s[(n, j)];
                        }
                    }
                }
                Ok(Some((a, DVector::zeros(l * kc))))
            }
            QualitySpec::Composite(terms) => {
                validate_terms(terms)?;
                let mut blocks = Vec::new();
                for (w, q) in terms.iter().filter(|(w, _)| *w > 0.0) {
                    match q.quadratic_form(pulse)? {
                        Some((a, c)) => blocks.push((a * w.sqrt(), c * w.sqrt())),
                        None => return Ok(None),
                    }
                }
                let rows: usize = blocks.iter().map(|(a, _)| a.nrows()).sum();
                let mut a = DMatrix::zeros(rows, p);
                let mut c = DVector::zeros(rows);
                let mut r = 0;
                for (ab, cb) in blocks {
                    let n = ab.nrows();
                    a.rows_mut(r, n).copy_from(&ab);
                    c.rows_mut(r, n).copy_from(&cb);
                    r += n;
                }
                Ok(Some((a, c)))
            }
            _ => Ok(None),
        }
    }
}

fn validate_terms(terms: &[(f64, QualitySpec)]) -> Result<()> {
    if terms.is_empty() {
        return Err(GeckoError::input("composite quality needs at least one term"));
    }
    if terms.iter().any(|(w, _)| !(*w >= 0.0 && w.is_finite())) {
        return Err(GeckoError::input("composite weights must be nonnegative"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::restore::random_pulse;

    fn fd(q: &QualitySpec, spec: &HamiltonianSpec, p: &PulseParams, t: &GateTarget) -> Vec<f64> {
        let h = 1e-6;
        (0..p.param_count())
            .map(|j| {
                let mut e = vec![0.0; p.param_count()];
                e[j] = h;
                let qp = q.value(spec, &p.displaced(&e).unwrap(), t).unwrap();
                e[j] = -h;
                let qm = q.value(spec, &p.displaced(&e).unwrap(), t).unwrap();
                (qp - qm) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn composite_gradient_is_linear() {
        let spec = HamiltonianSpec::tfim1(1.0);
        let t = GateTarget::cz();
        let fs = make_filter(FilterKind::Highpass, &FilterParams { cutoff: 0.8, ..Default::default() }, 8, 0.25).unwrap();
        let q = QualitySpec::composite(vec![(0.5, QualitySpec::Smooth), (2.0, QualitySpec::Filter(fs)), (0.3, QualitySpec::Path)]).unwrap();
        for seed in 0..5 {
            let p = random_pulse(&spec, 8, 0.25, 1.0, seed).unwrap().with_optimize_dt(true);
            let g = q.gradient(&spec, &p, &t).unwrap();
            for (a, b) in g.iter().zip(fd(&q, &spec, &p, &t)) {
                assert!((a - b).abs() < 1e-6 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn composite_degenerate_cases() {
        let spec = HamiltonianSpec::tfim1(1.0);
        let t = GateTarget::cz();
        let p = random_pulse(&spec, 5, 0.25, 1.0, 1).unwrap();
        let single = QualitySpec::composite(vec![(1.0, QualitySpec::Smooth)]).unwrap();
        assert_eq!(single.value(&spec, &p, &t).unwrap(), q_smooth(&p));
        assert_eq!(single.gradient(&spec, &p, &t).unwrap(), grad_q_smooth(&p));
        // the zero-weighted drift term would otherwise fail without a Δt parameter
        let masked = QualitySpec::composite(vec![(0.0, QualitySpec::Drift), (3.0, QualitySpec::Smooth)]).unwrap();
        assert!((masked.value(&spec, &p, &t).unwrap() - 3.0 * q_smooth(&p)).abs() < 1e-14);
        assert!(QualitySpec::composite(vec![]).is_err());
        assert!(QualitySpec::composite(vec![(-1.0, QualitySpec::Smooth)]).is_err());
        assert!(QualitySpec::composite(vec![(0.0, QualitySpec::Smooth)]).is_err());
    }

    #[test]
    fn quadratic_forms_reproduce_values() {
        let spec = HamiltonianSpec::tfim2(1.0);
        let t = GateTarget::cnot();
        let p = random_pulse(&spec, 10, 0.2, 1.0, 4).unwrap().with_optimize_dt(true);
        let fs = make_filter(FilterKind::Lowpass, &FilterParams { cutoff: 1.0, ..Default::default() }, 10, 0.2).unwrap();
        let theta = DVector::from_vec(p.to_vector());
        for q in [
            QualitySpec::Smooth,
            QualitySpec::Filter(fs.clone()),
            QualitySpec::composite(vec![(0.7, QualitySpec::Smooth), (1.3, QualitySpec::Filter(fs))]).unwrap(),
        ] {
            let (a, c) = q.quadratic_form(&p).unwrap().unwrap();
            let v = (&a * &theta - c).norm_squared();
            assert!((v - q.value(&spec, &p, &t).unwrap()).abs() < 1e-12);
        }
        assert!(QualitySpec::Path.quadratic_form(&p).unwrap().is_none());
    }
}
