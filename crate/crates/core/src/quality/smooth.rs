use nalgebra::{DMatrix, DVector};

use crate::error::{GeckoError, Result};
use crate::kernel::KernelBasis;
use crate::pulse::PulseParams;

/// `‖DΦ‖²` with implicit zero amplitudes before the first and after the last segment.
pub fn q_smooth(pulse: &PulseParams) -> f64 {
    let (l, kc) = (pulse.n_segments(), pulse.n_controls());
    let at = |i: isize, k: usize| -> f64 {
        if i < 0 || i as usize >= l {
            0.0
        } else {
            pulse.amplitude(i as usize, k)
        }
    };
    (0..kc)
        .map(|k| (0..=l as isize).map(|i| (at(i, k) - at(i - 1, k)).powi(2)).sum::<f64>())
        .sum()
}

/// `2DᵀDΦ`, row-major over the amplitudes.
pub fn grad_q_smooth(pulse: &PulseParams) -> Vec<f64> {
    let (l, kc) = (pulse.n_segments(), pulse.n_controls());
    let mut g = vec![0.0; l * kc];
    for i in 0..l {
        for k in 0..kc {
            let prev = if i > 0 { pulse.amplitude(i - 1, k) } else { 0.0 };
            let next = if i + 1 < l { pulse.amplitude(i + 1, k) } else { 0.0 };
            g[i * kc + k] = 2.0 * (2.0 * pulse.amplitude(i, k) - prev - next);
        }
    }
    g
}

/// Stacked difference operator acting on the full parameter vector
/// (the `Δt` column, if any, is zero).
pub fn difference_operator(pulse: &PulseParams) -> DMatrix<f64> {
    let (l, kc) = (pulse.n_segments(), pulse.n_controls());
    let mut d = DMatrix::zeros((l + 1) * kc, pulse.param_count());
    for k in 0..kc {
        for row in 0..=l {
            let r = k * (l + 1) + row;
            if row < l {
                d[(r, row * kc + k)] = 1.0;
            }
            if row > 0 {
                d[(r, (row - 1) * kc + k)] = -1.0;
            }
        }
    }
    d
}

/// `argmin_x ‖D(Φ + Zx)‖²`, minimum-norm among ties.
pub fn smooth_direct_solve(pulse: &PulseParams, kernel: &KernelBasis) -> Result<Vec<f64>> {
    let d = difference_operator(pulse);
    let c = DVector::zeros(d.nrows());
    quadratic_direct_solve(&d, &c, &pulse.to_vector(), kernel)
}

/// Minimum-norm minimizer of `‖A(θ + Zx) − c‖²` over `x`.
pub fn quadratic_direct_solve(
    a: &DMatrix<f64>,
    c: &DVector<f64>,
    theta: &[f64],
    kernel: &KernelBasis,
) -> Result<Vec<f64>> {
    let z = kernel.z();
    if a.ncols() != theta.len() || z.nrows() != theta.len() || a.nrows() != c.len() {
        return Err(GeckoError::input(format!(
            "dimension mismatch: operator {}x{}, parameters {}, kernel rows {}",
            a.nrows(),
            a.ncols(),
            theta.len(),
            z.nrows()
        )));
    }
    if z.ncols() == 0 {
        return Ok(Vec::new());
    }
    let m = a * z;
    let rhs = c - a * DVector::from_column_slice(theta);
    let svd = m.svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return Ok(vec![0.0; z.ncols()]);
    }
    let x = svd
        .solve(&rhs, 1e-12 * smax)
        .map_err(|e| GeckoError::Numerical(format!("least-squares solve: {e}")))?;
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{kernel_basis, pulse_jacobian, DEFAULT_KERNEL_TOL};
    use crate::pulse::HamiltonianSpec;
    use crate::restore::random_pulse;

    #[test]
    fn boundary_examples() {
        let z = PulseParams::zeros(5, 2, 0.1).unwrap();
        assert_eq!(q_smooth(&z), 0.0);
        let one = PulseParams::from_flat(vec![1.5], 1, 1, 0.1).unwrap();
        assert!((q_smooth(&one) - 2.0 * 1.5 * 1.5).abs() < 1e-15);
        let c = PulseParams::from_flat(vec![-0.7; 9], 9, 1, 0.1).unwrap();
        assert!((q_smooth(&c) - 2.0 * 0.49).abs() < 1e-14);
    }

    #[test]
    fn operator_and_gradient_agree() {
        let spec = HamiltonianSpec::tfim1(1.0);
        let p = random_pulse(&spec, 7, 0.2, 1.0, 3).unwrap().with_optimize_dt(true);
        let d = difference_operator(&p);
        let v = &d * DVector::from_vec(p.to_vector());
        assert!((v.norm_squared() - q_smooth(&p)).abs() < 1e-12);
        let g = grad_q_smooth(&p);
        let h = 1e-6;
        for j in 0..14 {
            let mut e = vec![0.0; 15];
            e[j] = h;
            let qp = q_smooth(&p.displaced(&e).unwrap());
            e[j] = -h;
            let qm = q_smooth(&p.displaced(&e).unwrap());
            assert!(((qp - qm) / (2.0 * h) - g[j]).abs() < 1e-7);
        }
    }

    #[test]
    fn direct_solve_never_increases() {
        let spec = HamiltonianSpec::tfim1(1.0);
        for seed in 0..5 {
            let p = random_pulse(&spec, 12, 0.2, 1.0, seed).unwrap();
            let k = kernel_basis(&pulse_jacobian(&spec, &p).unwrap(), DEFAULT_KERNEL_TOL).unwrap();
            let x = smooth_direct_solve(&p, &k).unwrap();
            let moved = p.displaced(&k.lift(&x).unwrap()).unwrap();
            assert!(q_smooth(&moved) <= q_smooth(&p) + 1e-12);
            // stationarity: Zᵀ∇Q vanishes at the minimizer
            let g = DVector::from_vec(grad_q_smooth(&moved));
            let zg = k.z().transpose() * g;
            assert!(zg.norm() < 1e-8 * (1.0 + q_smooth(&p)));
        }
    }
}
