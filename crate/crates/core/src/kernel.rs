//! Real Jacobian of the pulse unitary, its kernel, and kernel-space steps.
//!
//! Columns are left-translated: for parameter θ_j the column is the su(N)
//! coordinate vector of `U_G† ∂U_G/∂θ_j`. With prefixes `P_l = U_{l-1}⋯U_1`
//! this is `P_l† (U_l† ∂U_l) P_l`, so only prefix products are needed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{GeckoError, Result};
use crate::operator::{project_unchecked, CMatrix, HermitianEigen};
use crate::pulse::{unitary_fidelity, GateTarget, HamiltonianSpec, PulseParams};

/// Segment factorizations and prefix products of one pulse.
pub struct PulseEvolution {
    eigen: Vec<HermitianEigen>,
    hamiltonians: Vec<CMatrix>,
    segment_unitaries: Vec<CMatrix>,
    /// `prefix[l] = U_l ⋯ U_1` (zero-based: `prefix[0] = I`, `prefix[L] = U_G`).
    prefix: Vec<CMatrix>,
}

impl PulseEvolution {
    pub fn new(spec: &HamiltonianSpec, pulse: &PulseParams) -> Result<Self> {
        pulse.check_against(spec)?;
        let dim = spec.dim();
        let n = pulse.n_segments();
        let mut eigen = Vec::with_capacity(n);
        let mut hamiltonians = Vec::with_capacity(n);
        let mut segment_unitaries = Vec::with_capacity(n);
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(CMatrix::identity(dim, dim));
        for l in 0..n {
            let h = spec.segment_hamiltonian(pulse.segment(l))?;
            let eig = HermitianEigen::new(&h);
            let u = eig.expm(pulse.dt());
            prefix.push(&u * &prefix[l]);
            hamiltonians.push(h.into_matrix());
            segment_unitaries.push(u);
            eigen.push(eig);
        }
        Ok(Self {
            eigen,
            hamiltonians,
            segment_unitaries,
            prefix,
        })
    }

    pub fn unitary(&self) -> &CMatrix {
        self.prefix.last().expect("prefix always holds the identity")
    }

    /// `U_G† ∂U_G/∂θ_j` for every parameter, in parameter order.
    pub fn left_translated_derivatives(&self, spec: &HamiltonianSpec, pulse: &PulseParams) -> Vec<CMatrix> {
        let dt = pulse.dt();
        let mut out = Vec::with_capacity(pulse.param_count());
        for l in 0..pulse.n_segments() {
            let p = &self.prefix[l];
            let p_adj = p.adjoint();
            let u_adj = self.segment_unitaries[l].adjoint();
            for g in spec.controls() {
                let d = self.eigen[l].expm_derivative(g.matrix(), dt);
                out.push(&p_adj * (&u_adj * d) * p);
            }
        }
        if pulse.optimize_dt() {
            // ∂U_l/∂Δt = -i H_l U_l, so U_l† ∂U_l = -i H_l.
            let dim = spec.dim();
            let mut omega = CMatrix::zeros(dim, dim);
            for l in 0..pulse.n_segments() {
                let p = &self.prefix[l];
                omega += p.adjoint() * &self.hamiltonians[l] * p;
            }
            out.push(omega * Complex64::new(0.0, -1.0));
        }
        out
    }
}

/// Real `(N²−1) × P` Jacobian in su(N) coordinates.
#[derive(Clone, Debug)]
pub struct JacobianMatrix(DMatrix<f64>);

impl JacobianMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n_params(&self) -> usize {
        self.0.ncols()
    }
}

pub fn pulse_jacobian(spec: &HamiltonianSpec, pulse: &PulseParams) -> Result<JacobianMatrix> {
    let evo = PulseEvolution::new(spec, pulse)?;
    Ok(jacobian_from(&evo, spec, pulse))
}

pub(crate) fn jacobian_from(evo: &PulseEvolution, spec: &HamiltonianSpec, pulse: &PulseParams) -> JacobianMatrix {
    jacobian_from_derivatives(&evo.left_translated_derivatives(spec, pulse), spec)
}

pub(crate) fn jacobian_from_derivatives(omegas: &[CMatrix], spec: &HamiltonianSpec) -> JacobianMatrix {
    let basis = spec.basis();
    let mut j = DMatrix::zeros(basis.len(), omegas.len());
    for (c, omega) in omegas.iter().enumerate() {
        let coords = project_unchecked(omega, basis);
        j.column_mut(c).copy_from_slice(coords.as_slice());
    }
    JacobianMatrix(j)
}

/// Orthonormal basis `Z` of `ker(J)`.
#[derive(Clone, Debug)]
pub struct KernelBasis {
    z: DMatrix<f64>,
    singular_values: Vec<f64>,
    tol: f64,
}

impl KernelBasis {
    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    /// Kernel dimension R.
    pub fn dim(&self) -> usize {
        self.z.ncols()
    }

    pub fn n_params(&self) -> usize {
        self.z.nrows()
    }

    pub fn rank(&self) -> usize {
        self.n_params() - self.dim()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Absolute threshold below which singular values count as zero.
    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `Z x` as a parameter-space vector.
    pub fn lift(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(GeckoError::input(format!(
                "kernel coordinates have length {}, kernel dimension is {}",
                x.len(),
                self.dim()
            )));
        }
        Ok((&self.z * DVector::from_column_slice(x)).as_slice().to_vec())
    }
}

pub const DEFAULT_KERNEL_TOL: f64 = 1e-10;

/// Kernel of `J` from its SVD: right-singular directions with
/// `σ ≤ tol_rel · σ_max`, completed to an orthonormal basis of the complement
/// of the retained row space.
pub fn kernel_basis(j: &JacobianMatrix, tol_rel: f64) -> Result<KernelBasis> {
    let m = j.matrix();
    let p = m.ncols();
    if m.iter().any(|x| !x.is_finite()) {
        return Err(GeckoError::Numerical("Jacobian has non-finite entries".into()));
    }
    if !(tol_rel >= 0.0) {
        return Err(GeckoError::input("kernel tolerance must be nonnegative"));
    }
    let svd = nalgebra::SVD::try_new(m.clone(), false, true, f64::EPSILON, 10_000)
        .ok_or_else(|| GeckoError::Numerical("SVD of the Jacobian did not converge".into()))?;
    let mut singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    let sigma_max = singular_values.iter().copied().fold(0.0, f64::max);
    let tol = tol_rel * sigma_max;
    if sigma_max == 0.0 {
        singular_values.sort_by(|a, b| b.total_cmp(a));
        return Ok(KernelBasis {
            z: DMatrix::identity(p, p),
            singular_values,
            tol,
        });
    }
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let kept: Vec<usize> = (0..singular_values.len()).filter(|&i| singular_values[i] > tol).collect();
    let rank = kept.len();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    if rank == p {
        return Ok(KernelBasis {
            z: DMatrix::zeros(p, 0),
            singular_values,
            tol,
        });
    }
    // Householder QR of [V_r | I]: the leading `rank` columns of Q span the
    // row space, the remaining ones its orthogonal complement.
    let mut augmented = DMatrix::zeros(p, rank + p);
    for (c, &i) in kept.iter().enumerate() {
        augmented.column_mut(c).copy_from(&v_t.row(i).transpose());
    }
    for i in 0..p {
        augmented[(i, rank + i)] = 1.0;
    }
    let q = augmented.qr().q();
    let z = q.columns(rank, p - rank).into_owned();
    Ok(KernelBasis {
        z,
        singular_values,
        tol,
    })
}

/// `Δx = −Zᵀ ∇Q`, the least-squares minimizer of `‖Z x + ∇Q‖²`.
pub fn project_gradient(kernel: &KernelBasis, grad_q: &[f64]) -> Result<Vec<f64>> {
    if grad_q.len() != kernel.n_params() {
        return Err(GeckoError::input(format!(
            "gradient has length {}, kernel basis has {} rows",
            grad_q.len(),
            kernel.n_params()
        )));
    }
    let g = DVector::from_column_slice(grad_q);
    Ok((kernel.z().tr_mul(&g) * -1.0).as_slice().to_vec())
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub pulse: PulseParams,
    /// Applied parameter displacement `ΔΦ`.
    pub delta: Vec<f64>,
    pub step_norm: f64,
    pub fidelity: f64,
}

impl StepResult {
    /// First-order change `∇Q · ΔΦ`.
    pub fn predicted_change(&self, grad_q: &[f64]) -> f64 {
        self.delta.iter().zip(grad_q).map(|(d, g)| d * g).sum()
    }
}

/// `Φ ← Φ + s Z Δx / ‖Z Δx‖`.
pub fn take_step(
    spec: &HamiltonianSpec,
    pulse: &PulseParams,
    target: &GateTarget,
    kernel: &KernelBasis,
    dx: &[f64],
    s: f64,
) -> Result<StepResult> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(GeckoError::input(format!("step size must be positive, got {s}")));
    }
    let direction = kernel.lift(dx)?;
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(GeckoError::DegenerateStep);
    }
    let delta: Vec<f64> = direction.iter().map(|x| s * x / norm).collect();
    let new_pulse = pulse.displaced(&delta)?;
    let fidelity = unitary_fidelity(&PulseEvolution::new(spec, &new_pulse)?.unitary().clone(), target)?;
    let step_norm = delta.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(StepResult {
        pulse: new_pulse,
        delta,
        step_norm,
        fidelity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{max_abs, pauli_operator, PauliBasis};
    use crate::pulse::{pulse_unitary, ControlGenerator, HamiltonianSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pulse(rng: &mut ChaCha8Rng, l: usize, k: usize, dt: f64) -> PulseParams {
        let amps = (0..l * k).map(|_| rng.random_range(-1.0..1.0)).collect();
        PulseParams::from_flat(amps, l, k, dt).unwrap()
    }

    /// Finite-difference Jacobian built only from `pulse_unitary`.
    fn fd_jacobian(spec: &HamiltonianSpec, pulse: &PulseParams, h: f64) -> DMatrix<f64> {
        let basis = PauliBasis::new(spec.n_qubits()).unwrap();
        let u = pulse_unitary(spec, pulse).unwrap();
        let p = pulse.param_count();
        let mut out = DMatrix::zeros(basis.len(), p);
        for j in 0..p {
            let mut e = vec![0.0; p];
            e[j] = h;
            let up = pulse_unitary(spec, &pulse.displaced(&e).unwrap()).unwrap();
            e[j] = -h;
            let um = pulse_unitary(spec, &pulse.displaced(&e).unwrap()).unwrap();
            let du = (up - um) * Complex64::from(0.5 / h);
            let omega = u.adjoint() * du;
            for (i, g) in basis.strings().iter().enumerate() {
                out[(i, j)] = -g.trace_product(&omega).im / basis.dim() as f64;
            }
        }
        out
    }

    #[test]
    fn single_commuting_segment() {
        let spec = HamiltonianSpec::new(
            2,
            vec![],
            vec![ControlGenerator::single(pauli_operator("XI").unwrap()).unwrap()],
        )
        .unwrap();
        let dt = 0.7;
        let pulse = PulseParams::new(vec![vec![0.4]], dt).unwrap();
        let j = pulse_jacobian(&spec, &pulse).unwrap();
        // column = project(-i dt XI) = +dt e_XI, since project(-i G) = e_G
        let idx = spec.basis().strings().iter().position(|g| g.label() == "XI").unwrap();
        for i in 0..15 {
            let want = if i == idx { dt } else { 0.0 };
            assert!((j.matrix()[(i, 0)] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn column_count() {
        let spec = HamiltonianSpec::tfim1_h2zero(1.0);
        let pulse = PulseParams::zeros(20, 1, 1.0).unwrap();
        assert_eq!(pulse_jacobian(&spec, &pulse).unwrap().n_params(), 20);
        let pulse = pulse.with_optimize_dt(true);
        assert_eq!(pulse_jacobian(&spec, &pulse).unwrap().n_params(), 21);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (spec, k) in [
            (HamiltonianSpec::tfim1_h2zero(1.0), 1),
            (HamiltonianSpec::tfim1(1.0), 2),
            (HamiltonianSpec::tfim2(1.0), 2),
        ] {
            for trial in 0..20 {
                let pulse = random_pulse(&mut rng, 5, k, 0.6).with_optimize_dt(trial % 2 == 0);
                let j = pulse_jacobian(&spec, &pulse).unwrap();
                let fd = fd_jacobian(&spec, &pulse, 1e-6);
                for c in 0..j.n_params() {
                    let col = j.matrix().column(c);
                    let fcol = fd.column(c);
                    let err = (col - fcol).amax();
                    assert!(err < 1e-5 * fcol.amax().max(1.0), "column {c}: {err}");
                }
            }
        }
    }

    #[test]
    fn zero_jacobian_gives_full_kernel() {
        let j = JacobianMatrix(DMatrix::zeros(15, 6));
        let k = kernel_basis(&j, 1e-10).unwrap();
        assert_eq!(k.dim(), 6);
        assert_eq!(k.z(), &DMatrix::<f64>::identity(6, 6));
    }

    #[test]
    fn kernel_is_orthonormal_and_annihilated() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = HamiltonianSpec::tfim1(1.0);
        for _ in 0..10 {
            let pulse = random_pulse(&mut rng, 12, 2, 0.9);
            let j = pulse_jacobian(&spec, &pulse).unwrap();
            let k = kernel_basis(&j, DEFAULT_KERNEL_TOL).unwrap();
            let z = k.z();
            let gram = z.transpose() * z - DMatrix::identity(k.dim(), k.dim());
            assert!(gram.amax() < 1e-10);
            assert!((j.matrix() * z).amax() < 10.0 * k.tol().max(1e-15));
            // rank-nullity with the same threshold
            let rank = k.singular_values().iter().filter(|&&s| s > k.tol()).count();
            assert_eq!(rank + k.dim(), pulse.param_count());
            assert!(k.dim() >= 24 - 15);
        }
    }

    #[test]
    fn full_rank_jacobian_has_empty_kernel() {
        let j = JacobianMatrix(DMatrix::identity(3, 3));
        let k = kernel_basis(&j, 1e-10).unwrap();
        assert_eq!(k.dim(), 0);
    }

    #[test]
    fn projection_is_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let spec = HamiltonianSpec::tfim1(1.0);
        let pulse = random_pulse(&mut rng, 10, 2, 1.0);
        let k = kernel_basis(&pulse_jacobian(&spec, &pulse).unwrap(), DEFAULT_KERNEL_TOL).unwrap();
        let zero = project_gradient(&k, &vec![0.0; 20]).unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));

        let v: Vec<f64> = (0..k.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = k.lift(&v).unwrap();
        let dx = project_gradient(&k, &g).unwrap();
        for (a, b) in dx.iter().zip(&v) {
            assert!((a + b).abs() < 1e-12);
        }

        // normal equations (ZᵀZ) x = -Zᵀ g solved by LU
        let g: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dx = project_gradient(&k, &g).unwrap();
        let z = k.z();
        let gram = z.transpose() * z;
        let rhs = -(z.transpose() * DVector::from_vec(g));
        let oracle = gram.lu().solve(&rhs).unwrap();
        for (a, b) in dx.iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(project_gradient(&k, &[1.0]).is_err());
    }

    #[test]
    fn step_has_requested_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let spec = HamiltonianSpec::tfim1(1.0);
        let target = GateTarget::cz();
        let pulse = random_pulse(&mut rng, 10, 2, 1.0);
        let k = kernel_basis(&pulse_jacobian(&spec, &pulse).unwrap(), DEFAULT_KERNEL_TOL).unwrap();
        let dx: Vec<f64> = (0..k.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let step = take_step(&spec, &pulse, &target, &k, &dx, 0.05).unwrap();
        assert!((step.step_norm - 0.05).abs() < 1e-12);
        let zero = vec![0.0; k.dim()];
        assert!(matches!(
            take_step(&spec, &pulse, &target, &k, &zero, 0.05),
            Err(GeckoError::DegenerateStep)
        ));
    }

    #[test]
    fn kernel_step_moves_unitary_only_at_second_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let spec = HamiltonianSpec::tfim1(1.0);
        let target = GateTarget::cz();
        let pulse = random_pulse(&mut rng, 10, 2, 1.0);
        let u0 = pulse_unitary(&spec, &pulse).unwrap();
        let k = kernel_basis(&pulse_jacobian(&spec, &pulse).unwrap(), DEFAULT_KERNEL_TOL).unwrap();
        let dx: Vec<f64> = (0..k.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        // distance modulo global phase
        let dist = |s: f64| {
            let step = take_step(&spec, &pulse, &target, &k, &dx, s).unwrap();
            let u = pulse_unitary(&spec, &step.pulse).unwrap();
            let tr = (u0.adjoint() * &u).trace();
            let phase = tr / tr.norm();
            max_abs(&(u - &u0 * phase))
        };
        let (a, b) = (dist(1e-3), dist(1e-4));
        let slope = (a / b).log10();
        assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
    }
}
