//! Hamiltonian and pulse data model.
//!
//! A segment Hamiltonian is `H_l = Σ_d g_d F_d + Σ_k φ_{l,k} G_k` and the pulse
//! implements `U_G = U(φ_L) ⋯ U(φ_1)` with `U(φ_l) = exp(-i H_l Δt)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{GeckoError, Result};
use crate::operator::{max_abs, CMatrix, HermitianEigen, HermitianOperator, PauliBasis, PauliString};

/// A fixed Hamiltonian term `g_d F_d`.
#[derive(Clone, Debug)]
pub struct DriftTerm {
    pub pauli: PauliString,
    pub strength: f64,
}

/// A control channel: a real combination of Pauli strings sharing one
/// amplitude per segment (e.g. `XI + IX` for a simultaneous drive).
#[derive(Clone, Debug)]
pub struct ControlGenerator {
    terms: Vec<(PauliString, f64)>,
    matrix: CMatrix,
}

impl ControlGenerator {
    pub fn new(terms: Vec<(PauliString, f64)>) -> Result<Self> {
        let Some((first, _)) = terms.first() else {
            return Err(GeckoError::input("control generator needs at least one Pauli term"));
        };
        let dim = first.dim();
        let mut matrix = CMatrix::zeros(dim, dim);
        for (p, c) in &terms {
            if p.dim() != dim {
                return Err(GeckoError::input("control generator terms act on different qubit counts"));
            }
            if p.is_identity() {
                return Err(GeckoError::input("control generators must not contain the identity"));
            }
            if !c.is_finite() {
                return Err(GeckoError::input("control coefficient is not finite"));
            }
            matrix += p.matrix() * Complex64::from(*c);
        }
        if max_abs(&matrix) == 0.0 {
            return Err(GeckoError::input("control generator is identically zero"));
        }
        Ok(Self { terms, matrix })
    }

    pub fn single(pauli: PauliString) -> Result<Self> {
        Self::new(vec![(pauli, 1.0)])
    }

    pub fn terms(&self) -> &[(PauliString, f64)] {
        &self.terms
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn label(&self) -> String {
        self.terms
            .iter()
            .map(|(p, c)| if *c == 1.0 { p.label() } else { format!("{c}*{}", p.label()) })
            .collect::<Vec<_>>()
            .join("+")
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    n: usize,
    drift: Vec<DriftTerm>,
    controls: Vec<ControlGenerator>,
    drift_matrix: CMatrix,
    basis: PauliBasis,
}

impl HamiltonianSpec {
    pub fn new(n: usize, drift: Vec<DriftTerm>, controls: Vec<ControlGenerator>) -> Result<Self> {
        let basis = PauliBasis::new(n)?;
        let dim = basis.dim();
        if controls.is_empty() {
            return Err(GeckoError::input("at least one control generator is required"));
        }
        let mut drift_matrix = CMatrix::zeros(dim, dim);
        for term in &drift {
            if term.pauli.n_qubits() != n {
                return Err(GeckoError::input(format!(
                    "drift term {} does not act on {n} qubits",
                    term.pauli.label()
                )));
            }
            if term.pauli.is_identity() {
                return Err(GeckoError::input("drift terms must not be the identity"));
            }
            if !term.strength.is_finite() {
                return Err(GeckoError::input("drift strength is not finite"));
            }
            drift_matrix += term.pauli.matrix() * Complex64::from(term.strength);
        }
        if let Some(bad) = controls.iter().find(|c| c.matrix().nrows() != dim) {
            return Err(GeckoError::input(format!(
                "control {} does not act on {n} qubits",
                bad.label()
            )));
        }
        Ok(Self {
            n,
            drift,
            controls,
            drift_matrix,
            basis,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    /// Hilbert-space dimension N = 2ⁿ.
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    pub fn drift(&self) -> &[DriftTerm] {
        &self.drift
    }

    pub fn controls(&self) -> &[ControlGenerator] {
        &self.controls
    }

    pub fn basis(&self) -> &PauliBasis {
        &self.basis
    }

    /// `Σ_d g_d²`, the squared drift norm under `Tr{x†y}/N`.
    pub fn drift_norm_sq(&self) -> f64 {
        self.drift.iter().map(|d| d.strength * d.strength).sum()
    }

    pub fn segment_hamiltonian(&self, phi_l: &[f64]) -> Result<HermitianOperator> {
        if phi_l.len() != self.controls.len() {
            return Err(GeckoError::input(format!(
                "segment has {} amplitudes, spec has {} controls",
                phi_l.len(),
                self.controls.len()
            )));
        }
        Ok(HermitianOperator::new(self.hamiltonian_matrix(phi_l))
            .expect("sum of Hermitian terms with real coefficients is Hermitian"))
    }

    pub(crate) fn hamiltonian_matrix(&self, phi_l: &[f64]) -> CMatrix {
        let mut h = self.drift_matrix.clone();
        for (g, &a) in self.controls.iter().zip(phi_l) {
            h += g.matrix() * Complex64::from(a);
        }
        h
    }

    /// Ising pair with both local fields: `g ZZ + h₁ XI + h₂ IX`.
    pub fn tfim1(g: f64) -> Self {
        Self::ising(g, &["XI", "IX"])
    }

    /// Ising pair with `h₂ = 0`: a single control `XI`.
    pub fn tfim1_h2zero(g: f64) -> Self {
        Self::ising(g, &["XI"])
    }

    fn ising(g: f64, controls: &[&str]) -> Self {
        let zz = PauliString::new("ZZ").unwrap();
        let controls = controls
            .iter()
            .map(|l| ControlGenerator::single(PauliString::new(l).unwrap()).unwrap())
            .collect();
        Self::new(2, vec![DriftTerm { pauli: zz, strength: g }], controls).unwrap()
    }

    /// Simultaneous drive `g ZZ + h_x (XI + IX) + h_z (ZI + IZ) + ½ IZ`.
    pub fn tfim2(g: f64) -> Self {
        let p = |l: &str| PauliString::new(l).unwrap();
        let drift = vec![
            DriftTerm { pauli: p("ZZ"), strength: g },
            DriftTerm { pauli: p("IZ"), strength: 0.5 },
        ];
        let controls = vec![
            ControlGenerator::new(vec![(p("XI"), 1.0), (p("IX"), 1.0)]).unwrap(),
            ControlGenerator::new(vec![(p("ZI"), 1.0), (p("IZ"), 1.0)]).unwrap(),
        ];
        Self::new(2, drift, controls).unwrap()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelPreset {
    Tfim1,
    Tfim1H2Zero,
    Tfim2,
}

impl ModelPreset {
    pub fn build(self, g: f64) -> HamiltonianSpec {
        match self {
            ModelPreset::Tfim1 => HamiltonianSpec::tfim1(g),
            ModelPreset::Tfim1H2Zero => HamiltonianSpec::tfim1_h2zero(g),
            ModelPreset::Tfim2 => HamiltonianSpec::tfim2(g),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelPreset::Tfim1 => "tfim1",
            ModelPreset::Tfim1H2Zero => "tfim1_h2zero",
            ModelPreset::Tfim2 => "tfim2",
        }
    }
}

impl FromStr for ModelPreset {
    type Err = GeckoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tfim1" => Ok(ModelPreset::Tfim1),
            "tfim1_h2zero" => Ok(ModelPreset::Tfim1H2Zero),
            "tfim2" => Ok(ModelPreset::Tfim2),
            other => Err(GeckoError::input(format!(
                "unknown model preset {other:?} (expected tfim1, tfim1_h2zero or tfim2)"
            ))),
        }
    }
}

impl fmt::Display for ModelPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Piecewise-constant control amplitudes `Φ ∈ R^{L×K}` plus segment duration.
///
/// Parameter vectors are flattened segment-major (`l * K + k`) with the
/// duration appended last when `optimize_dt` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseParams {
    amplitudes: Vec<f64>,
    n_segments: usize,
    n_controls: usize,
    dt: f64,
    optimize_dt: bool,
}

impl PulseParams {
    pub fn new(rows: Vec<Vec<f64>>, dt: f64) -> Result<Self> {
        let n_segments = rows.len();
        let n_controls = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_controls) {
            return Err(GeckoError::input("all segments must have the same number of controls"));
        }
        Self::from_flat(rows.into_iter().flatten().collect(), n_segments, n_controls, dt)
    }

    pub fn from_flat(amplitudes: Vec<f64>, n_segments: usize, n_controls: usize, dt: f64) -> Result<Self> {
        if n_segments == 0 {
            return Err(GeckoError::input("pulse needs at least one segment"));
        }
        if n_controls == 0 {
            return Err(GeckoError::input("pulse needs at least one control channel"));
        }
        if amplitudes.len() != n_segments * n_controls {
            return Err(GeckoError::input(format!(
                "expected {} amplitudes, got {}",
                n_segments * n_controls,
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(GeckoError::input("pulse amplitudes must be finite"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(GeckoError::input(format!("segment duration must be positive, got {dt}")));
        }
        Ok(Self {
            amplitudes,
            n_segments,
            n_controls,
            dt,
            optimize_dt: false,
        })
    }

    pub fn zeros(n_segments: usize, n_controls: usize, dt: f64) -> Result<Self> {
        Self::from_flat(vec![0.0; n_segments * n_controls], n_segments, n_controls, dt)
    }

    pub fn with_optimize_dt(mut self, optimize_dt: bool) -> Self {
        self.optimize_dt = optimize_dt;
        self
    }

    pub fn n_segments(&self) -> usize {
        self.n_segments
    }

    pub fn n_controls(&self) -> usize {
        self.n_controls
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn optimize_dt(&self) -> bool {
        self.optimize_dt
    }

    /// Total duration `T = L Δt`.
    pub fn duration(&self) -> f64 {
        self.n_segments as f64 * self.dt
    }

    pub fn segment(&self, l: usize) -> &[f64] {
        &self.amplitudes[l * self.n_controls..(l + 1) * self.n_controls]
    }

    pub fn amplitude(&self, l: usize, k: usize) -> f64 {
        self.amplitudes[l * self.n_controls + k]
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Samples of one control channel across segments.
    pub fn channel(&self, k: usize) -> Vec<f64> {
        (0..self.n_segments).map(|l| self.amplitude(l, k)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.amplitudes.chunks(self.n_controls).map(<[f64]>::to_vec).collect()
    }

    pub fn max_abs_amplitude(&self) -> f64 {
        self.amplitudes.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Number of optimizable parameters `P = LK (+1)`.
    pub fn param_count(&self) -> usize {
        self.amplitudes.len() + usize::from(self.optimize_dt)
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = self.amplitudes.clone();
        if self.optimize_dt {
            v.push(self.dt);
        }
        v
    }

    /// New pulse with parameters `self + delta`; fails if the duration would
    /// become nonpositive.
    pub fn displaced(&self, delta: &[f64]) -> Result<Self> {
        if delta.len() != self.param_count() {
            return Err(GeckoError::input(format!(
                "displacement has {} entries, pulse has {} parameters",
                delta.len(),
                self.param_count()
            )));
        }
        let lk = self.amplitudes.len();
        let amplitudes = self.amplitudes.iter().zip(delta).map(|(a, d)| a + d).collect();
        let dt = if self.optimize_dt { self.dt + delta[lk] } else { self.dt };
        if !(dt > 0.0) {
            return Err(GeckoError::StepRejected { dt });
        }
        Ok(Self {
            amplitudes,
            n_segments: self.n_segments,
            n_controls: self.n_controls,
            dt,
            optimize_dt: self.optimize_dt,
        })
    }

    pub fn with_amplitudes(&self, amplitudes: Vec<f64>) -> Result<Self> {
        Ok(Self::from_flat(amplitudes, self.n_segments, self.n_controls, self.dt)?.with_optimize_dt(self.optimize_dt))
    }

    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Ok(Self::from_flat(self.amplitudes.clone(), self.n_segments, self.n_controls, dt)?
            .with_optimize_dt(self.optimize_dt))
    }

    pub(crate) fn check_against(&self, spec: &HamiltonianSpec) -> Result<()> {
        if self.n_controls != spec.n_controls() {
            return Err(GeckoError::input(format!(
                "pulse has {} control channels, Hamiltonian has {}",
                self.n_controls,
                spec.n_controls()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetName {
    Cz,
    Cnot,
    Custom,
}

impl TargetName {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetName::Cz => "CZ",
            TargetName::Cnot => "CNOT",
            TargetName::Custom => "custom",
        }
    }
}

#[derive(Clone, Debug)]
pub struct GateTarget {
    name: TargetName,
    matrix: CMatrix,
}

impl GateTarget {
    pub fn cz() -> Self {
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        Self {
            name: TargetName::Cz,
            matrix: CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![one, i, i, one])),
        }
    }

    pub fn cnot() -> Self {
        let mut m = CMatrix::zeros(4, 4);
        let one = Complex64::new(1.0, 0.0);
        m[(0, 0)] = one;
        m[(1, 1)] = one;
        m[(2, 3)] = one;
        m[(3, 2)] = one;
        Self {
            name: TargetName::Cnot,
            matrix: m,
        }
    }

    pub fn custom(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || !matrix.nrows().is_power_of_two() || matrix.nrows() < 2 {
            return Err(GeckoError::input("custom target must be a 2ⁿ x 2ⁿ matrix"));
        }
        let defect = max_abs(&(matrix.adjoint() * &matrix - CMatrix::identity(matrix.nrows(), matrix.nrows())));
        if !(defect < 1e-12) {
            return Err(GeckoError::input(format!(
                "custom target is not unitary: max |U†U - I| = {defect:e}"
            )));
        }
        Ok(Self {
            name: TargetName::Custom,
            matrix,
        })
    }

    pub fn name(&self) -> TargetName {
        self.name
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Named gate targets: `CZ` or `CNOT`.
pub fn gate_target(name: &str) -> Result<GateTarget> {
    match name.to_ascii_uppercase().as_str() {
        "CZ" => Ok(GateTarget::cz()),
        "CNOT" | "CX" => Ok(GateTarget::cnot()),
        _ => Err(GeckoError::input(format!("unknown gate target {name:?} (expected CZ or CNOT)"))),
    }
}

pub fn segment_unitary(spec: &HamiltonianSpec, phi_l: &[f64], dt: f64) -> Result<CMatrix> {
    let h = spec.segment_hamiltonian(phi_l)?;
    Ok(HermitianEigen::new(&h).expm(dt))
}

/// `U(φ_L) ⋯ U(φ_1)`: segment 1 acts first.
pub fn pulse_unitary(spec: &HamiltonianSpec, pulse: &PulseParams) -> Result<CMatrix> {
    pulse.check_against(spec)?;
    let mut u = CMatrix::identity(spec.dim(), spec.dim());
    for l in 0..pulse.n_segments() {
        u = segment_unitary(spec, pulse.segment(l), pulse.dt())? * u;
    }
    Ok(u)
}

/// `|Tr{U† V}| / N`.
pub fn unitary_fidelity(u: &CMatrix, target: &GateTarget) -> Result<f64> {
    if u.shape() != target.matrix().shape() {
        return Err(GeckoError::input(format!(
            "dimension mismatch: pulse unitary is {:?}, target is {:?}",
            u.shape(),
            target.matrix().shape()
        )));
    }
    let tr = crate::operator::trace_adjoint_product(u, target.matrix());
    Ok(tr.norm() / target.dim() as f64)
}

pub fn fidelity(spec: &HamiltonianSpec, pulse: &PulseParams, target: &GateTarget) -> Result<f64> {
    if spec.dim() != target.dim() {
        return Err(GeckoError::input(format!(
            "target acts on dimension {}, Hamiltonian on {}",
            target.dim(),
            spec.dim()
        )));
    }
    unitary_fidelity(&pulse_unitary(spec, pulse)?, target)
}

/// Splits every segment into `m` equal sub-segments with the same amplitudes.
/// The implemented unitary is unchanged.
pub fn refine_pulse(pulse: &PulseParams, m: usize) -> Result<PulseParams> {
    if m < 2 {
        return Err(GeckoError::input(format!("refinement factor must be at least 2, got {m}")));
    }
    let k = pulse.n_controls();
    let mut amplitudes = Vec::with_capacity(pulse.amplitudes().len() * m);
    for l in 0..pulse.n_segments() {
        for _ in 0..m {
            amplitudes.extend_from_slice(pulse.segment(l));
        }
    }
    Ok(PulseParams::from_flat(amplitudes, pulse.n_segments() * m, k, pulse.dt() / m as f64)?
        .with_optimize_dt(pulse.optimize_dt()))
}
