//! Dense complex-matrix primitives: Pauli strings, the Hermitian matrix
//! exponential `exp(-iHt)`, its directional derivative, and the projection
//! of left-translated tangent vectors onto the traceless Pauli basis of su(N).
//!
//! All exponentials go through one eigendecomposition `H = Q Λ Q†`, which
//! serves both `U = Q e^{-iΛt} Q†` and the derivative `∂U` in the same basis.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{GeckoError, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Practical qubit cap for dense operators.
pub const MAX_QUBITS: usize = 10;

#[cfg(test)]
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// For input basis state `b`, the single-qubit Pauli maps `|b⟩` to
    /// `phase · |b ^ flip⟩`.
    fn action(self, bit: usize) -> (usize, Complex64) {
        match self {
            Pauli::I => (0, ONE),
            Pauli::X => (1, ONE),
            // Y|0> = i|1>, Y|1> = -i|0>
            Pauli::Y => (1, if bit == 0 { I } else { -I }),
            Pauli::Z => (0, if bit == 0 { ONE } else { -ONE }),
        }
    }
}

/// A tensor product of single-qubit Paulis, qubit 1 being the leftmost
/// Kronecker factor (most significant bit of the basis index).
#[derive(Clone)]
pub struct PauliString {
    label: Vec<Pauli>,
    /// Row `r` has a single nonzero entry at column `perm[r]` with value `phase[r]`.
    perm: Vec<usize>,
    phase: Vec<Complex64>,
    matrix: CMatrix,
}

impl PauliString {
    pub fn new(label: &str) -> Result<Self> {
        let n = label.chars().count();
        if n == 0 {
            return Err(GeckoError::input("Pauli label must contain at least one qubit"));
        }
        if n > MAX_QUBITS {
            return Err(GeckoError::input(format!(
                "Pauli label {label:?} acts on {n} qubits; at most {MAX_QUBITS} are supported"
            )));
        }
        let paulis = label
            .chars()
            .map(|c| {
                Pauli::from_char(c).ok_or_else(|| {
                    GeckoError::input(format!("invalid character {c:?} in Pauli label {label:?}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_paulis(paulis))
    }

    pub fn from_paulis(label: Vec<Pauli>) -> Self {
        let n = label.len();
        let dim = 1usize << n;
        let mut perm = Vec::with_capacity(dim);
        let mut phase = Vec::with_capacity(dim);
        // Column c maps to row r = c ^ flip with the accumulated phase; the
        // matrix is Hermitian and a signed permutation, so store by row.
        for row in 0..dim {
            let mut col = row;
            let mut ph = ONE;
            for (q, p) in label.iter().enumerate() {
                let shift = n - 1 - q;
                let bit = (row >> shift) & 1;
                let (flip, _) = p.action(bit);
                col ^= flip << shift;
            }
            for (q, p) in label.iter().enumerate() {
                let shift = n - 1 - q;
                let in_bit = (col >> shift) & 1;
                let (_, f) = p.action(in_bit);
                ph *= f;
            }
            perm.push(col);
            phase.push(ph);
        }
        let mut matrix = CMatrix::zeros(dim, dim);
        for row in 0..dim {
            matrix[(row, perm[row])] = phase[row];
        }
        Self {
            label,
            perm,
            phase,
            matrix,
        }
    }

    pub fn label(&self) -> String {
        self.label.iter().map(|p| p.as_char()).collect()
    }

    pub fn paulis(&self) -> &[Pauli] {
        &self.label
    }

    pub fn n_qubits(&self) -> usize {
        self.label.len()
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn is_identity(&self) -> bool {
        self.label.iter().all(|&p| p == Pauli::I)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `Tr{P · M}` in O(N) using the signed-permutation structure.
    pub fn trace_product(&self, m: &CMatrix) -> Complex64 {
        self.perm
            .iter()
            .zip(&self.phase)
            .enumerate()
            .map(|(row, (&col, &ph))| ph * m[(col, row)])
            .sum()
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({})", self.label())
    }
}

impl PartialEq for PauliString {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label
    }
}

pub fn pauli_operator(label: &str) -> Result<PauliString> {
    PauliString::new(label)
}

/// The N²−1 non-identity Pauli strings on `n` qubits in lexicographic order
/// over the alphabet I < X < Y < Z. This ordering indexes [`AlgebraVector`].
#[derive(Clone, Debug)]
pub struct PauliBasis {
    n: usize,
    strings: Vec<PauliString>,
}

impl PauliBasis {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(GeckoError::input(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n}"
            )));
        }
        let count = 1usize << (2 * n);
        let strings = (1..count)
            .map(|mut idx| {
                let mut label = vec![Pauli::I; n];
                for q in (0..n).rev() {
                    label[q] = Pauli::ALL[idx & 3];
                    idx >>= 2;
                }
                PauliString::from_paulis(label)
            })
            .collect();
        Ok(Self { n, strings })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn strings(&self) -> &[PauliString] {
        &self.strings
    }

    /// Rebuilds `a₀ I + Σ a_j G_j`; inverse of [`algebra_project`] up to the
    /// discarded identity coefficient.
    pub fn reconstruct(&self, identity_coeff: f64, v: &AlgebraVector) -> CMatrix {
        let dim = self.dim();
        let mut m = CMatrix::identity(dim, dim) * Complex64::from(identity_coeff);
        for (g, &a) in self.strings.iter().zip(v.as_slice()) {
            m += g.matrix() * Complex64::from(a);
        }
        m
    }
}

/// Real coordinates of a traceless anti-Hermitian matrix in the Pauli basis.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraVector(Vec<f64>);

impl AlgebraVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

#[derive(Clone, Debug)]
pub struct HermitianOperator(CMatrix);

impl HermitianOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(GeckoError::input(format!(
                "Hermitian operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(GeckoError::input("Hermitian operator has non-finite entries"));
        }
        let scale = max_abs(&m);
        let defect = hermiticity_defect(&m);
        if defect > 1e-12 * scale {
            return Err(GeckoError::input(format!(
                "matrix is not Hermitian: max |M - M†| = {defect:e}"
            )));
        }
        Ok(Self(m))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

impl From<&PauliString> for HermitianOperator {
    fn from(p: &PauliString) -> Self {
        Self(p.matrix().clone())
    }
}

/// Spectral factorization `H = Q Λ Q†` of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    values: Vec<f64>,
    vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(h: &HermitianOperator) -> Self {
        // Exact symmetrization keeps the solver on the Hermitian path.
        let m = h.matrix();
        let sym = (m + m.adjoint()) * Complex64::from(0.5);
        let eig = SymmetricEigen::new(sym);
        Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.vectors
    }

    fn phases(&self, t: f64) -> Vec<Complex64> {
        self.values
            .iter()
            .map(|&l| Complex64::from_polar(1.0, -l * t))
            .collect()
    }

    /// `exp(-i H t)`.
    pub fn expm(&self, t: f64) -> CMatrix {
        let phases = self.phases(t);
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        scaled * self.vectors.adjoint()
    }

    /// `∂/∂ε exp(-i(H + εV)t)` at ε = 0 (Daleckii–Krein).
    pub fn expm_derivative(&self, v: &CMatrix, t: f64) -> CMatrix {
        let q = &self.vectors;
        let mut vb = q.adjoint() * v * q;
        let phases = self.phases(t);
        let dim = self.values.len();
        for a in 0..dim {
            for b in 0..dim {
                let (la, lb) = (self.values[a], self.values[b]);
                let kernel = if (la - lb).abs() < 1e-12 * la.abs().max(1.0) {
                    Complex64::new(0.0, -t) * phases[a]
                } else {
                    (phases[a] - phases[b]) / (la - lb)
                };
                vb[(a, b)] *= kernel;
            }
        }
        q * vb * q.adjoint()
    }
}

/// `exp(-i H t)` via eigendecomposition.
pub fn hermitian_expm(h: &HermitianOperator, t: f64) -> CMatrix {
    HermitianEigen::new(h).expm(t)
}

/// Directional derivative of `exp(-i H t)` along the Hermitian direction `v`.
pub fn expm_directional_derivative(
    h: &HermitianOperator,
    v: &HermitianOperator,
    t: f64,
) -> Result<CMatrix> {
    if h.dim() != v.dim() {
        return Err(GeckoError::input(format!(
            "dimension mismatch: H is {}x{}, V is {}x{}",
            h.dim(),
            h.dim(),
            v.dim(),
            v.dim()
        )));
    }
    Ok(HermitianEigen::new(h).expm_derivative(v.matrix(), t))
}

/// Coordinates `a_j = Re Tr{G_j · iΩ} / N` of an anti-Hermitian `Ω` in the
/// non-identity Pauli basis. The identity (global phase) coefficient is dropped.
pub fn algebra_project(omega: &CMatrix, basis: &PauliBasis) -> Result<AlgebraVector> {
    let dim = basis.dim();
    if omega.nrows() != dim || omega.ncols() != dim {
        return Err(GeckoError::input(format!(
            "expected a {dim}x{dim} matrix, got {}x{}",
            omega.nrows(),
            omega.ncols()
        )));
    }
    let defect = max_abs(&(omega + omega.adjoint()));
    if defect > 1e-8 * max_abs(omega) {
        return Err(GeckoError::input(format!(
            "matrix is not anti-Hermitian: max |Ω + Ω†| = {defect:e}"
        )));
    }
    Ok(project_unchecked(omega, basis))
}

pub(crate) fn project_unchecked(omega: &CMatrix, basis: &PauliBasis) -> AlgebraVector {
    let n = basis.dim() as f64;
    // Re Tr{G · iΩ} = -Im Tr{G · Ω}
    AlgebraVector(
        basis
            .strings()
            .iter()
            .map(|g| -g.trace_product(omega).im / n)
            .collect(),
    )
}

/// Hilbert–Schmidt metric `Re Tr{x† y} / N`.
pub fn hs_metric(x: &CMatrix, y: &CMatrix) -> Result<f64> {
    if x.shape() != y.shape() {
        return Err(GeckoError::input(format!(
            "dimension mismatch: {:?} vs {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let n = x.nrows() as f64;
    let tr: Complex64 = x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum();
    Ok(tr.re / n)
}

/// `Tr{A† B}` without forming the product.
pub(crate) fn trace_adjoint_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}
