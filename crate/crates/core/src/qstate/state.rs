//! Pure states, density matrices and the named-state catalogue.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::eigen::{eigh, HERMITIAN_TOL};
use super::matrix::{ComplexMatrix, ONE, ZERO};
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;

/// Normalized n-qubit state vector; qubit 1 is the most significant bit of the basis index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PureStateDoc", into = "PureStateDoc")]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct PureStateDoc {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl TryFrom<PureStateDoc> for PureState {
    type Error = Error;

    fn try_from(doc: PureStateDoc) -> Result<Self> {
        PureState::new(doc.n, doc.amplitudes)
    }
}

impl From<PureState> for PureStateDoc {
    fn from(s: PureState) -> Self {
        PureStateDoc {
            n: s.n_qubits,
            amplitudes: s.amplitudes,
        }
    }
}

impl PureState {
    /// Validates length 2ⁿ and unit norm.
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::BadLength {
                expected: 1 << n_qubits,
                got: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(PureState { n_qubits, amplitudes })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(n_qubits: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::new(n_qubits, amplitudes)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits,
            matrix: ComplexMatrix::outer(&self.amplitudes),
            normalized: true,
        }
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Product state |self⟩⊗|other⟩.
    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut amps = Vec::with_capacity(self.amplitudes.len() * other.amplitudes.len());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amps.push(a * b);
            }
        }
        PureState {
            n_qubits: self.n_qubits + other.n_qubits,
            amplitudes: amps,
        }
    }
}

/// n-qubit density matrix.
///
/// `normalized` is cleared by local filtering; such matrices are Hermitian and
/// positive but have a trace below (or above) one until renormalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityDoc", into = "DensityDoc")]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
    normalized: bool,
}

#[derive(Serialize, Deserialize)]
struct DensityDoc {
    n: usize,
    matrix: ComplexMatrix,
}

impl TryFrom<DensityDoc> for DensityMatrix {
    type Error = Error;

    fn try_from(doc: DensityDoc) -> Result<Self> {
        DensityMatrix::new(doc.n, doc.matrix)
    }
}

impl From<DensityMatrix> for DensityDoc {
    fn from(d: DensityMatrix) -> Self {
        DensityDoc {
            n: d.n_qubits,
            matrix: d.matrix,
        }
    }
}

impl DensityMatrix {
    /// A physical state: Hermitian, positive semidefinite, unit trace.
    pub fn new(n_qubits: usize, matrix: ComplexMatrix) -> Result<Self> {
        let rho = Self::unnormalized(n_qubits, matrix)?;
        let (vals, _) = eigh(&rho.matrix)?;
        if let Some(&lowest) = vals.first() {
            if lowest < -PSD_TOL {
                return Err(Error::NotPositiveSemidefinite(lowest));
            }
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotNormalized(tr));
        }
        Ok(DensityMatrix {
            normalized: true,
            ..rho
        })
    }

    /// Hermitian operator with the right dimension; trace and positivity unchecked.
    pub fn unnormalized(n_qubits: usize, matrix: ComplexMatrix) -> Result<Self> {
        check_qubits(n_qubits)?;
        if matrix.dim() != 1 << n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "{n_qubits} qubits need a {0}x{0} matrix, got {1}x{1}",
                1 << n_qubits,
                matrix.dim()
            )));
        }
        let residual = matrix.hermitian_residual();
        if residual > HERMITIAN_TOL {
            return Err(Error::NonHermitianInput(residual));
        }
        Ok(DensityMatrix {
            n_qubits,
            matrix,
            normalized: false,
        })
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let d = 1 << n_qubits;
        Ok(DensityMatrix {
            n_qubits,
            matrix: ComplexMatrix::identity(d).scale_real(1.0 / d as f64),
            normalized: true,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Tr(ρ²)
    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    /// Divides by the trace and sets the normalized flag.
    pub fn renormalized(&self) -> Result<Self> {
        let tr = self.trace();
        if tr <= 1e-12 {
            return Err(Error::EnsembleAnnihilated(tr));
        }
        Ok(DensityMatrix {
            n_qubits: self.n_qubits,
            matrix: self.matrix.scale_real(1.0 / tr),
            normalized: true,
        })
    }

    /// ρ_self ⊗ ρ_other
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits + other.n_qubits,
            matrix: super::matrix::kron(&self.matrix, &other.matrix),
            normalized: self.normalized && other.normalized,
        }
    }

    /// Convex mixture Σ wₖ ρₖ; all parts must share the qubit count.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let (_, first) = parts.first().ok_or(Error::BadLength { expected: 1, got: 0 })?;
        let n = first.n_qubits;
        let mut acc = ComplexMatrix::zeros(first.dim());
        for (w, rho) in parts {
            if rho.n_qubits != n {
                return Err(Error::DimensionMismatch("mixture of different qubit counts".into()));
            }
            acc = &acc + &rho.matrix.scale_real(*w);
        }
        Self::new(n, acc)
    }

    /// Dominant eigenvector when the state is pure to within `tol` in purity.
    pub fn as_pure(&self, tol: f64) -> Option<PureState> {
        if !self.normalized || (self.purity() - 1.0).abs() > tol {
            return None;
        }
        let (vals, vecs) = eigh(&self.matrix).ok()?;
        let top = vals.len() - 1;
        let amps: Vec<Complex64> = (0..self.dim()).map(|r| vecs[(r, top)]).collect();
        // Fix the global phase so the largest amplitude is real and positive.
        let pivot = amps
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap_or(ONE);
        let phase = pivot.conj() / pivot.norm();
        PureState::normalized(self.n_qubits, amps.into_iter().map(|a| a * phase).collect()).ok()
    }

    pub(crate) fn with_matrix(&self, matrix: ComplexMatrix, normalized: bool) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits,
            matrix,
            normalized,
        }
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > 10 {
        return Err(Error::BadSubsystem(format!("qubit count {n} outside 1..=10")));
    }
    Ok(())
}

/// Reduced state on the qubits in `keep` (1-based, any order; duplicates rejected).
/// The kept qubits retain their relative order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    if keep.is_empty() {
        return Err(Error::BadSubsystem("no qubits kept".into()));
    }
    if keep.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::BadSubsystem(format!("duplicate qubit in {keep:?}")));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k == 0 || k > n) {
        return Err(Error::BadSubsystem(format!("qubit {bad} outside 1..={n}")));
    }
    let traced: Vec<usize> = (1..=n).filter(|q| !keep.contains(q)).collect();
    // Bit position of qubit q (1-based) inside a basis index.
    let bit = |q: usize| n - q;
    let spread = |sub: usize, qubits: &[usize]| -> usize {
        let m = qubits.len();
        qubits
            .iter()
            .enumerate()
            .filter(|(k, _)| sub >> (m - 1 - k) & 1 == 1)
            .fold(0, |acc, (_, &q)| acc | 1 << bit(q))
    };
    let dk = 1 << keep.len();
    let dt = 1 << traced.len();
    let kept_idx: Vec<usize> = (0..dk).map(|s| spread(s, &keep)).collect();
    let traced_idx: Vec<usize> = (0..dt).map(|s| spread(s, &traced)).collect();

    let m = rho.matrix();
    let mut out = ComplexMatrix::zeros(dk);
    for (i, &ki) in kept_idx.iter().enumerate() {
        for (j, &kj) in kept_idx.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &traced_idx {
                acc += m[(ki | t, kj | t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(DensityMatrix {
        n_qubits: keep.len(),
        matrix: out,
        normalized: rho.is_normalized(),
    })
}

/// The catalogue of named states.
#[derive(Debug, Clone, PartialEq)]
pub enum NamedState {
    BellPhiPlus,
    BellPhiMinus,
    BellPsiPlus,
    BellPsiMinus,
    Ghz(usize),
    W(usize),
    /// Computational basis state, leftmost character is qubit 1.
    Basis(String),
    /// cos θ|00⟩ + sin θ|11⟩
    SchmidtPair(f64),
}

pub fn named_state(name: &NamedState) -> Result<PureState> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = |x: f64| Complex64::new(x, 0.0);
    let two = |amps: [f64; 4]| PureState::new(2, amps.iter().map(|&a| r(a)).collect());
    match name {
        NamedState::BellPhiPlus => two([h, 0.0, 0.0, h]),
        NamedState::BellPhiMinus => two([h, 0.0, 0.0, -h]),
        NamedState::BellPsiPlus => two([0.0, h, h, 0.0]),
        NamedState::BellPsiMinus => two([0.0, h, -h, 0.0]),
        NamedState::Ghz(n) => {
            let n = *n;
            if !(2..=10).contains(&n) {
                return Err(Error::BadStateName(format!("ghz needs 2..=10 qubits, got {n}")));
            }
            let mut amps = vec![ZERO; 1 << n];
            amps[0] = r(h);
            amps[(1 << n) - 1] = r(h);
            PureState::new(n, amps)
        }
        NamedState::W(n) => {
            let n = *n;
            if !(2..=10).contains(&n) {
                return Err(Error::BadStateName(format!("w needs 2..=10 qubits, got {n}")));
            }
            let a = r(1.0 / (n as f64).sqrt());
            let mut amps = vec![ZERO; 1 << n];
            for k in 0..n {
                amps[1 << k] = a;
            }
            PureState::normalized(n, amps)
        }
        NamedState::Basis(bits) => {
            let n = bits.len();
            if n == 0 || n > 10 || !bits.chars().all(|c| c == '0' || c == '1') {
                return Err(Error::BadStateName(format!("bad bitstring {bits:?}")));
            }
            let idx = usize::from_str_radix(bits, 2).map_err(|e| Error::BadStateName(e.to_string()))?;
            let mut amps = vec![ZERO; 1 << n];
            amps[idx] = ONE;
            PureState::new(n, amps)
        }
        NamedState::SchmidtPair(theta) => {
            let theta = *theta;
            if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
                return Err(Error::BadStateName(format!("schmidt angle {theta} outside [0, π/2]")));
            }
            two([theta.cos(), 0.0, 0.0, theta.sin()])
        }
    }
}
