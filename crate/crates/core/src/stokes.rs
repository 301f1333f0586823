//! Generalized n-qubit Stokes tensors and their scalar norms.
//!
//! Component `S_{i₁…iₙ}` is `Tr(ρ σ_{i₁}⊗…⊗σ_{iₙ})`. Components are stored
//! flattened with `i₁` as the most significant base-4 digit. The Minkowskian
//! norm weights every component by `(−1)^w`, where `w` counts the non-identity
//! slots, and carries a `2⁻ⁿ` prefactor for every `n`, including `n = 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{eigh, ComplexMatrix, DensityMatrix, ZERO};

/// Largest imaginary part tolerated in a computed Stokes component.
const IMAG_TOL: f64 = 1e-8;

/// A multi-index `(i₁,…,iₙ)` with each digit in `0..=3`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    digits: Vec<u8>,
}

impl MultiIndex {
    pub fn new(digits: Vec<u8>) -> Result<Self> {
        if digits.is_empty() || digits.iter().any(|&d| d > 3) {
            return Err(Error::BadLength {
                expected: digits.len().max(1),
                got: digits.iter().filter(|&&d| d <= 3).count(),
            });
        }
        Ok(MultiIndex { digits })
    }

    /// Inverse of [`MultiIndex::flat`].
    pub fn from_flat(mut m: usize, n: usize) -> Self {
        let mut digits = vec![0u8; n];
        for k in (0..n).rev() {
            digits[k] = (m % 4) as u8;
            m /= 4;
        }
        MultiIndex { digits }
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    /// Σ iₖ·4^(n−k)
    pub fn flat(&self) -> usize {
        self.digits.iter().fold(0, |acc, &d| acc * 4 + d as usize)
    }

    /// Number of non-identity slots.
    pub fn weight(&self) -> usize {
        self.digits.iter().filter(|&&d| d != 0).count()
    }

    /// Label such as `S_312`.
    pub fn label(&self) -> String {
        let digits: String = self.digits.iter().map(|d| char::from(b'0' + d)).collect();
        format!("S_{digits}")
    }
}

/// Number of non-identity digits of a flattened index.
pub(crate) fn flat_weight(mut m: usize, n: usize) -> usize {
    let mut w = 0;
    for _ in 0..n {
        if !m.is_multiple_of(4) {
            w += 1;
        }
        m /= 4;
    }
    w
}

/// Real tensor of 4ⁿ generalized Stokes parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StokesDoc", into = "StokesDoc")]
pub struct StokesTensor {
    n_qubits: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct StokesDoc {
    n: usize,
    values: Vec<f64>,
}

impl TryFrom<StokesDoc> for StokesTensor {
    type Error = Error;

    fn try_from(doc: StokesDoc) -> Result<Self> {
        StokesTensor::new(doc.n, doc.values)
    }
}

impl From<StokesTensor> for StokesDoc {
    fn from(s: StokesTensor) -> Self {
        StokesDoc {
            n: s.n_qubits,
            values: s.values,
        }
    }
}

impl StokesTensor {
    pub fn new(n_qubits: usize, values: Vec<f64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 10 {
            return Err(Error::BadSubsystem(format!("qubit count {n_qubits} outside 1..=10")));
        }
        let expected = 1usize << (2 * n_qubits);
        if values.len() != expected {
            return Err(Error::BadLength {
                expected,
                got: values.len(),
            });
        }
        Ok(StokesTensor { n_qubits, values })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: &MultiIndex) -> f64 {
        self.values[index.flat()]
    }

    /// Component addressed by its digit string, e.g. `at(&[3, 0])` for `S₃₀`.
    pub fn at(&self, digits: &[u8]) -> f64 {
        assert_eq!(digits.len(), self.n_qubits, "multi-index length mismatch");
        self.values[digits.iter().fold(0, |acc, &d| acc * 4 + d as usize)]
    }

    /// `S₀…₀`, the total intensity.
    pub fn intensity(&self) -> f64 {
        self.values[0]
    }

    /// Labeled components in flattened order.
    pub fn labeled(&self) -> impl Iterator<Item = (String, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(m, &v)| (MultiIndex::from_flat(m, self.n_qubits).label(), v))
    }
}

/// Matrix element `(σ_d)_{row,col}` of a single Pauli factor.
fn pauli_entry(d: usize, row: usize, col: usize) -> Complex64 {
    match (d, row, col) {
        (0, r, c) if r == c => Complex64::new(1.0, 0.0),
        (1, r, c) if r != c => Complex64::new(1.0, 0.0),
        (2, 0, 1) => Complex64::new(0.0, -1.0),
        (2, 1, 0) => Complex64::new(0.0, 1.0),
        (3, 0, 0) => Complex64::new(1.0, 0.0),
        (3, 1, 1) => Complex64::new(-1.0, 0.0),
        _ => ZERO,
    }
}

/// For a Pauli string `m`, returns the bit-flip mask and, for every column `x`,
/// the nonzero entry `P[x ⊕ mask, x]`.
fn pauli_string_columns(m: usize, n: usize) -> (usize, Vec<Complex64>) {
    let digits = MultiIndex::from_flat(m, n);
    let mut mask = 0usize;
    for (k, &d) in digits.digits().iter().enumerate() {
        if d == 1 || d == 2 {
            mask |= 1 << (n - 1 - k);
        }
    }
    let dim = 1usize << n;
    let entries = (0..dim)
        .map(|x| {
            let y = x ^ mask;
            digits
                .digits()
                .iter()
                .enumerate()
                .fold(Complex64::new(1.0, 0.0), |acc, (k, &d)| {
                    let b = n - 1 - k;
                    acc * pauli_entry(d as usize, (y >> b) & 1, (x >> b) & 1)
                })
        })
        .collect();
    (mask, entries)
}

/// Tr(ρ σ_{i₁}⊗…⊗σ_{iₙ}) for every multi-index.
///
/// Accepts unnormalized (filtered) states, in which case `S₀…₀ = Tr ρ ≠ 1`.
pub fn stokes_tensor(rho: &DensityMatrix) -> Result<StokesTensor> {
    let n = rho.n_qubits();
    let mat = rho.matrix();
    let dim = rho.dim();
    let mut values = Vec::with_capacity(dim * dim);
    for m in 0..dim * dim {
        let (mask, cols) = pauli_string_columns(m, n);
        // Tr(ρP) = Σ_x ρ[x, x⊕mask] · P[x⊕mask, x]
        let mut acc = ZERO;
        for (x, p) in cols.iter().enumerate() {
            acc += mat[(x, x ^ mask)] * p;
        }
        if acc.im.abs() > IMAG_TOL {
            return Err(Error::NonHermitianInput(acc.im.abs()));
        }
        values.push(acc.re);
    }
    StokesTensor::new(n, values)
}

/// A single component `Tr(ρ σ_{i₁}⊗…⊗σ_{iₙ})`.
pub fn stokes_component(rho: &DensityMatrix, index: &MultiIndex) -> Result<f64> {
    let n = rho.n_qubits();
    if index.digits().len() != n {
        return Err(Error::BadLength {
            expected: n,
            got: index.digits().len(),
        });
    }
    let (mask, cols) = pauli_string_columns(index.flat(), n);
    let mat = rho.matrix();
    let acc: Complex64 = cols.iter().enumerate().map(|(x, p)| mat[(x, x ^ mask)] * p).sum();
    if acc.im.abs() > IMAG_TOL {
        return Err(Error::NonHermitianInput(acc.im.abs()));
    }
    Ok(acc.re)
}

/// Density matrix rebuilt from a Stokes tensor.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub density: DensityMatrix,
    /// False when the rebuilt matrix has an eigenvalue below −1e−10.
    pub psd_ok: bool,
}

/// ρ = 2⁻ⁿ Σ S_{i₁…iₙ} σ_{i₁}⊗…⊗σ_{iₙ}.
///
/// The result is Hermitian by construction but need not be positive for
/// arbitrary (for example noisy) input.
pub fn density_from_stokes(s: &StokesTensor) -> Result<Reconstruction> {
    let n = s.n_qubits();
    let dim = 1usize << n;
    let norm = 1.0 / dim as f64;
    let mut mat = ComplexMatrix::zeros(dim);
    for (m, &v) in s.values().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let (mask, cols) = pauli_string_columns(m, n);
        for (x, p) in cols.iter().enumerate() {
            mat[(x ^ mask, x)] += p * (v * norm);
        }
    }
    let normalized = (s.intensity() - 1.0).abs() <= 1e-10;
    let (vals, _) = eigh(&mat)?;
    let psd_ok = vals.first().is_none_or(|&v| v >= -1e-10);
    let density = DensityMatrix::unnormalized(n, mat)?;
    let density = if normalized && psd_ok {
        DensityMatrix::new(n, density.matrix().clone())?
    } else {
        density
    };
    Ok(Reconstruction { density, psd_ok })
}

/// S²₍ₙ₎ = 2⁻ⁿ Σ (−1)^weight S².
pub fn minkowski_invariant(s: &StokesTensor) -> f64 {
    let n = s.n_qubits();
    let sum: f64 = s
        .values()
        .iter()
        .enumerate()
        .map(|(m, v)| {
            if flat_weight(m, n).is_multiple_of(2) {
                v * v
            } else {
                -v * v
            }
        })
        .sum();
    sum / (1u64 << n) as f64
}

/// 2⁻ⁿ Σ S², which equals Tr(ρ²).
pub fn euclidean_purity(s: &StokesTensor) -> f64 {
    s.values().iter().map(|v| v * v).sum::<f64>() / (1u64 << s.n_qubits()) as f64
}

/// ρ̃ = (σ₂⊗…⊗σ₂) ρ* (σ₂⊗…⊗σ₂).
pub fn spin_flip(rho: &DensityMatrix) -> DensityMatrix {
    let dim = rho.dim();
    let full = dim - 1;
    // σ₂^{⊗n}|x⟩ = iⁿ·(−1)^{popcount(x)}|x̄⟩; the phases reduce to a sign per row and column.
    let sign = |x: usize| if x.count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
    let m = rho.matrix();
    let mut out = ComplexMatrix::zeros(dim);
    for r in 0..dim {
        for c in 0..dim {
            out[(r ^ full, c ^ full)] = m[(r, c)].conj() * (sign(r) * sign(c));
        }
    }
    rho.with_matrix(out, rho.is_normalized())
}

/// Tr(ρ ρ̃).
pub fn invariant_via_spinflip(rho: &DensityMatrix) -> f64 {
    rho.matrix().trace_product(spin_flip(rho).matrix()).re
}

/// Tr(a·b), the overlap functional estimated by the interference network.
pub fn hs_overlap(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "overlap of {}-qubit and {}-qubit states",
            a.n_qubits(),
            b.n_qubits()
        )));
    }
    Ok(a.matrix().trace_product(b.matrix()).re)
}
