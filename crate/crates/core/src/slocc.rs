//! Local filtering in two pictures.
//!
//! A local operation `A₁⊗…⊗Aₙ` acts on density matrices as `ρ ↦ AρA†`. For
//! unimodular `Aₖ` the same action on the Stokes tensor is a proper
//! orthochronous Lorentz transformation on every leg, `L_{μν} = ½Tr(σ_μ A σ_ν A†)`,
//! which leaves the Minkowskian scalar unchanged. Filtering changes only the
//! intensity `S₀…₀`, so after renormalization the scalar is rescaled by the
//! inverse squared attenuation.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{pauli, sample_sl2c, sample_su2, ComplexMatrix, DensityMatrix, ONE, ZERO};
use crate::stokes::{minkowski_invariant, stokes_tensor, StokesTensor};

const INVERTIBLE_TOL: f64 = 1e-9;
const UNIMODULAR_TOL: f64 = 1e-8;
const UNITARY_TOL: f64 = 1e-9;
const ANNIHILATED: f64 = 1e-12;

/// Minkowski metric diag(1, −1, −1, −1).
pub const METRIC: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

/// Per-qubit 2×2 operators, qubit 1 first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LocalOperationDoc", into = "LocalOperationDoc")]
pub struct LocalOperation {
    ops: Vec<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
struct LocalOperationDoc {
    ops: Vec<ComplexMatrix>,
}

impl TryFrom<LocalOperationDoc> for LocalOperation {
    type Error = Error;

    fn try_from(doc: LocalOperationDoc) -> Result<Self> {
        LocalOperation::new(doc.ops)
    }
}

impl From<LocalOperation> for LocalOperationDoc {
    fn from(op: LocalOperation) -> Self {
        LocalOperationDoc { ops: op.ops }
    }
}

impl LocalOperation {
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::BadLength { expected: 1, got: 0 });
        }
        for op in &ops {
            if op.dim() != 2 {
                return Err(Error::DimensionMismatch(format!(
                    "local operator is {0}x{0}, not 2x2",
                    op.dim()
                )));
            }
            let det = op.det2().norm();
            if det <= INVERTIBLE_TOL {
                return Err(Error::NotInvertible(det));
            }
        }
        Ok(LocalOperation { ops })
    }

    pub fn identity(n: usize) -> Self {
        LocalOperation {
            ops: vec![ComplexMatrix::identity(2); n],
        }
    }

    /// Identity everywhere except `op` on `qubit` (1-based).
    pub fn single(n: usize, qubit: usize, op: ComplexMatrix) -> Result<Self> {
        if qubit == 0 || qubit > n {
            return Err(Error::BadSubsystem(format!("qubit {qubit} outside 1..={n}")));
        }
        let mut ops = vec![ComplexMatrix::identity(2); n];
        ops[qubit - 1] = op;
        Self::new(ops)
    }

    pub fn random_sl2c<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        LocalOperation {
            ops: (0..n).map(|_| sample_sl2c(rng)).collect(),
        }
    }

    pub fn random_su2<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        LocalOperation {
            ops: (0..n).map(|_| sample_su2(rng)).collect(),
        }
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Whether the operator on each qubit satisfies A†A = I.
    pub fn unitary_mask(&self) -> Vec<bool> {
        self.ops
            .iter()
            .map(|a| (&a.adjoint() * a).max_abs_diff(&ComplexMatrix::identity(2)) <= UNITARY_TOL)
            .collect()
    }

    pub fn is_unimodular(&self) -> bool {
        self.ops.iter().all(|a| (a.det2() - ONE).norm() <= UNIMODULAR_TOL)
    }

    pub fn lorentz(&self) -> Result<Vec<LorentzMatrix>> {
        self.ops.iter().map(lorentz_of).collect()
    }
}

/// diag(a, 1/a) with a = √a2: a polarization-dependent attenuator of unit determinant.
pub fn boost(a2: f64) -> Result<ComplexMatrix> {
    if !(a2 > 0.0 && a2.is_finite()) {
        return Err(Error::OutOfRange(a2));
    }
    let a = a2.sqrt();
    Ok(ComplexMatrix::mat2(
        Complex64::new(a, 0.0),
        ZERO,
        ZERO,
        Complex64::new(1.0 / a, 0.0),
    ))
}

/// exp(−iθσ_axis/2), axis in 1..=3.
pub fn rotation(axis: usize, angle: f64) -> Result<ComplexMatrix> {
    if !(1..=3).contains(&axis) {
        return Err(Error::OutOfRange(axis as f64));
    }
    let c = Complex64::new((angle / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, -(angle / 2.0).sin());
    Ok(&ComplexMatrix::identity(2).scale(c) + &pauli(axis).scale(s))
}

/// Real 4×4 matrix acting on one Stokes leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LorentzMatrix(pub [[f64; 4]; 4]);

impl LorentzMatrix {
    pub fn identity() -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        LorentzMatrix(m)
    }

    pub fn entries(&self) -> &[[f64; 4]; 4] {
        &self.0
    }

    pub fn mul(&self, other: &LorentzMatrix) -> LorentzMatrix {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..4).map(|k| self.0[i][k] * other.0[k][j]).sum();
            }
        }
        LorentzMatrix(out)
    }

    /// max |(LᵀgL − g)_{ij}|
    pub fn metric_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, &gi) in METRIC.iter().enumerate() {
            for j in 0..4 {
                let v: f64 = (0..4).map(|k| self.0[k][i] * METRIC[k] * self.0[k][j]).sum();
                let g = if i == j { gi } else { 0.0 };
                worst = worst.max((v - g).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &LorentzMatrix) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        worst
    }
}

/// L_{μν} = ½ Tr(σ_μ A σ_ν A†) for unimodular A.
pub fn lorentz_of(a: &ComplexMatrix) -> Result<LorentzMatrix> {
    if a.dim() != 2 {
        return Err(Error::DimensionMismatch(format!("expected 2x2, got {0}x{0}", a.dim())));
    }
    let det = a.det2();
    if (det - ONE).norm() > UNIMODULAR_TOL {
        return Err(Error::NotUnimodular(format!("{det}")));
    }
    let a_dag = a.adjoint();
    let sigmas: Vec<ComplexMatrix> = (0..4).map(pauli).collect();
    let mut out = [[0.0; 4]; 4];
    for (nu, s_nu) in sigmas.iter().enumerate() {
        let image = &(a * s_nu) * &a_dag;
        for (mu, s_mu) in sigmas.iter().enumerate() {
            out[mu][nu] = 0.5 * s_mu.trace_product(&image).re;
        }
    }
    Ok(LorentzMatrix(out))
}

/// Applies `a` to the single qubit at `bit` (bit position in the basis index) from the left.
fn left_apply(m: &mut ComplexMatrix, a: &ComplexMatrix, bit: usize) {
    let dim = m.dim();
    let stride = 1 << bit;
    for r0 in (0..dim).filter(|r| r & stride == 0) {
        let r1 = r0 | stride;
        for c in 0..dim {
            let x0 = m[(r0, c)];
            let x1 = m[(r1, c)];
            m[(r0, c)] = a[(0, 0)] * x0 + a[(0, 1)] * x1;
            m[(r1, c)] = a[(1, 0)] * x0 + a[(1, 1)] * x1;
        }
    }
}

/// Right-multiplies by `a†` on the single qubit at `bit`.
fn right_apply_adjoint(m: &mut ComplexMatrix, a: &ComplexMatrix, bit: usize) {
    let dim = m.dim();
    let stride = 1 << bit;
    for c0 in (0..dim).filter(|c| c & stride == 0) {
        let c1 = c0 | stride;
        for r in 0..dim {
            let x0 = m[(r, c0)];
            let x1 = m[(r, c1)];
            m[(r, c0)] = x0 * a[(0, 0)].conj() + x1 * a[(0, 1)].conj();
            m[(r, c1)] = x0 * a[(1, 0)].conj() + x1 * a[(1, 1)].conj();
        }
    }
}

/// ρ′ = (A₁⊗…⊗Aₙ) ρ (A₁⊗…⊗Aₙ)†, left unnormalized; `Tr ρ′` is the attenuation.
pub fn apply_local_to_density(rho: &DensityMatrix, op: &LocalOperation) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    if op.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} operators for {n} qubits",
            op.len()
        )));
    }
    let mut m = rho.matrix().clone();
    for (k, a) in op.ops().iter().enumerate() {
        let bit = n - 1 - k;
        left_apply(&mut m, a, bit);
        right_apply_adjoint(&mut m, a, bit);
    }
    // Restore exact Hermiticity lost to rounding.
    let herm = (&m + &m.adjoint()).scale_real(0.5);
    DensityMatrix::unnormalized(n, herm)
}

/// S′ = (L₁⊗…⊗Lₙ)·S, contracted one leg at a time starting with qubit 1.
pub fn apply_lorentz_to_stokes(s: &StokesTensor, ls: &[LorentzMatrix]) -> Result<StokesTensor> {
    let n = s.n_qubits();
    if ls.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} Lorentz matrices for {n} qubits",
            ls.len()
        )));
    }
    let mut values = s.values().to_vec();
    let mut scratch = vec![0.0; values.len()];
    for (k, l) in ls.iter().enumerate() {
        let stride = 1usize << (2 * (n - 1 - k));
        for base in (0..values.len()).filter(|m| (m / stride).is_multiple_of(4)) {
            let leg: [f64; 4] = std::array::from_fn(|nu| values[base + nu * stride]);
            for mu in 0..4 {
                scratch[base + mu * stride] = (0..4).map(|nu| l.0[mu][nu] * leg[nu]).sum();
            }
        }
        std::mem::swap(&mut values, &mut scratch);
    }
    StokesTensor::new(n, values)
}

/// S″ = S′ / S′₀…₀.
pub fn renormalize(s: &StokesTensor) -> Result<StokesTensor> {
    let s0 = s.intensity();
    if s0 <= ANNIHILATED {
        return Err(Error::EnsembleAnnihilated(s0));
    }
    StokesTensor::new(s.n_qubits(), s.values().iter().map(|v| v / s0).collect())
}

/// Effect of one local filtering step on the Stokes scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    /// S′₀…₀, the trace of the unnormalized output.
    pub attenuation: f64,
    pub invariant_before: f64,
    /// Scalar of the renormalized output tensor.
    pub invariant_after_renorm: f64,
    /// 1 / attenuation², the factor relating the two invariants.
    pub gain: f64,
}

/// Filters `rho` with a unimodular local operation and reports the invariant
/// before filtering and after renormalization.
pub fn filter_state(rho: &DensityMatrix, op: &LocalOperation) -> Result<FilterReport> {
    for a in op.ops() {
        let det = a.det2();
        if (det - ONE).norm() > UNIMODULAR_TOL {
            return Err(Error::NotUnimodular(format!("{det}")));
        }
    }
    let before = minkowski_invariant(&stokes_tensor(rho)?);
    let filtered = stokes_tensor(&apply_local_to_density(rho, op)?)?;
    let attenuation = filtered.intensity();
    let after = minkowski_invariant(&renormalize(&filtered)?);
    Ok(FilterReport {
        attenuation,
        invariant_before: before,
        invariant_after_renorm: after,
        gain: 1.0 / (attenuation * attenuation),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{kron_all, named_state, random_mixed, random_sl2c, random_su2, rng_from_seed, NamedState, I};

    fn schmidt_09() -> DensityMatrix {
        named_state(&NamedState::SchmidtPair(0.9f64.sqrt().acos()))
            .unwrap()
            .density()
    }

    fn bell() -> DensityMatrix {
        named_state(&NamedState::BellPhiPlus).unwrap().density()
    }

    /// ½Tr(σ_μ A σ_ν A†) written out for A = diag(α, 1/α).
    fn boost_oracle(alpha: f64) -> [[f64; 4]; 4] {
        let (a2, b2) = (alpha * alpha, 1.0 / (alpha * alpha));
        let mut l = [[0.0; 4]; 4];
        l[0][0] = (a2 + b2) / 2.0;
        l[3][3] = (a2 + b2) / 2.0;
        l[0][3] = (a2 - b2) / 2.0;
        l[3][0] = (a2 - b2) / 2.0;
        l[1][1] = 1.0;
        l[2][2] = 1.0;
        l
    }

    #[test]
    fn lorentz_examples() {
        assert!(
            lorentz_of(&ComplexMatrix::identity(2))
                .unwrap()
                .max_abs_diff(&LorentzMatrix::identity())
                < 1e-15
        );

        let alpha: f64 = 1.7;
        let l = lorentz_of(&boost(alpha * alpha).unwrap()).unwrap();
        assert!(l.max_abs_diff(&LorentzMatrix(boost_oracle(alpha))) < 1e-14);
        let eta = 2.0 * alpha.ln();
        assert!((l.0[0][0] - eta.cosh()).abs() < 1e-14);
        assert!((l.0[0][3] - eta.sinh()).abs() < 1e-14);

        let i_x = pauli(1).scale(I);
        let l = lorentz_of(&i_x).unwrap();
        let mut expected = LorentzMatrix::identity();
        expected.0[2][2] = -1.0;
        expected.0[3][3] = -1.0;
        assert!(l.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn lorentz_requires_unit_determinant() {
        let m = ComplexMatrix::identity(2).scale_real(2.0);
        assert!(matches!(lorentz_of(&m), Err(Error::NotUnimodular(_))));
    }

    #[test]
    fn lorentz_group_properties() {
        for seed in 0..100 {
            let a = random_sl2c(seed);
            let b = random_sl2c(seed + 1000);
            let (la, lb) = (lorentz_of(&a).unwrap(), lorentz_of(&b).unwrap());
            assert!(la.metric_residual() < 1e-8);
            assert!(la.0[0][0] >= 1.0 - 1e-12);
            let lab = lorentz_of(&(&a * &b)).unwrap();
            assert!(lab.max_abs_diff(&la.mul(&lb)) < 1e-8);

            let u = lorentz_of(&random_su2(seed)).unwrap();
            for k in 1..4 {
                assert!(u.0[0][k].abs() < 1e-12 && u.0[k][0].abs() < 1e-12);
            }
            assert!((u.0[0][0] - 1.0).abs() < 1e-12);
            assert!(u.metric_residual() < 1e-12);
        }
    }

    #[test]
    fn leg_application_matches_full_kron() {
        let mut rng = rng_from_seed(5);
        for n in 1..=4 {
            let rho = random_mixed(n, 2, n as u64).unwrap();
            let op = LocalOperation::random_sl2c(n, &mut rng);
            let k = kron_all(op.ops());
            let oracle = rho.matrix().conjugate_by(&k);
            let got = apply_local_to_density(&rho, &op).unwrap();
            assert!(got.matrix().max_abs_diff(&oracle) < 1e-11);
            assert!(!got.is_normalized());
        }
    }

    #[test]
    fn density_examples() {
        let rho = random_mixed(2, 3, 1).unwrap();
        let same = apply_local_to_density(&rho, &LocalOperation::identity(2)).unwrap();
        assert!(same.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        let mut rng = rng_from_seed(2);
        let unitary = apply_local_to_density(&rho, &LocalOperation::random_su2(2, &mut rng)).unwrap();
        assert!((unitary.trace() - 1.0).abs() < 1e-10);
        assert!(matches!(
            apply_local_to_density(&rho, &LocalOperation::identity(3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn procrustean_filter_reaches_bell() {
        let op = LocalOperation::single(2, 1, boost(1.0 / 3.0).unwrap()).unwrap();
        let out = apply_local_to_density(&schmidt_09(), &op).unwrap();
        assert!((out.trace() - 0.6).abs() < 1e-12);
        let renorm = out.renormalized().unwrap();
        assert!(renorm.matrix().max_abs_diff(bell().matrix()) < 1e-10);

        let s = renormalize(&stokes_tensor(&out).unwrap()).unwrap();
        let direct = stokes_tensor(&renorm).unwrap();
        let bell_s = stokes_tensor(&bell()).unwrap();
        for ((a, b), c) in s.values().iter().zip(direct.values()).zip(bell_s.values()) {
            assert!((a - b).abs() < 1e-12 && (a - c).abs() < 1e-10);
        }
    }

    #[test]
    fn stokes_picture_examples() {
        let s = stokes_tensor(&bell()).unwrap();
        let unchanged = apply_lorentz_to_stokes(&s, &[LorentzMatrix::identity(); 2]).unwrap();
        assert_eq!(unchanged, s);

        let a = boost(0.4).unwrap();
        let op = LocalOperation::new(vec![a.clone(), ComplexMatrix::identity(2)]).unwrap();
        let via_density = stokes_tensor(&apply_local_to_density(&bell(), &op).unwrap()).unwrap();
        let via_lorentz = apply_lorentz_to_stokes(&s, &op.lorentz().unwrap()).unwrap();
        for (x, y) in via_density.values().iter().zip(via_lorentz.values()) {
            assert!((x - y).abs() < 1e-12);
        }

        let rho = random_mixed(3, 4, 8).unwrap();
        let s = stokes_tensor(&rho).unwrap();
        let mut rng = rng_from_seed(8);
        let rot = LocalOperation::random_su2(3, &mut rng).lorentz().unwrap();
        let rotated = apply_lorentz_to_stokes(&s, &rot).unwrap();
        assert!((rotated.intensity() - s.intensity()).abs() < 1e-12);
        assert!(matches!(
            apply_lorentz_to_stokes(&s, &rot[..2]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn renormalize_examples() {
        let s = stokes_tensor(&bell()).unwrap();
        for (a, b) in renormalize(&s).unwrap().values().iter().zip(s.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        let scaled = StokesTensor::new(2, s.values().iter().map(|v| v * 0.6).collect()).unwrap();
        for (a, b) in renormalize(&scaled).unwrap().values().iter().zip(s.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        let dead = StokesTensor::new(1, vec![0.0; 4]).unwrap();
        assert!(matches!(renormalize(&dead), Err(Error::EnsembleAnnihilated(_))));
    }

    #[test]
    fn filter_examples() {
        let mut rng = rng_from_seed(3);
        let rho = random_mixed(2, 2, 3).unwrap();
        let r = filter_state(&rho, &LocalOperation::random_su2(2, &mut rng)).unwrap();
        assert!((r.attenuation - 1.0).abs() < 1e-12 && (r.gain - 1.0).abs() < 1e-11);

        let op = LocalOperation::single(2, 1, boost(1.0 / 3.0).unwrap()).unwrap();
        let r = filter_state(&schmidt_09(), &op).unwrap();
        assert!((r.invariant_before - 0.36).abs() < 1e-12);
        assert!((r.attenuation - 0.6).abs() < 1e-12);
        assert!((r.invariant_after_renorm - 1.0).abs() < 1e-10);

        // Filtering a maximally entangled state raises S′₀₀ above one.
        let r = filter_state(&bell(), &op).unwrap();
        assert!((r.attenuation - 5.0 / 3.0).abs() < 1e-12);
        assert!((r.gain - 9.0 / 25.0).abs() < 1e-12);
        assert!((r.invariant_after_renorm - 9.0 / 25.0).abs() < 1e-10);
    }

    #[test]
    fn filter_report_consistency() {
        let mut rng = rng_from_seed(17);
        for seed in 0..50 {
            let rho = random_mixed(2, 1 + (seed as usize % 4), seed).unwrap();
            let op = LocalOperation::random_sl2c(2, &mut rng);
            let r = filter_state(&rho, &op).unwrap();
            let predicted = r.invariant_before / (r.attenuation * r.attenuation);
            assert!((r.invariant_after_renorm - predicted).abs() <= 1e-10 * predicted.max(1.0));
        }
    }

    #[test]
    fn filter_rejects_non_unimodular() {
        let op = LocalOperation::single(1, 1, ComplexMatrix::from_real_diagonal(&[1.0, 0.5])).unwrap();
        let rho = DensityMatrix::maximally_mixed(1).unwrap();
        assert!(matches!(filter_state(&rho, &op), Err(Error::NotUnimodular(_))));
        assert!(matches!(
            LocalOperation::new(vec![ComplexMatrix::from_real_diagonal(&[1.0, 0.0])]),
            Err(Error::NotInvertible(_))
        ));
    }

    #[test]
    fn single_qubit_filtering_raises_scalar() {
        let mut rng = rng_from_seed(23);
        let mut checked = 0;
        for seed in 0..300 {
            let rho = random_mixed(1, 2, 500 + seed).unwrap();
            let op = LocalOperation::random_sl2c(1, &mut rng);
            let r = filter_state(&rho, &op).unwrap();
            if r.attenuation <= 1.0 {
                checked += 1;
                assert!(r.invariant_after_renorm >= r.invariant_before * (1.0 - 1e-12));
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn rotation_is_unitary_and_unimodular() {
        for axis in 1..=3 {
            let r = rotation(axis, 0.77).unwrap();
            let op = LocalOperation::new(vec![r]).unwrap();
            assert_eq!(op.unitary_mask(), vec![true]);
            assert!(op.is_unimodular());
        }
        assert_eq!(
            LocalOperation::new(vec![boost(0.5).unwrap()]).unwrap().unitary_mask(),
            vec![false]
        );
    }

    #[test]
    fn json_round_trip() {
        let op = LocalOperation::new(vec![boost(0.25).unwrap(), rotation(2, 0.3).unwrap()]).unwrap();
        let text = serde_json::to_string(&op).unwrap();
        assert!(text.starts_with("{\"ops\":[[[[0.5,0.0],[0.0,0.0]],"));
        let back: LocalOperation = serde_json::from_str(&text).unwrap();
        assert_eq!(back, op);
        let report = FilterReport {
            attenuation: 0.6,
            invariant_before: 0.36,
            invariant_after_renorm: 1.0,
            gain: 1.0 / 0.36,
        };
        let v: serde_json::Value = serde_json::to_value(report).unwrap();
        for key in ["attenuation", "invariant_before", "invariant_after_renorm", "gain"] {
            assert!(v.get(key).is_some());
        }
    }
}
