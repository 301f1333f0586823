//! Purity and entanglement measures, and the identities tying them to the Stokes scalar.
//!
//! Two-qubit concurrence follows the Wootters spin-flip spectrum. For pairs inside a three-qubit pure state the pair
//! scalar `S²_XY` splits into the pair's squared concurrence plus half the
//! three-tangle; [`ckw_report`] computes every term independently and reports
//! the residuals.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{eigh, partial_trace, ComplexMatrix, DensityMatrix, PureState, ZERO};
use crate::stokes::{invariant_via_spinflip, stokes_component, MultiIndex};

/// Purity tolerance for treating a density matrix as a pure state.
const PURE_TOL: f64 = 1e-10;
const NEGATIVE_TANGLE_TOL: f64 = -1e-8;
const IDENTITY_HARD_LIMIT: f64 = 1e-6;
/// Eigenvalues of ρ below this fraction of its trace are treated as exact zeros.
const RANK_TOL: f64 = 1e-13;

fn require_qubits(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::WrongQubitCount { expected, got });
    }
    Ok(())
}

/// P²ₖ: sum of the squared single-leg Stokes components on qubit `k` (1-based).
pub fn polarization_sq(rho: &DensityMatrix, k: usize) -> Result<f64> {
    let n = rho.n_qubits();
    if k == 0 || k > n {
        return Err(Error::BadSubsystem(format!("qubit {k} outside 1..={n}")));
    }
    let mut total = 0.0;
    for d in 1..=3u8 {
        let mut digits = vec![0u8; n];
        digits[k - 1] = d;
        let s = stokes_component(rho, &MultiIndex::new(digits)?)?;
        total += s * s;
    }
    Ok(total)
}

/// 1 − Tr ρ².
pub fn linearized_entropy(rho: &DensityMatrix) -> f64 {
    1.0 - rho.purity()
}

/// Wootters concurrence of a two-qubit state.
///
/// With ρ = Σᵢ |vᵢ⟩⟨vᵢ| over subnormalized eigenvectors, the spin-flip spectrum
/// λ₁ ≥ … ≥ λ₄ is the set of singular values of τᵢⱼ = ⟨vᵢ|ṽⱼ⟩ (the same
/// numbers as the square roots of the eigenvalues of √ρ ρ̃ √ρ). They are read
/// off the Hermitian dilation [[0, τ], [τ†, 0]], whose spectrum is ±λ, so no
/// square root of a near-zero eigenvalue is ever taken.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    require_qubits(rho.n_qubits(), 2)?;
    let lambda = spin_flip_spectrum(rho)?;
    Ok((lambda[0] - lambda[1] - lambda[2] - lambda[3]).max(0.0))
}

fn spin_flip_spectrum(rho: &DensityMatrix) -> Result<[f64; 4]> {
    let (vals, vecs) = eigh(rho.matrix())?;
    if let Some(&lowest) = vals.first() {
        if lowest < -1e-10 {
            return Err(Error::NotPositiveSemidefinite(lowest));
        }
    }
    let cutoff = RANK_TOL * rho.trace().abs().max(f64::MIN_POSITIVE);
    let dim = rho.dim();
    let full = dim - 1;
    let support: Vec<Vec<Complex64>> = vals
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > cutoff)
        .map(|(k, &p)| (0..dim).map(|x| vecs[(x, k)] * p.sqrt()).collect())
        .collect();
    // σ₂⊗σ₂|x⟩ = (−1)^{popcount(x)}·(−1)|x̄⟩; the global sign does not affect singular values.
    let flipped: Vec<Vec<Complex64>> = support
        .iter()
        .map(|v| {
            let mut out = vec![ZERO; dim];
            for (x, a) in v.iter().enumerate() {
                let sign = if x.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                out[x ^ full] = a.conj() * sign;
            }
            out
        })
        .collect();
    let r = support.len();
    let mut dilation = ComplexMatrix::zeros(2 * r);
    for i in 0..r {
        for j in 0..r {
            let t: Complex64 = support[i].iter().zip(&flipped[j]).map(|(a, b)| a.conj() * b).sum();
            dilation[(i, r + j)] = t;
            dilation[(r + j, i)] = t.conj();
        }
    }
    let mut lambda = [0.0; 4];
    if r > 0 {
        let (spectrum, _) = eigh(&dilation)?;
        for (slot, v) in lambda.iter_mut().zip(spectrum.iter().rev().take(r)) {
            *slot = v.max(0.0);
        }
    }
    Ok(lambda)
}

/// Tangle of a two-qubit pure state, the squared concurrence.
pub fn tangle_pure2(psi: &PureState) -> Result<f64> {
    require_qubits(psi.n_qubits(), 2)?;
    let c = concurrence(&psi.density())?;
    Ok(c * c)
}

/// Binary entropy in bits with 0·log 0 = 0.
pub fn binary_entropy(x: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(x) + term(1.0 - x)
}

/// h(½[1 + √(1 − τ)])
pub fn eof_from_tangle(tau: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::OutOfRange(tau));
    }
    Ok(binary_entropy(0.5 * (1.0 + (1.0 - tau).sqrt())))
}

fn require_pure3(psi: &PureState) -> Result<DensityMatrix> {
    require_qubits(psi.n_qubits(), 3)?;
    Ok(psi.density())
}

/// C²_{X(YZ)} = 2(1 − Tr ρ_X²) for the qubit `cut` of a three-qubit pure state.
pub fn bipartite_tangle(psi: &PureState, cut: usize) -> Result<f64> {
    let rho = require_pure3(psi)?;
    bipartite_tangle_of(&rho, cut)
}

fn bipartite_tangle_of(rho: &DensityMatrix, cut: usize) -> Result<f64> {
    let reduced = partial_trace(rho, &[cut])?;
    Ok(2.0 * (1.0 - reduced.purity()))
}

fn pair_concurrence_sq(rho: &DensityMatrix, pair: [usize; 2]) -> Result<f64> {
    let c = concurrence(&partial_trace(rho, &pair)?)?;
    Ok(c * c)
}

fn three_tangle_about(rho: &DensityMatrix, focus: usize) -> Result<f64> {
    let others: Vec<usize> = (1..=3).filter(|&q| q != focus).collect();
    let whole = bipartite_tangle_of(rho, focus)?;
    let p1 = pair_concurrence_sq(rho, sorted([focus, others[0]]))?;
    let p2 = pair_concurrence_sq(rho, sorted([focus, others[1]]))?;
    Ok(whole - p1 - p2)
}

fn sorted(mut pair: [usize; 2]) -> [usize; 2] {
    pair.sort_unstable();
    pair
}

fn clamp_tangle(raw: f64) -> Result<f64> {
    if raw < NEGATIVE_TANGLE_TOL {
        return Err(Error::NegativeTangle(raw));
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// τ_ABC = C²_{A(BC)} − C²_AB − C²_AC.
pub fn three_tangle(psi: &PureState) -> Result<f64> {
    let rho = require_pure3(psi)?;
    clamp_tangle(three_tangle_about(&rho, 1)?)
}

/// Splits the two-qubit purity into the mean squared single-qubit polarization
/// and the Stokes scalar: returns `(P̄², S²₍₂₎)`.
pub fn purity_decomposition(rho: &DensityMatrix) -> Result<(f64, f64)> {
    require_qubits(rho.n_qubits(), 2)?;
    let avg = 0.5 * (polarization_sq(rho, 1)? + polarization_sq(rho, 2)?);
    Ok((avg, invariant_via_spinflip(rho)))
}

/// Pair scalars, concurrences, bipartite tangles and three-tangle of a three-qubit pure state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CkwReport {
    pub s2_ab: f64,
    pub s2_ac: f64,
    pub s2_bc: f64,
    pub c2_ab: f64,
    pub c2_ac: f64,
    pub c2_bc: f64,
    pub c2_a_bc: f64,
    pub c2_b_ac: f64,
    pub c2_c_ab: f64,
    pub tau_abc: f64,
    /// max over X of |S²_XY + S²_XZ − C²_{X(YZ)}|
    pub sum_rule_residual: f64,
    /// max over pairs of |S²_XY − C²_XY − τ/2|
    pub pair_rule_residual: f64,
    /// max spread of the three-tangle computed about each qubit
    pub tangle_symmetry_residual: f64,
}

pub fn ckw_report(psi: &PureState) -> Result<CkwReport> {
    let rho = require_pure3(psi)?;
    let pair_s2 = |pair: [usize; 2]| -> Result<f64> { Ok(invariant_via_spinflip(&partial_trace(&rho, &pair)?)) };
    let (s2_ab, s2_ac, s2_bc) = (pair_s2([1, 2])?, pair_s2([1, 3])?, pair_s2([2, 3])?);
    let (c2_ab, c2_ac, c2_bc) = (
        pair_concurrence_sq(&rho, [1, 2])?,
        pair_concurrence_sq(&rho, [1, 3])?,
        pair_concurrence_sq(&rho, [2, 3])?,
    );
    let (c2_a_bc, c2_b_ac, c2_c_ab) = (
        bipartite_tangle_of(&rho, 1)?,
        bipartite_tangle_of(&rho, 2)?,
        bipartite_tangle_of(&rho, 3)?,
    );
    let raw_tau = [
        c2_a_bc - c2_ab - c2_ac,
        c2_b_ac - c2_ab - c2_bc,
        c2_c_ab - c2_ac - c2_bc,
    ];
    let tau_abc = clamp_tangle(raw_tau[0])?;

    let sum_rule_residual = [
        (s2_ab + s2_ac - c2_a_bc).abs(),
        (s2_ab + s2_bc - c2_b_ac).abs(),
        (s2_ac + s2_bc - c2_c_ab).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let pair_rule_residual = [
        (s2_ab - c2_ab - raw_tau[0] / 2.0).abs(),
        (s2_ac - c2_ac - raw_tau[0] / 2.0).abs(),
        (s2_bc - c2_bc - raw_tau[0] / 2.0).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let hi = raw_tau.iter().copied().fold(f64::MIN, f64::max);
    let lo = raw_tau.iter().copied().fold(f64::MAX, f64::min);
    let tangle_symmetry_residual = hi - lo;

    for (identity, residual) in [
        ("pair-scalar sum rule", sum_rule_residual),
        ("pair-scalar tangle split", pair_rule_residual),
        ("three-tangle symmetry", tangle_symmetry_residual),
    ] {
        if residual > IDENTITY_HARD_LIMIT {
            return Err(Error::IdentityViolation {
                identity: identity.to_string(),
                residual,
            });
        }
    }

    Ok(CkwReport {
        s2_ab,
        s2_ac,
        s2_bc,
        c2_ab,
        c2_ac,
        c2_bc,
        c2_a_bc,
        c2_b_ac,
        c2_c_ab,
        tau_abc,
        sum_rule_residual,
        pair_rule_residual,
        tangle_symmetry_residual,
    })
}

/// Summary of the measures defined for a given state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub purity: f64,
    pub linearized_entropy: f64,
    pub per_qubit_polarization_sq: Vec<f64>,
    pub stokes_scalar: f64,
    /// Two-qubit states only.
    pub concurrence: Option<f64>,
    /// Squared concurrence; two-qubit states only.
    pub tangle: Option<f64>,
    /// Three-qubit pure states only.
    pub three_tangle: Option<f64>,
    /// Two-qubit states only.
    pub eof: Option<f64>,
}

pub fn measure_report(rho: &DensityMatrix) -> Result<MeasureReport> {
    if !rho.is_normalized() {
        return Err(Error::NotNormalized(rho.trace()));
    }
    let n = rho.n_qubits();
    let purity = rho.purity();
    let per_qubit_polarization_sq = (1..=n).map(|k| polarization_sq(rho, k)).collect::<Result<Vec<_>>>()?;
    let (concurrence, tangle, eof) = if n == 2 {
        let c = concurrence(rho)?;
        let tau = (c * c).min(1.0);
        (Some(c), Some(tau), Some(eof_from_tangle(tau)?))
    } else {
        (None, None, None)
    };
    let three_tangle = match (n, rho.as_pure(PURE_TOL)) {
        (3, Some(psi)) => Some(self::three_tangle(&psi)?),
        _ => None,
    };
    Ok(MeasureReport {
        purity,
        linearized_entropy: 1.0 - purity,
        per_qubit_polarization_sq,
        stokes_scalar: invariant_via_spinflip(rho),
        concurrence,
        tangle,
        three_tangle,
        eof,
    })
}
