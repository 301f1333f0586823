//! Simulated measurement routes to `Tr(ρₐρ_b)` and to the Stokes scalar.
//!
//! The interference network is modelled at the probability level: its ancilla
//! reads 0 with probability `(1 + Tr(ρₐρ_b))/2`. Tomography measures every
//! full Pauli setting and pools all settings compatible with a component that
//! has identity slots.
//!
//! Randomness is drawn in batches, each from its own ChaCha stream keyed by
//! `(seed, route, setting, batch)`, so the result does not depend on how
//! batches are scheduled across threads.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{ComplexMatrix, DensityMatrix, ONE, ZERO};
use crate::slocc::{apply_local_to_density, LocalOperation};
use crate::stokes::{density_from_stokes, hs_overlap, minkowski_invariant, spin_flip, StokesTensor};

/// Shots drawn per independently seeded batch.
const BATCH: u64 = 1 << 18;

const ROUTE_SWAP: u64 = 0x5157_4150;
const ROUTE_TOMO: u64 = 0x544f_4d4f;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one batch of one setting; a pure function of its arguments.
pub fn sub_seed(seed: u64, route: u64, setting: u64, batch: u64) -> u64 {
    [route, setting, batch]
        .iter()
        .fold(splitmix64(seed), |acc, &v| splitmix64(acc ^ splitmix64(v)))
}

fn batch_sizes(total: u64) -> impl Iterator<Item = (u64, u64)> {
    let full = total / BATCH;
    let rest = total % BATCH;
    (0..full).map(|b| (b, BATCH)).chain((rest > 0).then_some((full, rest)))
}

fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("probability within (0, 1)").sample(rng)
}

/// Point estimate with its shot-noise standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub shots: u64,
    pub std_error: f64,
    /// Ground truth, known to the simulator.
    pub exact: Option<f64>,
    pub seed: u64,
}

/// Estimates `Tr(a·b)` from the ancilla statistics of a controlled-swap interferometer.
pub fn swap_network_estimate(a: &DensityMatrix, b: &DensityMatrix, shots: u64, seed: u64) -> Result<EstimateReport> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let overlap = hs_overlap(a, b)?;
    let p0 = ((1.0 + overlap) / 2.0).clamp(0.0, 1.0);
    let batches: Vec<(u64, u64)> = batch_sizes(shots).collect();
    let zeros: u64 = batches
        .par_iter()
        .map(|&(batch, size)| {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, ROUTE_SWAP, 0, batch));
            binomial(&mut rng, size, p0)
        })
        .sum();
    let p_hat = zeros as f64 / shots as f64;
    Ok(EstimateReport {
        estimate: 2.0 * p_hat - 1.0,
        shots,
        std_error: 2.0 * (p_hat * (1.0 - p_hat) / shots as f64).sqrt(),
        exact: Some(overlap),
        seed,
    })
}

/// Shot budget for tomography.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    PerSetting(u64),
    /// Use outcome probabilities in place of sampled frequencies.
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyResult {
    pub stokes_hat: StokesTensor,
    /// Zero in infinite-shot mode.
    pub shots_per_setting: u64,
    pub infinite_shots: bool,
    pub invariant_hat: f64,
    /// Propagated shot noise of `invariant_hat`, second order in the component variances.
    pub invariant_std_error: f64,
    pub psd_ok: bool,
}

/// Columns are the +1 and −1 eigenvectors of σ_axis.
fn eigenbasis(axis: u8) -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = |x: f64| Complex64::new(x, 0.0);
    match axis {
        1 => ComplexMatrix::mat2(r(h), r(h), r(h), r(-h)),
        2 => ComplexMatrix::mat2(r(h), r(h), Complex64::new(0.0, h), Complex64::new(0.0, -h)),
        3 => ComplexMatrix::mat2(ONE, ZERO, ZERO, ONE),
        _ => unreachable!("measurement axis must be 1, 2 or 3"),
    }
}

fn setting_digits(index: usize, n: usize) -> Vec<u8> {
    let mut digits = vec![0u8; n];
    let mut rest = index;
    for k in (0..n).rev() {
        digits[k] = (rest % 3) as u8 + 1;
        rest /= 3;
    }
    digits
}

/// Outcome distribution of one full Pauli setting; bit `n−k` of the outcome is 1 when qubit `k` reads −1.
fn setting_probabilities(rho: &DensityMatrix, digits: &[u8]) -> Result<Vec<f64>> {
    let rotation = LocalOperation::new(digits.iter().map(|&d| eigenbasis(d).adjoint()).collect())?;
    let rotated = apply_local_to_density(rho, &rotation)?;
    let mut probs: Vec<f64> = (0..rho.dim()).map(|x| rotated.matrix()[(x, x)].re.max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(probs)
}

/// Multinomial outcome counts drawn as a chain of conditional binomials.
fn sample_counts(probs: &[f64], shots: u64, seed: u64, setting: u64) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    for (batch, size) in batch_sizes(shots) {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, ROUTE_TOMO, setting, batch));
        let mut left = size;
        let mut mass = 1.0;
        for (slot, &p) in counts.iter_mut().zip(probs) {
            if left == 0 {
                break;
            }
            let c = if mass <= p {
                left
            } else {
                binomial(&mut rng, left, p / mass)
            };
            *slot += c;
            left -= c;
            mass -= p;
        }
        if left > 0 {
            *counts.last_mut().expect("non-empty outcome space") += left;
        }
    }
    counts
}

/// Simulated Pauli tomography of `rho` followed by linear inversion.
pub fn tomography_simulate(rho: &DensityMatrix, shots: Shots, seed: u64) -> Result<TomographyResult> {
    if shots == Shots::PerSetting(0) {
        return Err(Error::ZeroShots);
    }
    if !rho.is_normalized() {
        return Err(Error::NotNormalized(rho.trace()));
    }
    let n = rho.n_qubits();
    let dim = rho.dim();
    let n_settings = 3usize.pow(n as u32);

    let frequencies: Vec<(Vec<u8>, Vec<f64>)> = (0..n_settings)
        .into_par_iter()
        .map(|s| {
            let digits = setting_digits(s, n);
            let probs = setting_probabilities(rho, &digits)?;
            let freqs = match shots {
                Shots::Infinite => probs,
                Shots::PerSetting(count) => sample_counts(&probs, count, seed, s as u64)
                    .into_iter()
                    .map(|c| c as f64 / count as f64)
                    .collect(),
            };
            Ok((digits, freqs))
        })
        .collect::<Result<_>>()?;

    let len = dim * dim;
    let mut sums = vec![0.0; len];
    let mut pooled = vec![0u32; len];
    for (digits, freqs) in &frequencies {
        // `subset` selects which qubits keep their measured axis; the rest are marginalized.
        for subset in 0..dim {
            let mut m = 0usize;
            for (k, &d) in digits.iter().enumerate() {
                let keep = subset >> (n - 1 - k) & 1 == 1;
                m = m * 4 + if keep { d as usize } else { 0 };
            }
            let expectation: f64 = freqs
                .iter()
                .enumerate()
                .map(|(x, f)| if (x & subset).count_ones() % 2 == 0 { *f } else { -*f })
                .sum();
            sums[m] += expectation;
            pooled[m] += 1;
        }
    }
    let mut values: Vec<f64> = sums.iter().zip(&pooled).map(|(s, &c)| s / c as f64).collect();
    values[0] = 1.0;
    let stokes_hat = StokesTensor::new(n, values)?;

    let invariant_std_error = match shots {
        Shots::Infinite => 0.0,
        Shots::PerSetting(count) => {
            let var: f64 = stokes_hat
                .values()
                .iter()
                .zip(&pooled)
                .skip(1)
                .map(|(&s, &c)| {
                    let v = (1.0 - s * s).max(0.0) / (c as f64 * count as f64);
                    4.0 * s * s * v + 2.0 * v * v
                })
                .sum();
            var.sqrt() / dim as f64
        }
    };

    Ok(TomographyResult {
        invariant_hat: minkowski_invariant(&stokes_hat),
        psd_ok: density_from_stokes(&stokes_hat)?.psd_ok,
        stokes_hat,
        shots_per_setting: match shots {
            Shots::PerSetting(c) => c,
            Shots::Infinite => 0,
        },
        infinite_shots: shots == Shots::Infinite,
        invariant_std_error,
    })
}

/// Direct and tomographic estimates of the Stokes scalar under the same total shot budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorComparison {
    pub direct: EstimateReport,
    pub tomo: TomographyResult,
}

pub fn estimator_compare(rho: &DensityMatrix, shots: u64, seed: u64) -> Result<EstimatorComparison> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    // The spin flip is antiunitary, so it is applied to the second copy classically.
    let direct = swap_network_estimate(rho, &spin_flip(rho), shots, seed)?;
    let per_setting = (shots / 3u64.pow(rho.n_qubits() as u32)).max(1);
    let tomo = tomography_simulate(rho, Shots::PerSetting(per_setting), seed)?;
    Ok(EstimatorComparison { direct, tomo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{named_state, random_mixed, NamedState};
    use crate::stokes::stokes_tensor;

    fn named(s: NamedState) -> DensityMatrix {
        named_state(&s).unwrap().density()
    }

    #[test]
    fn sub_seeds_are_distinct_and_stable() {
        let a = sub_seed(1, ROUTE_TOMO, 0, 0);
        assert_eq!(a, sub_seed(1, ROUTE_TOMO, 0, 0));
        assert_ne!(a, sub_seed(1, ROUTE_TOMO, 1, 0));
        assert_ne!(a, sub_seed(1, ROUTE_TOMO, 0, 1));
        assert_ne!(a, sub_seed(2, ROUTE_TOMO, 0, 0));
        assert_ne!(a, sub_seed(1, ROUTE_SWAP, 0, 0));
    }

    #[test]
    fn batches_cover_all_shots() {
        let total: u64 = batch_sizes(3 * BATCH + 7).map(|(_, s)| s).sum();
        assert_eq!(total, 3 * BATCH + 7);
        assert_eq!(batch_sizes(BATCH).count(), 1);
    }

    #[test]
    fn identical_pure_states_give_unit_visibility() {
        let psi = named(NamedState::Ghz(3));
        for shots in [1, 10, 1_000_000] {
            let r = swap_network_estimate(&psi, &psi, shots, 4).unwrap();
            assert_eq!(r.estimate, 1.0);
            assert_eq!(r.std_error, 0.0);
        }
    }

    #[test]
    fn orthogonal_states_concentrate_at_zero() {
        let a = named(NamedState::Basis("01".into()));
        let b = named(NamedState::Basis("10".into()));
        let r = swap_network_estimate(&a, &b, 100_000, 9).unwrap();
        assert_eq!(r.exact, Some(0.0));
        assert!(r.estimate.abs() < 5.0 * r.std_error);
    }

    #[test]
    fn swap_errors() {
        let a = DensityMatrix::maximally_mixed(1).unwrap();
        let b = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(matches!(swap_network_estimate(&a, &a, 0, 0), Err(Error::ZeroShots)));
        assert!(matches!(
            swap_network_estimate(&a, &b, 10, 0),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn swap_is_deterministic() {
        let a = random_mixed(2, 3, 1).unwrap();
        let r1 = swap_network_estimate(&a, &spin_flip(&a), 3 * BATCH + 11, 77).unwrap();
        let r2 = swap_network_estimate(&a, &spin_flip(&a), 3 * BATCH + 11, 77).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn infinite_shots_reproduce_tensor() {
        for n in 1..=3 {
            let rho = random_mixed(n, 2, 19 + n as u64).unwrap();
            let t = tomography_simulate(&rho, Shots::Infinite, 0).unwrap();
            let exact = stokes_tensor(&rho).unwrap();
            for (a, b) in t.stokes_hat.values().iter().zip(exact.values()) {
                assert!((a - b).abs() < 1e-10);
            }
            assert!(t.infinite_shots && t.psd_ok && t.invariant_std_error == 0.0);
        }
    }

    #[test]
    fn deterministic_outcome_is_exact() {
        let zero = named(NamedState::Basis("0".into()));
        let t = tomography_simulate(&zero, Shots::PerSetting(1000), 5).unwrap();
        let s = t.stokes_hat.values();
        assert_eq!(s[0], 1.0);
        assert_eq!(s[3], 1.0);
        let bound = 3.0 / 1000f64.sqrt();
        assert!(s[1].abs() <= bound && s[2].abs() <= bound);
    }

    #[test]
    fn bell_tomography_fixed_seed() {
        let t = tomography_simulate(&named(NamedState::BellPhiPlus), Shots::PerSetting(10_000), 2024).unwrap();
        assert!((t.invariant_hat - 1.0).abs() <= 0.05);
        for v in t.stokes_hat.values() {
            assert!((-1.0..=1.0).contains(v));
        }
    }

    #[test]
    fn tomography_errors() {
        let rho = DensityMatrix::maximally_mixed(1).unwrap();
        assert!(matches!(
            tomography_simulate(&rho, Shots::PerSetting(0), 0),
            Err(Error::ZeroShots)
        ));
    }

    #[test]
    fn tomography_is_deterministic() {
        let rho = random_mixed(3, 4, 2).unwrap();
        let a = tomography_simulate(&rho, Shots::PerSetting(500), 8).unwrap();
        let b = tomography_simulate(&rho, Shots::PerSetting(500), 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn compare_splits_budget() {
        let r = estimator_compare(&named(NamedState::BellPhiPlus), 90_000, 3).unwrap();
        assert_eq!(r.tomo.shots_per_setting, 10_000);
        assert_eq!(r.direct.shots, 90_000);
        assert_eq!(r.direct.estimate, 1.0);
        let r = estimator_compare(&named(NamedState::Ghz(3)), 5, 3).unwrap();
        assert_eq!(r.tomo.shots_per_setting, 1);
    }
}
