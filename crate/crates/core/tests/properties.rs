use proptest::prelude::*;
use qstokes::estimator::{swap_network_estimate, tomography_simulate, Shots};
use qstokes::measures::{ckw_report, measure_report, MeasureReport};
use qstokes::qstate::{
    kron_all, named_state, partial_trace, random_mixed, random_pure, rng_from_seed, DensityMatrix, NamedState,
    PureState,
};
use qstokes::slocc::{apply_local_to_density, apply_lorentz_to_stokes, renormalize, LocalOperation};
use qstokes::stokes::{density_from_stokes, minkowski_invariant, spin_flip, stokes_tensor, MultiIndex, StokesTensor};

fn state(n: usize, rank_seed: usize, seed: u64) -> DensityMatrix {
    random_mixed(n, 1 + rank_seed % (1 << n), seed).unwrap()
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn report_gap(a: &MeasureReport, b: &MeasureReport) -> f64 {
    let opt = |x: Option<f64>, y: Option<f64>| match (x, y) {
        (Some(x), Some(y)) => (x - y).abs(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    [
        (a.purity - b.purity).abs(),
        (a.linearized_entropy - b.linearized_entropy).abs(),
        (a.stokes_scalar - b.stokes_scalar).abs(),
        max_gap(&a.per_qubit_polarization_sq, &b.per_qubit_polarization_sq),
        opt(a.concurrence, b.concurrence),
        opt(a.tangle, b.tangle),
        opt(a.three_tangle, b.three_tangle),
        opt(a.eof, b.eof),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn slocc_preserves_invariant(n in 1usize..=4, r in 0usize..16, seed in any::<u64>()) {
        let rho = state(n, r, seed);
        let op = LocalOperation::random_sl2c(n, &mut rng_from_seed(seed.wrapping_add(1)));
        let s = stokes_tensor(&rho).unwrap();
        let filtered = stokes_tensor(&apply_local_to_density(&rho, &op).unwrap()).unwrap();
        prop_assert!((minkowski_invariant(&s) - minkowski_invariant(&filtered)).abs() < 1e-8);
        let lorentz = apply_lorentz_to_stokes(&s, &op.lorentz().unwrap()).unwrap();
        prop_assert!(max_gap(lorentz.values(), filtered.values()) < 1e-8);
        let renormed = renormalize(&filtered).unwrap();
        let att = filtered.intensity();
        prop_assert!((minkowski_invariant(&renormed) * att * att - minkowski_invariant(&s)).abs() < 1e-8);
    }

    #[test]
    fn stokes_round_trip(n in 1usize..=4, r in 0usize..16, seed in any::<u64>()) {
        let rho = state(n, r, seed);
        let back = density_from_stokes(&stokes_tensor(&rho).unwrap()).unwrap();
        prop_assert!(back.psd_ok);
        prop_assert!(back.density.matrix().max_abs_diff(rho.matrix()) < 1e-12);
    }

    #[test]
    fn marginals_are_zero_padded_components(n in 2usize..=4, r in 0usize..16, seed in any::<u64>(), pick in any::<u16>()) {
        let rho = state(n, r, seed);
        let keep: Vec<usize> = (1..=n).filter(|k| pick & (1 << k) != 0).collect();
        prop_assume!(!keep.is_empty());
        let full = stokes_tensor(&rho).unwrap();
        let reduced = stokes_tensor(&partial_trace(&rho, &keep).unwrap()).unwrap();
        for m in 0..reduced.values().len() {
            let sub = MultiIndex::from_flat(m, keep.len());
            let mut digits = vec![0u8; n];
            for (slot, &q) in keep.iter().enumerate() {
                digits[q - 1] = sub.digits()[slot];
            }
            prop_assert!((reduced.values()[m] - full.at(&digits)).abs() < 1e-12);
        }
    }

    #[test]
    fn measures_are_local_unitary_invariant(n in 1usize..=3, r in 0usize..8, seed in any::<u64>()) {
        let rho = state(n, r, seed);
        let u = LocalOperation::random_su2(n, &mut rng_from_seed(seed ^ 0xabc));
        let rotated = apply_local_to_density(&rho, &u).unwrap().renormalized().unwrap();
        let gap = report_gap(&measure_report(&rho).unwrap(), &measure_report(&rotated).unwrap());
        prop_assert!(gap < 1e-8, "gap {gap}");
    }

    #[test]
    fn three_qubit_pure_reports_are_local_unitary_invariant(seed in any::<u64>()) {
        let psi = random_pure(3, seed).unwrap();
        let u = LocalOperation::random_su2(3, &mut rng_from_seed(seed ^ 0xdef));
        let rotated = PureState::normalized(3, kron_all(u.ops()).matvec(psi.amplitudes())).unwrap();
        let a = measure_report(&psi.density()).unwrap();
        let b = measure_report(&rotated.density()).unwrap();
        prop_assert!(a.three_tangle.is_some());
        prop_assert!(report_gap(&a, &b) < 1e-8);
        let (ca, cb) = (ckw_report(&psi).unwrap(), ckw_report(&rotated).unwrap());
        prop_assert!((ca.tau_abc - cb.tau_abc).abs() < 1e-8);
        prop_assert!((ca.s2_bc - cb.s2_bc).abs() < 1e-8);
    }

    #[test]
    fn documents_round_trip(n in 1usize..=3, r in 0usize..8, seed in any::<u64>()) {
        let rho = state(n, r, seed);
        let back: DensityMatrix = serde_json::from_str(&serde_json::to_string(&rho).unwrap()).unwrap();
        prop_assert_eq!(back.matrix(), rho.matrix());
        let s = stokes_tensor(&rho).unwrap();
        let back: StokesTensor = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        prop_assert_eq!(back, s);
        let op = LocalOperation::random_sl2c(n, &mut rng_from_seed(seed));
        let back: LocalOperation = serde_json::from_str(&serde_json::to_string(&op).unwrap()).unwrap();
        prop_assert_eq!(back, op);
    }
}

#[test]
fn swap_network_is_unbiased_with_calibrated_error() {
    let a = random_mixed(2, 3, 41).unwrap();
    let b = spin_flip(&a);
    let exact = minkowski_invariant(&stokes_tensor(&a).unwrap());
    let runs: Vec<_> = (0..200)
        .map(|seed| swap_network_estimate(&a, &b, 20_000, seed).unwrap())
        .collect();
    let mean = runs.iter().map(|r| r.estimate).sum::<f64>() / 200.0;
    let spread = (runs.iter().map(|r| (r.estimate - mean).powi(2)).sum::<f64>() / 199.0).sqrt();
    let reported = runs.iter().map(|r| r.std_error).sum::<f64>() / 200.0;
    assert!(
        (mean - exact).abs() < 4.0 * spread / 200f64.sqrt(),
        "mean {mean} exact {exact}"
    );
    assert!(
        (spread / reported - 1.0).abs() < 0.2,
        "spread {spread} reported {reported}"
    );
}

#[test]
fn tomography_components_are_unbiased() {
    let rho = random_mixed(2, 2, 43).unwrap();
    let exact = stokes_tensor(&rho).unwrap();
    let runs: Vec<StokesTensor> = (0..200)
        .map(|seed| {
            tomography_simulate(&rho, Shots::PerSetting(2_000), seed)
                .unwrap()
                .stokes_hat
        })
        .collect();
    for m in 1..16 {
        let xs: Vec<f64> = runs.iter().map(|s| s.values()[m]).collect();
        let mean = xs.iter().sum::<f64>() / 200.0;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 199.0).sqrt();
        assert!(
            (mean - exact.values()[m]).abs() <= 4.0 * sd / 200f64.sqrt() + 1e-12,
            "component {m}"
        );
    }
}

fn mean_tomography_error(rho: &DensityMatrix, per_setting: u64) -> f64 {
    let exact = minkowski_invariant(&stokes_tensor(rho).unwrap());
    (0..200)
        .map(|seed| {
            (tomography_simulate(rho, Shots::PerSetting(per_setting), seed)
                .unwrap()
                .invariant_hat
                - exact)
                .abs()
        })
        .sum::<f64>()
        / 200.0
}

/// Ratios of mean error between successive quadruplings of the shot count.
fn error_ratios(rho: &DensityMatrix) -> [f64; 2] {
    let e: Vec<f64> = [1_000, 4_000, 16_000]
        .iter()
        .map(|&k| mean_tomography_error(rho, k))
        .collect();
    [e[1] / e[0], e[2] / e[1]]
}

#[test]
fn tomography_error_halves_for_mixed_states() {
    for ratio in error_ratios(&random_mixed(2, 3, 5).unwrap()) {
        assert!((ratio - 0.5).abs() <= 0.15, "ratio {ratio}");
    }
}

/// Every nonzero Stokes component of Bell and GHZ states is ±1 with a deterministic
/// outcome, so the linear error term vanishes and the error falls off as 1/N.
#[test]
fn tomography_error_quarters_for_stabilizer_states() {
    for name in [NamedState::BellPhiPlus, NamedState::Ghz(3)] {
        for ratio in error_ratios(&named_state(&name).unwrap().density()) {
            assert!((ratio - 0.25).abs() <= 0.075, "{name:?} ratio {ratio}");
        }
    }
}
