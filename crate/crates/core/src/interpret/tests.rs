use super::*;
use crate::measure::{empirical_frequencies, sample_bases, sample_dataset};
use crate::nqs::{init_model, InitConfig, ModelSpec};
use crate::partitions::Partition;
use crate::qcore::{build_bell_pairs, build_ghz, Bitstring, StateVector};
use crate::train::{fit, TrainConfig};
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

fn bell() -> QuantumState {
    build_bell_pairs(1).unwrap().into()
}

#[test]
fn bell_zz_from_data() {
    let data = sample_dataset(&bell(), &["ZZ".parse().unwrap()], 100_000, 1).unwrap();
    let t = data_correlators(&data).unwrap();
    assert_abs_diff_eq!(t.get(0, 1, Axis::Z, Axis::Z).unwrap(), 1.0, epsilon = 0.02);
    assert_eq!(t.support(0, 1, Axis::Z, Axis::Z), Some(100_000));
    assert!(t.get(0, 1, Axis::X, Axis::X).is_none());
    assert_eq!(t.support(0, 1, Axis::X, Axis::X), Some(0));
    assert!(!t.is_complete(0, 1));
}

#[test]
fn product_state_has_no_connected_correlations() {
    let state: QuantumState = StateVector::basis_state(2, 0).unwrap().into();
    let data = sample_dataset(&state, &BasisPattern::all(2), 50_000, 2).unwrap();
    let t = data_correlators(&data).unwrap();
    for a in Axis::ALL {
        for b in Axis::ALL {
            assert!(t.get(0, 1, a, b).unwrap().abs() < 0.02);
        }
    }
}

#[test]
fn support_counts_cover_every_shot() {
    let state: QuantumState = build_ghz(4, None).unwrap().into();
    let data = sample_dataset(&state, &sample_bases(4, 30, 3).unwrap(), 50, 4).unwrap();
    let t = data_correlators(&data).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            if i == j {
                continue;
            }
            let total: usize = Axis::ALL
                .iter()
                .flat_map(|a| Axis::ALL.iter().map(move |b| (*a, *b)))
                .map(|(a, b)| t.support(i, j, a, b).unwrap())
                .sum();
            assert_eq!(total, data.n_shots());
            for a in Axis::ALL {
                for b in Axis::ALL {
                    match (t.get(i, j, a, b), t.get(j, i, b, a)) {
                        (Some(x), Some(y)) => assert_abs_diff_eq!(x, y, epsilon = 1e-10),
                        (None, None) => {}
                        _ => panic!("asymmetric presence"),
                    }
                }
            }
        }
    }
}

#[test]
fn exact_bell_correlators() {
    let t = state_correlators(&bell()).unwrap();
    assert_abs_diff_eq!(t.get(0, 1, Axis::X, Axis::X).unwrap(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(
        t.get(0, 1, Axis::Y, Axis::Y).unwrap(),
        -1.0,
        epsilon = 1e-12
    );
    assert_abs_diff_eq!(t.get(0, 1, Axis::Z, Axis::Z).unwrap(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(t.get(0, 1, Axis::X, Axis::Z).unwrap(), 0.0, epsilon = 1e-12);
    let c = aggregate_cij(&t);
    assert_abs_diff_eq!(c.get(0, 1), 3f64.sqrt(), epsilon = 1e-12);
    assert_eq!(c.get(0, 0), 0.0);
    assert!(c.complete.as_ref().unwrap()[1]);
}

#[test]
fn ghz3_zz_correlators() {
    let t = state_correlators(&build_ghz(3, None).unwrap().into()).unwrap();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        assert_abs_diff_eq!(t.get(i, j, Axis::Z, Axis::Z).unwrap(), 1.0, epsilon = 1e-12);
    }
}

#[test]
fn separable_model_has_no_cross_block_correlators() {
    let p = Partition::contiguous(&[2, 2]).unwrap();
    let cfg = InitConfig {
        hidden_amp: 3,
        hidden_phase: 3,
        init_std: 0.8,
        block_hidden: None,
    };
    let model = init_model(&ModelSpec::Separable(p), 4, &cfg, 6).unwrap();
    let t = model_correlators(&model).unwrap();
    for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
        for a in Axis::ALL {
            for b in Axis::ALL {
                assert!(t.get(i, j, a, b).unwrap().abs() < 1e-8);
            }
        }
    }
    assert!(aggregate_cij(&t).get(0, 1) > 1e-4);
}

#[test]
fn trained_model_matches_data_correlators() {
    for state in [bell(), build_ghz(3, None).unwrap().into()] {
        let n = state.n_qubits();
        let data = sample_dataset(&state, &sample_bases(n, 200, 7).unwrap(), 2000, 8).unwrap();
        let freq = empirical_frequencies(&data).unwrap();
        let cfg = TrainConfig {
            steps: 1500,
            hidden_amp: 8,
            hidden_phase: 8,
            seed: 2,
            ..TrainConfig::default()
        };
        let res = fit(&ModelSpec::Pure, &freq, &cfg).unwrap();
        let overlap =
            crate::qcore::hs_overlap(&res.best_model.density().unwrap(), &state.to_density())
                .unwrap();
        assert!(overlap >= 0.99, "overlap {overlap}");
        let from_data = data_correlators(&data).unwrap();
        let from_model = model_correlators(&res.best_model).unwrap();
        for i in 0..n {
            for j in 0..n {
                for a in Axis::ALL {
                    for b in Axis::ALL {
                        if let Some(d) = from_data.get(i, j, a, b) {
                            let m = from_model.get(i, j, a, b).unwrap();
                            assert!((d - m).abs() <= 0.03, "{i}{j} {a:?}{b:?}: {d} vs {m}");
                        }
                    }
                }
            }
        }
    }
}

fn with_weights(n: usize, h: usize, w: &[f64]) -> PureNqs {
    let mut m = PureNqs::zeros(n, h, h);
    m.amplitude.weights.copy_from_slice(w);
    m.phase.weights.copy_from_slice(w);
    m
}

#[test]
fn rank_one_coupling() {
    let m = with_weights(4, 1, &[1.0, 1.0, 0.0, 0.0]);
    let j = coupling_matrix(&m, Half::Amplitude);
    for a in 0..4 {
        for b in 0..4 {
            if a != b {
                let want = if (a, b) == (0, 1) || (a, b) == (1, 0) {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(j.get(a, b), want);
            }
        }
    }
    let norm = j.normalized_abs();
    assert_eq!(norm.get(0, 1), 1.0);
    assert!(!norm.degenerate);
}

#[test]
fn affinity_extremes() {
    // rows: q0 = q1, q2 far away
    let m = with_weights(3, 2, &[1.0, 0.0, 1.0, 0.0, -2.0, 3.0]);
    let a = affinity_matrix(&m, Half::Phase).unwrap();
    assert_eq!(a.get(0, 1), 1.0);
    assert_eq!(a.get(0, 2), 0.0);
    for i in 0..3 {
        assert_eq!(a.get(i, i), 1.0);
    }
    let flat = affinity_matrix(&with_weights(3, 1, &[0.5, 0.5, 0.5]), Half::Amplitude).unwrap();
    assert!(flat.degenerate);
    assert!(flat.values.iter().all(|v| *v == 1.0));
    assert!(affinity_matrix(&PureNqs::zeros(1, 2, 2), Half::Amplitude).is_err());
}

#[test]
fn grid_uses_six_significant_digits() {
    assert_eq!(format_sig(1.7320508), "1.73205");
    assert_eq!(format_sig(0.000123456789), "0.000123457");
    assert_eq!(format_sig(-2.5), "-2.5");
    assert_eq!(format_sig(1234567.0), "1.23457e6");
    assert_eq!(format_sig(0.0), "0");
    let m = PairMatrix::new(2, vec![1.0, 0.5, 0.5, 1.0]);
    assert_eq!(m.to_grid(), "1 0.5\n0.5 1\n");
}

fn random_pure(n: usize, h: usize, seed: u64) -> PureNqs {
    let cfg = InitConfig {
        hidden_amp: h,
        hidden_phase: h,
        init_std: 1.0,
        block_hidden: None,
    };
    match init_model(&ModelSpec::Pure, n, &cfg, seed).unwrap() {
        NqsModel::Pure(m) => m,
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coupling_is_symmetric_psd(seed in 0u64..500) {
        let j = coupling_matrix(&random_pure(5, 3, seed), Half::Amplitude);
        let mut mat = nalgebra::DMatrix::<f64>::zeros(5, 5);
        for a in 0..5 {
            for b in 0..5 {
                prop_assert!((j.get(a, b) - j.get(b, a)).abs() < 1e-10);
                mat[(a, b)] = j.get(a, b);
            }
        }
        let eig = nalgebra::SymmetricEigen::new(mat).eigenvalues;
        prop_assert!(eig.iter().all(|e| *e >= -1e-10));
    }

    #[test]
    fn affinity_is_permutation_equivariant(seed in 0u64..500, perm in Just((0..5usize).collect::<Vec<_>>()).prop_shuffle()) {
        let m = random_pure(5, 4, seed);
        let mut p = m.clone();
        for (new, &old) in perm.iter().enumerate() {
            p.amplitude.weights[new * 4..(new + 1) * 4].copy_from_slice(m.amplitude.row(old));
        }
        let a = affinity_matrix(&m, Half::Amplitude).unwrap();
        let b = affinity_matrix(&p, Half::Amplitude).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                prop_assert!((b.get(i, j) - a.get(perm[i], perm[j])).abs() < 1e-12);
                prop_assert!((0.0..=1.0).contains(&b.get(i, j)));
            }
        }
    }

    #[test]
    fn aggregation_is_monotone(a in 0usize..3, b in 0usize..3, seed in 0u64..100) {
        let cfg = InitConfig { hidden_amp: 3, hidden_phase: 3, init_std: 0.7, block_hidden: None };
        let model = init_model(&ModelSpec::Pure, 3, &cfg, seed).unwrap();
        let t = model_correlators(&model).unwrap();
        let before = aggregate_cij(&t);
        let mut cleared = t.clone();
        cleared.clear(0, 2, Axis::from_index(a), Axis::from_index(b));
        let after = aggregate_cij(&cleared);
        for (x, y) in after.values.iter().zip(&before.values) {
            prop_assert!(*x <= *y + 1e-15);
        }
    }
}

#[test]
fn bitstring_eigenvalue_convention() {
    let s = Bitstring::from_index(2, 0b01).unwrap();
    assert_eq!(s.eigenvalue(0), 1.0);
    assert_eq!(s.eigenvalue(1), -1.0);
}
