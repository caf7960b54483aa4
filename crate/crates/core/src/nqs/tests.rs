use super::*;
use crate::partitions::parse_label;
use crate::qcore::{pair_negativity_pure, Axis, C64};
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

fn spins_of(x: usize, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if (x >> (n - 1 - i)) & 1 == 1 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

fn small_init(std: f64) -> InitConfig {
    InitConfig {
        hidden_amp: 3,
        hidden_phase: 4,
        init_std: std,
        block_hidden: None,
    }
}

#[test]
fn zero_parameters_give_uniform_state() {
    let m = PureNqs::zeros(4, 5, 5);
    let psi = m.state_vector().unwrap();
    let first = psi.amplitudes()[0];
    for a in psi.amplitudes() {
        assert_abs_diff_eq!(a.norm(), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!((a - first).norm(), 0.0, epsilon = 1e-12);
    }
}

#[test]
fn amplitude_matches_closed_form() {
    let n = 4;
    let NqsModel::Pure(m) = init_model(&ModelSpec::Pure, n, &small_init(0.7), 3).unwrap() else {
        unreachable!()
    };
    // Direct evaluation of the two hidden sums for every configuration.
    let raw: Vec<C64> = (0..1 << n)
        .map(|x| {
            let s = spins_of(x, n);
            let mut a = 0.0;
            let mut phi = 0.0;
            for i in 0..n {
                a += m.amplitude.visible_bias[i] * s[i];
                phi += m.phase.visible_bias[i] * s[i];
            }
            for h in 0..m.amplitude.n_hidden {
                let z: f64 = m.amplitude.hidden_bias[h]
                    + (0..n).map(|i| m.amplitude.weight(i, h) * s[i]).sum::<f64>();
                a += (2.0 * z.cosh()).ln();
            }
            for h in 0..m.phase.n_hidden {
                let z: f64 = m.phase.hidden_bias[h]
                    + (0..n).map(|i| m.phase.weight(i, h) * s[i]).sum::<f64>();
                phi += 2.0 / std::f64::consts::PI * z.tanh().atan() + 0.5;
            }
            assert_abs_diff_eq!(log_amplitude(&m, &s).unwrap(), a, epsilon = 1e-12);
            assert_abs_diff_eq!(phase_of(&m, &s).unwrap(), phi, epsilon = 1e-12);
            C64::from_polar(a.exp(), std::f64::consts::TAU * phi)
        })
        .collect();
    let norm = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let psi = m.state_vector().unwrap();
    for (got, want) in psi.amplitudes().iter().zip(&raw) {
        assert_abs_diff_eq!((got - want / norm).norm(), 0.0, epsilon = 1e-12);
    }
}

#[test]
fn spin_validation() {
    let m = PureNqs::zeros(3, 2, 2);
    assert!(log_amplitude(&m, &[1.0, 0.0, -1.0]).is_err());
    assert!(phase_of(&m, &[1.0, 1.0]).is_err());
    assert!(phase_of(&m, &[1.0, -1.0, 1.0]).is_ok());
}

#[test]
fn separable_state_has_no_cross_block_negativity() {
    let p = parse_label("{0,2}|{1,3}", 4).unwrap();
    let model = init_model(&ModelSpec::Separable(p), 4, &small_init(0.8), 11).unwrap();
    let psi = model.state_vector().unwrap();
    for (i, j) in [(0, 1), (0, 3), (2, 1), (2, 3)] {
        assert!(pair_negativity_pure(&psi, i, j).unwrap() < 1e-10);
    }
    // Within a block the RBM is free to entangle.
    assert!(pair_negativity_pure(&psi, 0, 2).unwrap() > 1e-6);
}

#[test]
fn separable_equals_masked_single_rbm() {
    for label in ["2|3", "{0,4}|{1,2}|{3}", "1|1|1|1|1"] {
        let p = parse_label(label, 5).unwrap();
        let NqsModel::Separable(s) =
            init_model(&ModelSpec::Separable(p), 5, &small_init(0.6), 5).unwrap()
        else {
            unreachable!()
        };
        let masked = s.masked_equivalent();
        let a = s.state_vector().unwrap();
        let b = masked.state_vector().unwrap();
        let overlap = a.inner(&b).unwrap().norm();
        assert_abs_diff_eq!(overlap, 1.0, epsilon = 1e-12);
    }
}

#[test]
fn ensemble_is_convex_mixture() {
    let p = Partition::contiguous(&[2, 1]).unwrap();
    let spec = ModelSpec::Ensemble {
        partition: Some(p),
        rank: 3,
    };
    let model = init_model(&spec, 3, &small_init(0.9), 2).unwrap();
    let basis: BasisPattern = "XYZ".parse().unwrap();
    let probs = model_born_probs(&model, &basis).unwrap();
    let NqsModel::Ensemble(e) = &model else {
        unreachable!()
    };
    let w = e.weights();
    assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
    let mut want = vec![0.0; 8];
    for (wk, c) in w.iter().zip(&e.components) {
        let pk = c
            .state_vector()
            .unwrap()
            .born_probabilities(&basis)
            .unwrap();
        for (a, b) in want.iter_mut().zip(pk) {
            *a += wk * b;
        }
    }
    for (a, b) in probs.iter().zip(&want) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-14);
    }
    let rho = ensemble_density(e).unwrap();
    rho.validate().unwrap();
    assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-12);
    let direct = rho.born_probabilities(&basis).unwrap();
    for (a, b) in probs.iter().zip(&direct) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }
}

#[test]
fn born_probabilities_reject_wrong_basis_length() {
    let model = init_model(&ModelSpec::Pure, 3, &small_init(0.1), 0).unwrap();
    assert!(model_born_probs(&model, &BasisPattern::uniform(2, Axis::X)).is_err());
}

#[test]
fn init_moments_match_requested_std() {
    let cfg = InitConfig {
        hidden_amp: 64,
        hidden_phase: 64,
        init_std: 0.01,
        block_hidden: None,
    };
    let model = init_model(&ModelSpec::Pure, 10, &cfg, 42).unwrap();
    let p = model.params();
    let n = p.len() as f64;
    let mean = p.iter().sum::<f64>() / n;
    let var = p.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    assert!(mean.abs() < 3.0 * 0.01 / n.sqrt());
    assert!((var.sqrt() - 0.01).abs() < 0.05 * 0.01);
}

#[test]
fn init_is_deterministic_per_seed() {
    let spec = ModelSpec::Ensemble {
        partition: Some(Partition::contiguous(&[1, 2]).unwrap()),
        rank: 2,
    };
    let a = init_model(&spec, 3, &small_init(0.1), 9).unwrap();
    let b = init_model(&spec, 3, &small_init(0.1), 9).unwrap();
    let c = init_model(&spec, 3, &small_init(0.1), 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.params(), c.params());
}

#[test]
fn init_rejects_bad_config() {
    let cfg = InitConfig {
        init_std: 0.0,
        ..small_init(0.1)
    };
    assert!(init_model(&ModelSpec::Pure, 3, &cfg, 0).is_err());
    let p = Partition::contiguous(&[2, 2]).unwrap();
    assert!(init_model(&ModelSpec::Separable(p), 3, &small_init(0.1), 0).is_err());
    assert!(init_model(
        &ModelSpec::Ensemble {
            partition: None,
            rank: 0
        },
        3,
        &small_init(0.1),
        0
    )
    .is_err());
}

#[test]
fn per_block_hidden_sizes() {
    let cfg = InitConfig {
        block_hidden: Some(vec![(2, 3), (5, 1)]),
        ..small_init(0.1)
    };
    let p = Partition::contiguous(&[1, 3]).unwrap();
    let NqsModel::Separable(s) = init_model(&ModelSpec::Separable(p), 4, &cfg, 0).unwrap() else {
        unreachable!()
    };
    assert_eq!(s.blocks[1].amplitude.n_hidden, 5);
    assert_eq!(s.blocks[1].phase.n_hidden, 1);
}

#[test]
fn params_round_trip() {
    let mut model = init_model(&ModelSpec::Pure, 3, &small_init(0.3), 1).unwrap();
    let mut p = model.params();
    assert_eq!(p.len(), model.n_params());
    p.iter_mut().for_each(|v| *v *= 2.0);
    model.set_params(&p);
    assert_eq!(model.params(), p);
    assert!(model.zeros_like().params().iter().all(|v| *v == 0.0));
}

fn round_trip(model: &NqsModel, seed: u64) {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, model, &CheckpointMeta { seed }).unwrap();
    let (back, meta) = read_checkpoint(&mut buf.as_slice()).unwrap();
    assert_eq!(meta.seed, seed);
    let a: Vec<u64> = model.params().iter().map(|v| v.to_bits()).collect();
    let b: Vec<u64> = back.params().iter().map(|v| v.to_bits()).collect();
    assert_eq!(a, b);
    assert_eq!(&back, model);
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let cfg = small_init(0.4);
    round_trip(&init_model(&ModelSpec::Pure, 4, &cfg, 1).unwrap(), 1);
    let p = parse_label("{0,3}|{1}|{2}", 4).unwrap();
    round_trip(
        &init_model(&ModelSpec::Separable(p.clone()), 4, &cfg, 2).unwrap(),
        2,
    );
    round_trip(
        &init_model(
            &ModelSpec::Ensemble {
                partition: Some(p),
                rank: 3,
            },
            4,
            &cfg,
            3,
        )
        .unwrap(),
        u64::MAX,
    );
    round_trip(
        &init_model(
            &ModelSpec::Ensemble {
                partition: None,
                rank: 2,
            },
            4,
            &cfg,
            4,
        )
        .unwrap(),
        0,
    );
}

#[test]
fn checkpoint_rejects_corruption() {
    let model = init_model(&ModelSpec::Pure, 3, &small_init(0.4), 1).unwrap();
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &model, &CheckpointMeta::default()).unwrap();
    let truncated = &buf[..buf.len() - 3];
    assert!(matches!(
        read_checkpoint(&mut &truncated[..]),
        Err(Error::Checkpoint(_))
    ));
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(read_checkpoint(&mut bad.as_slice()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn model_states_are_normalized(seed in 0u64..1000, std in 0.01f64..2.0) {
        let model = init_model(&ModelSpec::Pure, 4, &small_init(std), seed).unwrap();
        let psi = model.state_vector().unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separable_probs_factorize(seed in 0u64..1000) {
        let p = Partition::contiguous(&[2, 2]).unwrap();
        let model = init_model(&ModelSpec::Separable(p), 4, &small_init(0.8), seed).unwrap();
        let probs = model_born_probs(&model, &"XZYZ".parse().unwrap()).unwrap();
        let left: Vec<f64> = (0..4).map(|a| (0..4).map(|b| probs[a * 4 + b]).sum()).collect();
        let right: Vec<f64> = (0..4).map(|b| (0..4).map(|a| probs[a * 4 + b]).sum()).collect();
        for a in 0..4 {
            for b in 0..4 {
                prop_assert!((probs[a * 4 + b] - left[a] * right[b]).abs() < 1e-12);
            }
        }
    }
}
