use super::*;
use crate::measure::{sample_bases, sample_dataset};
use crate::qcore::{build_bell_pairs, QuantumState};
use proptest::prelude::*;

fn row(label: &str, d_max: usize, delta: f64) -> GapRow {
    GapRow {
        label: label.to_string(),
        d_max,
        nll: 1.0 + delta,
        delta,
        hs_overlap: None,
        hs_distance: None,
        reference: label == REFERENCE_LABEL,
    }
}

fn report(n: usize, rows: Vec<GapRow>) -> GapReport {
    GapReport {
        n_qubits: n,
        reference_nll: 1.0,
        rows,
        threshold: 0.0,
        certified_k: 0,
        decision: String::new(),
        coverage: Vec::new(),
        untested_levels: Vec::new(),
    }
}

fn six(deltas: [f64; 5]) -> GapReport {
    let mut rows = vec![row(REFERENCE_LABEL, 6, 0.0)];
    for (label, d) in BENCHMARK6.iter().zip(deltas) {
        let p = parse_label(label, 6).unwrap();
        rows.push(row(label, p.d_max(), d));
    }
    report(6, rows)
}

#[test]
fn named_hierarchies() {
    let six = HierarchyKind::Benchmark6.partitions(6).unwrap();
    assert_eq!(six.len(), 5);
    let ten = HierarchyKind::Benchmark10.partitions(10).unwrap();
    assert_eq!(ten.len(), 20);
    let labels: Vec<String> = ten.iter().map(Partition::label).collect();
    assert!(labels.contains(&"3|3|4".to_string()));
    assert!(labels.contains(&"2|2|2|2|2".to_string()));
    let ladder: Vec<String> = HierarchyKind::Generic
        .partitions(4)
        .unwrap()
        .iter()
        .map(Partition::label)
        .collect();
    assert_eq!(ladder, ["1|1|1|1", "2|2", "3|1"]);
    assert_eq!(HierarchyKind::for_qubits(10), HierarchyKind::Benchmark10);
    let mixed = default_hierarchy(HierarchyKind::Benchmark6, 6, true).unwrap();
    assert_eq!(mixed.rank(), 4);
    assert_eq!(mixed.threshold, DEFAULT_MIXED_THRESHOLD);
    assert_eq!(
        default_hierarchy(HierarchyKind::Benchmark6, 6, false)
            .unwrap()
            .rank(),
        1
    );
}

#[test]
fn all_gaps_large_certifies_n_minus_one() {
    let r = certify_depth(six([0.46, 0.5, 0.9, 1.2, 2.0]), 0.05);
    assert_eq!(r.certified_k, 5);
    assert!(r.certificate().contains("d_e > 5 at threshold 0.05"));
}

#[test]
fn a_vanishing_pair_gap_stops_at_one() {
    // 1|5, 2|4, 3|3, 2|2|2, 1^6
    let r = certify_depth(six([0.65, 0.0, 0.64, 0.0, 1.9]), 0.05);
    assert_eq!(r.certified_k, 1);
}

#[test]
fn nothing_above_threshold() {
    let r = certify_depth(six([0.01; 5]), 0.05);
    assert_eq!(r.certified_k, 0);
    assert_eq!(r.decision, "no non-separability certified");
    assert!(r.certificate().starts_with("certified: none"));
}

#[test]
fn levels_without_tested_partitions_are_skipped() {
    // Only 2|2|2 is tested: k = 1 has no members, k = 2 fires.
    let rows = vec![
        row(REFERENCE_LABEL, 6, 0.0),
        row("2|2|2", 2, 0.3),
        row("3|3", 3, 0.001),
    ];
    assert_eq!(certified_level(&rows, 6, 0.05), 2);
}

#[test]
fn coverage_marks_exhaustive_levels() {
    let all: Vec<Partition> = enumerate_partitions(4)
        .unwrap()
        .filter(|p| !p.is_full())
        .collect();
    let cov = coverage(4, &all).unwrap();
    assert!(cov.iter().all(|c| c.exhaustive));
    assert_eq!(cov.last().unwrap().total, 14);
    let some = coverage(4, &[Partition::contiguous(&[2, 2]).unwrap()]).unwrap();
    assert_eq!(
        some[0],
        LevelCoverage {
            k: 1,
            tested: 0,
            total: 1,
            exhaustive: false
        }
    );
    assert_eq!(some[1].tested, 1);
    assert_eq!(some[1].total, 1 + 9);
}

proptest! {
    #[test]
    fn certified_level_is_monotone_in_threshold(
        deltas in proptest::array::uniform5(-0.1f64..2.0),
        t1 in 0.001f64..1.0,
        t2 in 0.001f64..1.0,
    ) {
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let rep = six(deltas);
        prop_assert!(certified_level(&rep.rows, 6, hi) <= certified_level(&rep.rows, 6, lo));
    }
}

fn bell_data() -> MeasurementDataset {
    let state: QuantumState = build_bell_pairs(1).unwrap().into();
    sample_dataset(&state, &sample_bases(2, 20, 3).unwrap(), 300, 4).unwrap()
}

fn quick_spec(replicas: usize) -> HierarchySpec {
    let cfg = TrainConfig {
        steps: 300,
        hidden_amp: 4,
        hidden_phase: 4,
        seed: 5,
        ..TrainConfig::default()
    };
    HierarchySpec {
        replicas,
        ..HierarchySpec::new(vec![Partition::contiguous(&[1, 1]).unwrap()], 0.05, cfg)
    }
}

#[test]
fn gaps_on_a_bell_pair() {
    let data = bell_data();
    let truth = QuantumState::from(build_bell_pairs(1).unwrap()).to_density();
    let run = likelihood_gaps(&data, &quick_spec(2), Some(&truth), 1).unwrap();
    let rep = certify_depth(run.report.clone(), 0.05);
    assert_eq!(rep.rows.len(), 2);
    let reference = rep.row(REFERENCE_LABEL).unwrap();
    assert_eq!(reference.delta, 0.0);
    assert!(reference.hs_overlap.unwrap() > 0.9);
    let product = rep.row("1|1").unwrap();
    assert!(product.delta > 0.3);
    assert_eq!(rep.certified_k, 1);
    assert!(rep.rows.windows(2).all(|w| w[0].delta <= w[1].delta));

    // kept NLL is the minimum over replicas
    assert_eq!(run.runs.len(), 4);
    for label in [REFERENCE_LABEL, "1|1"] {
        let min = run
            .runs
            .iter()
            .filter(|r| r.label == label)
            .map(|r| r.result.best_nll)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(rep.row(label).unwrap().nll, min);
    }
    let seeds: BTreeSet<u64> = run.runs.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), 4);
}

#[test]
fn worker_count_does_not_change_results() {
    let data = bell_data();
    let a = likelihood_gaps(&data, &quick_spec(1), None, 1).unwrap();
    let b = likelihood_gaps(&data, &quick_spec(1), None, 3).unwrap();
    assert_eq!(a.report, b.report);
}

#[test]
fn invalid_hierarchy_lists_problems() {
    let mut spec = quick_spec(0);
    spec.threshold = 0.0;
    spec.partitions
        .push(Partition::contiguous(&[1, 2]).unwrap());
    match likelihood_gaps(&bell_data(), &spec, None, 1) {
        Err(Error::InvalidArgument(msg)) => {
            assert!(msg.contains("threshold"));
            assert!(msg.contains("replicas"));
            assert!(msg.contains("covers 3 qubits"));
        }
        other => panic!("unexpected {other:?}"),
    }
}
