use depthcert_web::{born, demo_state, gap_table, partition_summary, sampled_correlations};

#[test]
fn ghz_born_distribution() {
    let p = born("ghz", "ZZZZ").unwrap();
    assert_eq!(p.len(), 16);
    assert!((p[0] - 0.5).abs() < 1e-12 && (p[15] - 0.5).abs() < 1e-12);
    let plus = born("plus", "XXX").unwrap();
    assert!((plus[0] - 1.0).abs() < 1e-12);
}

#[test]
fn rejects_bad_requests() {
    assert!(demo_state("bell", 3).is_err());
    assert!(demo_state("ghz", 9).is_err());
    assert!(demo_state("nope", 2).is_err());
    assert!(born("ghz", "ZQ").is_err());
    assert!(gap_table("ghz", 6, "3|3", 10, 1).is_err());
    assert!(gap_table("ghz", 4, "2|3", 10, 1).is_err());
    assert!(partition_summary(0).is_err());
}

#[test]
fn bell_pair_correlations() {
    let c = sampled_correlations("bell", 4, 120, 400, 3).unwrap();
    assert_eq!(c.len(), 16);
    assert!(c[1] > 1.5 && c[2 * 4 + 3] > 1.5);
    assert!(c[2] < 0.3 && c[4 + 3] < 0.3);
}

#[test]
fn gap_table_for_two_bell_pairs() {
    let text = gap_table("bell", 4, "2|2, 1|3", 600, 2).unwrap();
    assert!(text.contains("unconstrained") && text.contains("2|2") && text.contains("1|3"));
    assert!(text.contains("certified: "));
}

#[test]
fn partition_counts() {
    let s = partition_summary(4).unwrap();
    assert!(s.starts_with("B_4 = 15\n"));
    assert!(s.contains("\n2  7  "));
}
