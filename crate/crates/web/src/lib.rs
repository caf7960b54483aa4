//! Browser bindings: Born distributions, sampled pair correlators and a
//! small likelihood-gap run. The plain functions are usable (and tested)
//! natively; the `wasm_bindgen` wrappers only convert errors.

use depthcert::certify::{likelihood_gaps, HierarchySpec};
use depthcert::interpret::{aggregate_cij, data_correlators};
use depthcert::measure::{sample_bases, sample_dataset};
use depthcert::partitions::{bell_number, count_with_max_block, parse_label, stirling2};
use depthcert::qcore::{
    build_bell_pairs, build_dicke, build_ghz, BasisPattern, QuantumState, StateVector, C64,
};
use depthcert::train::TrainConfig;
use depthcert::{Error, Result};
use wasm_bindgen::prelude::*;

/// Largest register for the exact demos.
pub const MAX_DEMO_QUBITS: usize = 8;
/// Largest register for in-browser training.
pub const MAX_TRAIN_QUBITS: usize = 5;

/// Named demo states: "ghz", "bell" (n even), "w", "plus".
pub fn demo_state(kind: &str, n: usize) -> Result<StateVector> {
    if n == 0 || n > MAX_DEMO_QUBITS {
        return Err(Error::invalid(format!(
            "demo supports 1..={MAX_DEMO_QUBITS} qubits (got {n})"
        )));
    }
    match kind {
        "ghz" => build_ghz(n, None),
        "bell" if n.is_multiple_of(2) => build_bell_pairs(n / 2),
        "bell" => Err(Error::invalid("Bell pairs need an even qubit count")),
        "w" => build_dicke(n, 1),
        "plus" => StateVector::from_amplitudes(n, vec![C64::new(1.0, 0.0); 1 << n]),
        other => Err(Error::invalid(format!("unknown demo state '{other}'"))),
    }
}

/// Outcome distribution of `kind` measured in `basis` (e.g. "XZZY").
pub fn born(kind: &str, basis: &str) -> Result<Vec<f64>> {
    let basis: BasisPattern = basis.trim().parse()?;
    demo_state(kind, basis.len())?.born_probabilities(&basis)
}

/// Row-major n×n matrix of aggregated pair correlators estimated from a
/// freshly sampled dataset; pairs never measured jointly are NaN.
pub fn sampled_correlations(
    kind: &str,
    n: usize,
    n_bases: usize,
    shots: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let state: QuantumState = demo_state(kind, n)?.into();
    let bases = sample_bases(n, n_bases, seed)?;
    let data = sample_dataset(&state, &bases, shots, seed.wrapping_add(1))?;
    Ok(aggregate_cij(&data_correlators(&data)?).values)
}

/// Trains the unconstrained model and each listed partition (comma
/// separated labels) on sampled data; returns a text table and certificate.
pub fn gap_table(
    kind: &str,
    n: usize,
    partitions: &str,
    steps: usize,
    seed: u64,
) -> Result<String> {
    if n > MAX_TRAIN_QUBITS {
        return Err(Error::invalid(format!(
            "in-browser training is limited to {MAX_TRAIN_QUBITS} qubits"
        )));
    }
    let psi = demo_state(kind, n)?;
    let parts = partitions
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|l| parse_label(l, n))
        .collect::<Result<Vec<_>>>()?;
    let train = TrainConfig {
        steps,
        hidden_amp: 2 * n,
        hidden_phase: 2 * n,
        seed,
        ..TrainConfig::default()
    };
    let spec = HierarchySpec::new(parts, 0.05, train);
    let state: QuantumState = psi.into();
    let bases = sample_bases(n, 60, seed)?;
    let data = sample_dataset(&state, &bases, 500, seed.wrapping_add(1))?;
    let run = likelihood_gaps(&data, &spec, Some(&state.to_density()), 1)?;
    Ok(format!(
        "{}{}\n",
        run.report.to_table(),
        run.report.certificate()
    ))
}

/// Stirling row, Bell number and partition counts by largest block.
pub fn partition_summary(n: usize) -> Result<String> {
    if n == 0 || n > 12 {
        return Err(Error::invalid("partition summary supports 1..=12 elements"));
    }
    let mut out = format!(
        "B_{n} = {}\nk  S({n},k)  partitions with largest block <= k\n",
        bell_number(n)
    );
    for k in 1..=n {
        out.push_str(&format!(
            "{k}  {}  {}\n",
            stirling2(n, k),
            count_with_max_block(n, k)?
        ));
    }
    Ok(out)
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = bornDistribution)]
pub fn born_distribution(kind: &str, basis: &str) -> std::result::Result<Vec<f64>, JsError> {
    born(kind, basis).map_err(js)
}

#[wasm_bindgen(js_name = pairCorrelations)]
pub fn pair_correlations(
    kind: &str,
    n: usize,
    n_bases: usize,
    shots: usize,
    seed: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    sampled_correlations(kind, n, n_bases, shots, seed as u64).map_err(js)
}

#[wasm_bindgen(js_name = likelihoodGaps)]
pub fn likelihood_gap_table(
    kind: &str,
    n: usize,
    partitions: &str,
    steps: usize,
    seed: u32,
) -> std::result::Result<String, JsError> {
    gap_table(kind, n, partitions, steps, seed as u64).map_err(js)
}

#[wasm_bindgen(js_name = partitionSummary)]
pub fn partition_summary_js(n: usize) -> std::result::Result<String, JsError> {
    partition_summary(n).map_err(js)
}
