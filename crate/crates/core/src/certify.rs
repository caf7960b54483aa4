//! Likelihood-gap hierarchy: train the unconstrained reference and one
//! constrained model per partition, then turn persistent gaps into a lower
//! bound on entanglement depth.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::measure::{empirical_frequencies, FrequencyTable, MeasurementDataset};
use crate::nqs::ModelSpec;
use crate::partitions::{enumerate_partitions, parse_label, Partition};
use crate::qcore::{hs_distance, hs_overlap, DensityMatrix};
use crate::rng::derive_seed;
use crate::train::{fit, TrainConfig, TrainResult};
use crate::{Error, Result};

/// Gap threshold for pure targets, nats per shot.
pub const DEFAULT_THRESHOLD: f64 = 0.05;
/// Gap threshold for noisy (mixed) targets.
pub const DEFAULT_MIXED_THRESHOLD: f64 = 0.01;
/// Label of the reference row.
pub const REFERENCE_LABEL: &str = "unconstrained";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchySpec {
    pub partitions: Vec<Partition>,
    pub include_full: bool,
    pub threshold: f64,
    pub train_config: TrainConfig,
    pub replicas: usize,
}

impl HierarchySpec {
    pub fn new(partitions: Vec<Partition>, threshold: f64, train_config: TrainConfig) -> Self {
        HierarchySpec {
            partitions,
            include_full: true,
            threshold,
            train_config,
            replicas: 1,
        }
    }

    /// Mixture rank used for every model of the hierarchy.
    pub fn rank(&self) -> usize {
        self.train_config.ensemble_rank.unwrap_or(1)
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let mut problems = self.train_config.violations();
        if self.partitions.is_empty() {
            problems.push("hierarchy has no partitions".to_string());
        }
        if !(self.threshold > 0.0) {
            problems.push(format!(
                "threshold must be positive (got {})",
                self.threshold
            ));
        }
        if self.replicas == 0 {
            problems.push("replicas must be at least 1".to_string());
        }
        for p in &self.partitions {
            if p.n_qubits() != n_qubits {
                problems.push(format!(
                    "partition {p} covers {} qubits, data has {n_qubits}",
                    p.n_qubits()
                ));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }
}

/// Named partition lists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HierarchyKind {
    /// Six-qubit list {1|5, 2|4, 3|3, 2|2|2, 1|1|1|1|1|1}.
    Benchmark6,
    /// The twenty ten-qubit partitions of the cluster-product benchmark.
    Benchmark10,
    /// Contiguous ladder: for each k < n, blocks of size k plus a remainder.
    Generic,
}

const BENCHMARK6: [&str; 5] = ["1|5", "2|4", "3|3", "2|2|2", "1|1|1|1|1|1"];
const BENCHMARK10: [&str; 20] = [
    "6|4",
    "3|7",
    "3|3|4",
    "4|6",
    "4|2|4",
    "5|1|4",
    "3|4|3",
    "7|3",
    "2|4|4",
    "1|5|4",
    "5|5",
    "4|1|5",
    "4|3|3",
    "4|5|1",
    "1|4|5",
    "4|4|2",
    "1|8|1",
    "5|4|1",
    "2|2|2|2|2",
    "1|1|1|1|1|1|1|1|1|1",
];

impl HierarchyKind {
    /// Benchmark list for n = 6 or 10, generic ladder otherwise.
    pub fn for_qubits(n: usize) -> Self {
        match n {
            6 => HierarchyKind::Benchmark6,
            10 => HierarchyKind::Benchmark10,
            _ => HierarchyKind::Generic,
        }
    }

    pub fn partitions(self, n: usize) -> Result<Vec<Partition>> {
        let labels: &[&str] = match self {
            HierarchyKind::Benchmark6 => &BENCHMARK6,
            HierarchyKind::Benchmark10 => &BENCHMARK10,
            HierarchyKind::Generic => return generic_ladder(n),
        };
        labels.iter().map(|l| parse_label(l, n)).collect()
    }
}

fn generic_ladder(n: usize) -> Result<Vec<Partition>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for k in 1..n {
        let mut sizes = vec![k; n / k];
        if !n.is_multiple_of(k) {
            sizes.push(n % k);
        }
        let p = Partition::contiguous(&sizes)?;
        if seen.insert(p.label()) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Named hierarchy with the threshold and ensemble rank suited to the target.
pub fn default_hierarchy(kind: HierarchyKind, n: usize, mixed: bool) -> Result<HierarchySpec> {
    let train_config = TrainConfig {
        ensemble_rank: Some(if mixed { 4 } else { 1 }),
        ..TrainConfig::default()
    };
    let threshold = if mixed {
        DEFAULT_MIXED_THRESHOLD
    } else {
        DEFAULT_THRESHOLD
    };
    Ok(HierarchySpec::new(
        kind.partitions(n)?,
        threshold,
        train_config,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub label: String,
    pub d_max: usize,
    pub nll: f64,
    pub delta: f64,
    pub hs_overlap: Option<f64>,
    pub hs_distance: Option<f64>,
    pub reference: bool,
}

/// How well the tested set covers the partitions with largest block ≤ k.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCoverage {
    pub k: usize,
    pub tested: usize,
    pub total: u64,
    pub exhaustive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub n_qubits: usize,
    pub reference_nll: f64,
    /// Sorted by ascending delta (ties by label).
    pub rows: Vec<GapRow>,
    pub threshold: f64,
    pub certified_k: usize,
    pub decision: String,
    pub coverage: Vec<LevelCoverage>,
    /// k levels with no tested partition of largest block exactly k.
    pub untested_levels: Vec<usize>,
}

impl GapReport {
    pub fn row(&self, label: &str) -> Option<&GapRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .max()
            .unwrap_or(0)
            .max(9);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# gaps in nats per shot, reference NLL {:.6}",
            self.reference_nll
        );
        let _ = writeln!(
            out,
            "{:<width$}  {:>5}  {:>9}  {:>7}  {:>7}",
            "Partition", "d_max", "Delta", "F_HS", "D_HS"
        );
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>5}  {:>9.3}  {:>7}  {:>7}",
                r.label,
                r.d_max,
                r.delta,
                opt(r.hs_overlap),
                opt(r.hs_distance)
            );
        }
        out
    }

    /// Certificate line.
    pub fn certificate(&self) -> String {
        if self.certified_k == 0 {
            format!(
                "certified: none at threshold {} ({})",
                self.threshold, self.decision
            )
        } else {
            format!(
                "certified: d_e > {} at threshold {}",
                self.certified_k, self.threshold
            )
        }
    }
}

/// One training run of the hierarchy.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub label: String,
    pub partition: Partition,
    pub replica: usize,
    pub seed: u64,
    pub result: TrainResult,
}

/// Report plus every individual run (all replicas).
#[derive(Clone, Debug)]
pub struct GapRun {
    pub report: GapReport,
    pub runs: Vec<RunRecord>,
}

impl GapRun {
    /// The kept (lowest-NLL) run for a label.
    pub fn best_run(&self, label: &str) -> Option<&RunRecord> {
        self.runs
            .iter()
            .filter(|r| r.label == label)
            .min_by(|a, b| {
                a.result
                    .best_nll
                    .total_cmp(&b.result.best_nll)
                    .then(a.replica.cmp(&b.replica))
            })
    }
}

/// Train every model of the hierarchy on `dataset` and compute gaps.
/// The returned report is not yet certified; see [`certify_depth`].
pub fn likelihood_gaps(
    dataset: &MeasurementDataset,
    spec: &HierarchySpec,
    truth: Option<&DensityMatrix>,
    workers: usize,
) -> Result<GapRun> {
    let freq = empirical_frequencies(dataset)?;
    gaps_from_frequencies(&freq, spec, truth, workers)
}

/// [`likelihood_gaps`] on a precomputed frequency table.
pub fn gaps_from_frequencies(
    freq: &FrequencyTable,
    spec: &HierarchySpec,
    truth: Option<&DensityMatrix>,
    workers: usize,
) -> Result<GapRun> {
    let n = freq.n_qubits();
    spec.validate(n)?;
    if let Some(t) = truth {
        if t.n_qubits() != n {
            return Err(Error::invalid("ground-truth state does not match the data"));
        }
    }
    let full = Partition::full(n);
    let mut models: Vec<(String, Partition)> = vec![(REFERENCE_LABEL.to_string(), full.clone())];
    let mut seen = BTreeSet::new();
    for p in &spec.partitions {
        if p.is_full() || !seen.insert(p.label()) {
            continue;
        }
        models.push((p.label(), p.clone()));
    }
    let jobs: Vec<(usize, usize)> = (0..models.len())
        .flat_map(|m| (0..spec.replicas).map(move |r| (m, r)))
        .collect();
    let rank = spec.rank();
    let run = |&(m, replica): &(usize, usize)| -> (usize, usize, u64, Result<TrainResult>) {
        let (label, partition) = &models[m];
        let seed = derive_seed(spec.train_config.seed, label, replica as u64);
        let config = TrainConfig {
            seed,
            ..spec.train_config.clone()
        };
        let model_spec = ModelSpec::for_partition(partition, rank);
        (m, replica, seed, fit(&model_spec, freq, &config))
    };
    let outcomes: Vec<_> = if workers <= 1 {
        jobs.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run).collect())
    };

    let mut failed = Vec::new();
    let mut details = Vec::new();
    let mut runs = Vec::with_capacity(outcomes.len());
    for (m, replica, seed, res) in outcomes {
        let (label, partition) = &models[m];
        match res {
            Ok(result) => runs.push(RunRecord {
                label: label.clone(),
                partition: partition.clone(),
                replica,
                seed,
                result,
            }),
            Err(e) => {
                if !failed.contains(label) {
                    failed.push(label.clone());
                }
                details.push(format!("{label} replica {replica}: {e}"));
            }
        }
    }
    if !failed.is_empty() {
        return Err(Error::HierarchyFailed {
            labels: failed,
            details: details.join("; "),
        });
    }

    let mut gap_run = GapRun {
        report: GapReport {
            n_qubits: n,
            reference_nll: 0.0,
            rows: Vec::new(),
            threshold: spec.threshold,
            certified_k: 0,
            decision: String::new(),
            coverage: Vec::new(),
            untested_levels: Vec::new(),
        },
        runs,
    };
    let reference_nll = gap_run
        .best_run(REFERENCE_LABEL)
        .expect("reference run")
        .result
        .best_nll;
    let mut rows = Vec::with_capacity(models.len());
    for (label, partition) in &models {
        let best = gap_run.best_run(label).expect("one run per model");
        let (hs_o, hs_d) = match truth {
            Some(t) if n <= 10 => {
                let rho = best.result.best_model.density()?;
                (Some(hs_overlap(&rho, t)?), Some(hs_distance(&rho, t)?))
            }
            _ => (None, None),
        };
        let reference = label == REFERENCE_LABEL;
        rows.push(GapRow {
            label: label.clone(),
            d_max: partition.d_max(),
            nll: best.result.best_nll,
            delta: if reference {
                0.0
            } else {
                best.result.best_nll - reference_nll
            },
            hs_overlap: hs_o,
            hs_distance: hs_d,
            reference,
        });
    }
    rows.sort_by(|a, b| a.label.cmp(&b.label));
    rows.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    gap_run.report.reference_nll = reference_nll;
    gap_run.report.rows = rows;
    gap_run.report.coverage = coverage(
        n,
        &models
            .iter()
            .skip(1)
            .map(|(_, p)| p.clone())
            .collect::<Vec<_>>(),
    )?;
    gap_run.report.untested_levels = (1..n)
        .filter(|k| !models.iter().skip(1).any(|(_, p)| p.d_max() == *k))
        .collect();
    Ok(gap_run)
}

fn coverage(n: usize, tested: &[Partition]) -> Result<Vec<LevelCoverage>> {
    let mut exact = vec![0u64; n + 1];
    if n <= crate::MAX_QUBITS {
        for p in enumerate_partitions(n)? {
            exact[p.d_max()] += 1;
        }
    }
    let distinct: BTreeSet<&Partition> = tested.iter().collect();
    let mut total = 0;
    Ok((1..n)
        .map(|k| {
            total += exact[k];
            let count = distinct.iter().filter(|p| p.d_max() <= k).count();
            LevelCoverage {
                k,
                tested: count,
                total,
                exhaustive: count as u64 == total,
            }
        })
        .collect())
}

/// Largest k < n for which every tested partition with largest block ≤ k
/// (at least one) has a gap above `threshold`; 0 if none.
pub fn certified_level(rows: &[GapRow], n_qubits: usize, threshold: f64) -> usize {
    (1..n_qubits)
        .rev()
        .find(|&k| {
            let mut members = rows
                .iter()
                .filter(|r| !r.reference && r.d_max <= k)
                .peekable();
            members.peek().is_some() && members.all(|r| r.delta > threshold)
        })
        .unwrap_or(0)
}

/// Apply the threshold rule and fill the decision fields.
pub fn certify_depth(mut report: GapReport, threshold: f64) -> GapReport {
    report.threshold = threshold;
    report.certified_k = certified_level(&report.rows, report.n_qubits, threshold);
    report.decision = if report.certified_k == 0 {
        "no non-separability certified".to_string()
    } else {
        let spot = report
            .coverage
            .iter()
            .any(|c| c.k <= report.certified_k && !c.exhaustive);
        format!(
            "d_e > {}{}",
            report.certified_k,
            if spot {
                " over the tested partitions (not exhaustive)"
            } else {
                ""
            }
        )
    };
    report
}

#[cfg(test)]
mod tests;
