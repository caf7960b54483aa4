//! The subcommands, callable in-process.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use depthcert::certify::{
    certify_depth, gaps_from_frequencies, GapReport, GapRun, REFERENCE_LABEL,
};
use depthcert::interpret::{
    affinity_matrix, aggregate_cij, coupling_matrix, data_correlators, model_correlators, Half,
    PairMatrix,
};
use depthcert::measure::{
    empirical_frequencies, sample_bases, sample_dataset, MeasurementDataset, DATASET_MAGIC,
};
use depthcert::nqs::{
    load_checkpoint, write_checkpoint, CheckpointMeta, ModelSpec, NqsModel, CHECKPOINT_MAGIC,
};
use depthcert::partitions::{
    bell_number, count_with_max_block, enumerate_partitions, parse_label, stirling2,
};
use depthcert::qcore::{DensityMatrix, QuantumState};
use depthcert::rng::derive_seed;
use depthcert::train::{fit, write_loss_trace, TrainResult};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{
    io_err, label_slug, sha256_hex, write_atomic, write_json, Provenance, RunSeed,
};

pub const DATASET_FILE: &str = "dataset.txt";
pub const CONFIG_FILE: &str = "config.toml";
pub const PROVENANCE_FILE: &str = "provenance.json";

/// Simulated target and its measurement record.
pub fn simulate(cfg: &ExperimentConfig) -> Result<(QuantumState, MeasurementDataset), CliError> {
    cfg.validate(true)?;
    let target = cfg.target.as_ref().expect("validated");
    let state = target.build()?;
    let m = &cfg.measurement;
    let n = state.n_qubits();
    let bases = sample_bases(n, m.n_bases, derive_seed(m.seed, "bases", 0))?;
    let data = sample_dataset(&state, &bases, m.shots_per_basis, m.seed)?;
    Ok((state, data))
}

/// Config with the ensemble rank and threshold made explicit.
fn resolved(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut out = cfg.clone();
    out.hierarchy.threshold = Some(cfg.threshold());
    out.train = cfg.effective_train();
    out
}

fn provenance(
    cfg: &ExperimentConfig,
    command: &str,
    dataset_text: Option<&str>,
    runs: Vec<RunSeed>,
) -> Provenance {
    Provenance {
        tool: "depthcert",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        config_sha256: sha256_hex(cfg.to_toml().as_bytes()),
        measurement_seed: cfg.measurement.seed,
        train_seed: cfg.train.seed,
        run_seeds: runs,
        target: cfg.target.as_ref().map(|t| {
            if t.damping > 0.0 {
                format!(
                    "{} with amplitude damping p={}",
                    t.state.describe(),
                    t.damping
                )
            } else {
                t.state.describe()
            }
        }),
        dataset_sha256: dataset_text.map(|t| sha256_hex(t.as_bytes())),
        dataset_format: DATASET_MAGIC,
        checkpoint_format: CHECKPOINT_MAGIC,
        nll_units: "nats per shot",
    }
}

fn write_run_files(
    cfg: &ExperimentConfig,
    command: &str,
    dataset_text: Option<&str>,
    runs: Vec<RunSeed>,
) -> Result<Provenance, CliError> {
    let out = &cfg.output_dir;
    write_atomic(&out.join(CONFIG_FILE), cfg.to_toml().as_bytes())?;
    let prov = provenance(cfg, command, dataset_text, runs);
    write_json(&out.join(PROVENANCE_FILE), &prov)?;
    Ok(prov)
}

pub struct GenDataOutput {
    pub dataset_path: PathBuf,
    pub dataset: MeasurementDataset,
    pub state: QuantumState,
}

/// Simulate the configured target and write the dataset with provenance.
pub fn cmd_gen_data(cfg: &ExperimentConfig) -> Result<GenDataOutput, CliError> {
    let cfg = resolved(cfg);
    let (state, dataset) = simulate(&cfg)?;
    let text = dataset.to_text();
    let path = cfg.output_dir.join(DATASET_FILE);
    write_atomic(&path, text.as_bytes())?;
    write_run_files(&cfg, "gen-data", Some(&text), Vec::new())?;
    Ok(GenDataOutput {
        dataset_path: path,
        dataset,
        state,
    })
}

pub fn read_dataset(path: &Path) -> Result<MeasurementDataset, CliError> {
    let f = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    MeasurementDataset::read_from(std::io::BufReader::new(f))
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Dataset from `data`, or simulated from the config and written to the output directory.
fn obtain_dataset(
    cfg: &ExperimentConfig,
    data: Option<&Path>,
) -> Result<(MeasurementDataset, String, Option<DensityMatrix>), CliError> {
    let truth = |n: usize| -> Result<Option<DensityMatrix>, CliError> {
        match &cfg.target {
            Some(t) if t.state.n_qubits() == n && n <= 10 => Ok(Some(t.build()?.to_density())),
            _ => Ok(None),
        }
    };
    match data {
        Some(path) => {
            let ds = read_dataset(path)?;
            let text = ds.to_text();
            let t = truth(ds.n_qubits())?;
            Ok((ds, text, t))
        }
        None => {
            let (state, ds) = simulate(cfg)?;
            let text = ds.to_text();
            write_atomic(&cfg.output_dir.join(DATASET_FILE), text.as_bytes())?;
            let t = (state.n_qubits() <= 10).then(|| state.to_density());
            Ok((ds, text, t))
        }
    }
}

fn checkpoint_bytes(model: &NqsModel, seed: u64) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, model, &CheckpointMeta { seed })?;
    Ok(buf)
}

fn trace_bytes(trace: &[f64]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_loss_trace(&mut buf, trace)?;
    Ok(buf)
}

#[derive(Debug, Serialize)]
pub struct TrainSummary {
    pub partition: String,
    pub kind: &'static str,
    pub seed: u64,
    pub best_nll: f64,
    pub final_nll: f64,
    pub empirical_entropy: f64,
    pub hs_overlap: Option<f64>,
    pub wall_time: f64,
}

pub struct TrainOutput {
    pub result: TrainResult,
    pub summary: TrainSummary,
    pub checkpoint_path: PathBuf,
}

/// Train one model (unconstrained unless `partition` is given).
pub fn cmd_train(
    cfg: &ExperimentConfig,
    data: Option<&Path>,
    partition: Option<&str>,
) -> Result<TrainOutput, CliError> {
    let cfg = resolved(cfg);
    cfg.validate(data.is_none())?;
    let (dataset, text, truth) = obtain_dataset(&cfg, data)?;
    let n = dataset.n_qubits();
    let p = match partition {
        Some(l) => parse_label(l, n)?,
        None => depthcert::partitions::Partition::full(n),
    };
    let rank = cfg.train.ensemble_rank.unwrap_or(1);
    let spec = ModelSpec::for_partition(&p, rank);
    let freq = empirical_frequencies(&dataset)?;
    let result = fit(&spec, &freq, &cfg.train)?;
    let hs_overlap = match &truth {
        Some(t) => Some(depthcert::qcore::hs_overlap(
            &result.best_model.density()?,
            t,
        )?),
        None => None,
    };
    let label = if p.is_full() {
        REFERENCE_LABEL.to_string()
    } else {
        p.label()
    };
    let out = &cfg.output_dir;
    let checkpoint_path = out.join("model.ckpt");
    write_atomic(
        &checkpoint_path,
        &checkpoint_bytes(&result.best_model, cfg.train.seed)?,
    )?;
    write_atomic(
        &out.join("loss_trace.txt"),
        &trace_bytes(&result.loss_trace)?,
    )?;
    let summary = TrainSummary {
        partition: label,
        kind: result.best_model.kind(),
        seed: cfg.train.seed,
        best_nll: result.best_nll,
        final_nll: result.final_nll,
        empirical_entropy: freq.conditional_entropy(),
        hs_overlap,
        wall_time: result.wall_time,
    };
    write_json(&out.join("train_summary.json"), &summary)?;
    write_run_files(&cfg, "train", Some(&text), Vec::new())?;
    Ok(TrainOutput {
        result,
        summary,
        checkpoint_path,
    })
}

pub struct CertifyOutput {
    pub report: GapReport,
    pub run: GapRun,
    pub dataset: MeasurementDataset,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    label: &'a str,
    replica: usize,
    seed: u64,
    best_nll: f64,
    final_nll: f64,
    wall_time: f64,
}

/// Run the hypothesis hierarchy and write the gap table and certificate.
pub fn cmd_certify(cfg: &ExperimentConfig, data: Option<&Path>) -> Result<CertifyOutput, CliError> {
    let cfg = resolved(cfg);
    cfg.validate(data.is_none())?;
    let (dataset, text, truth) = obtain_dataset(&cfg, data)?;
    let spec = cfg.hierarchy_spec(dataset.n_qubits())?;
    let freq = empirical_frequencies(&dataset)?;
    let run = gaps_from_frequencies(&freq, &spec, truth.as_ref(), cfg.workers)?;
    let report = certify_depth(run.report.clone(), spec.threshold);

    let out = &cfg.output_dir;
    for r in &run.runs {
        let name = format!("{}_r{}.txt", label_slug(&r.label), r.replica);
        write_atomic(
            &out.join("traces").join(name),
            &trace_bytes(&r.result.loss_trace)?,
        )?;
    }
    for row in &report.rows {
        let best = run.best_run(&row.label).expect("row has a run");
        let name = format!("{}.ckpt", label_slug(&row.label));
        write_atomic(
            &out.join("checkpoints").join(name),
            &checkpoint_bytes(&best.result.best_model, best.seed)?,
        )?;
    }
    let mut table = report.to_table();
    let _ = writeln!(table, "\n{}", report.certificate());
    let _ = writeln!(table, "# decision: {}", report.decision);
    for c in &report.coverage {
        let _ = writeln!(
            table,
            "# k={}: {} of {} partitions with largest block <= k tested ({})",
            c.k,
            c.tested,
            c.total,
            if c.exhaustive {
                "exhaustive"
            } else {
                "spot-checked"
            }
        );
    }
    if !report.untested_levels.is_empty() {
        let levels: Vec<String> = report
            .untested_levels
            .iter()
            .map(usize::to_string)
            .collect();
        let _ = writeln!(
            table,
            "# untested largest-block sizes: {}",
            levels.join(", ")
        );
    }
    write_atomic(&out.join("gaps.txt"), table.as_bytes())?;
    write_atomic(
        &out.join("certificate.txt"),
        format!("{}\n", report.certificate()).as_bytes(),
    )?;

    let seeds: Vec<RunSeed> = run
        .runs
        .iter()
        .map(|r| RunSeed {
            label: r.label.clone(),
            replica: r.replica,
            seed: r.seed,
        })
        .collect();
    let prov = write_run_files(&cfg, "certify", Some(&text), seeds)?;
    let runs: Vec<RunSummary> = run
        .runs
        .iter()
        .map(|r| RunSummary {
            label: &r.label,
            replica: r.replica,
            seed: r.seed,
            best_nll: r.result.best_nll,
            final_nll: r.result.final_nll,
            wall_time: r.result.wall_time,
        })
        .collect();
    write_json(
        &out.join("report.json"),
        &serde_json::json!({
            "report": &report,
            "n_shots": dataset.n_shots(),
            "n_bases": freq.n_bases(),
            "empirical_entropy": freq.conditional_entropy(),
            "runs": runs,
            "provenance": prov,
        }),
    )?;
    Ok(CertifyOutput {
        report,
        run,
        dataset,
    })
}

pub struct InterpretOutput {
    pub files: Vec<PathBuf>,
    pub notice: Option<String>,
    pub cij_data: Option<PairMatrix>,
    pub cij_model: PairMatrix,
    pub coupling: [PairMatrix; 2],
    pub affinity: [PairMatrix; 2],
}

pub const UNCONSTRAINED_REQUIRED: &str = "coupling/affinity require the unconstrained model";

/// Correlation maps, couplings and affinities of a trained unconstrained model.
pub fn cmd_interpret(
    out_dir: &Path,
    checkpoint: &Path,
    data: Option<&Path>,
) -> Result<InterpretOutput, CliError> {
    let (model, _) = load_checkpoint(checkpoint).map_err(|e| match e {
        depthcert::Error::Io(err) => io_err(checkpoint, err),
        other => CliError::from(other),
    })?;
    let NqsModel::Pure(pure) = &model else {
        return Err(CliError::Validation(vec![format!(
            "{UNCONSTRAINED_REQUIRED} (checkpoint holds a {} model)",
            model.kind()
        )]));
    };
    let cij_data = match data {
        Some(p) => {
            let ds = read_dataset(p)?;
            if ds.n_qubits() != pure.n_qubits {
                return Err(CliError::Validation(vec![format!(
                    "dataset has {} qubits, model has {}",
                    ds.n_qubits(),
                    pure.n_qubits
                )]));
            }
            Some(aggregate_cij(&data_correlators(&ds)?))
        }
        None => None,
    };
    let cij_model = aggregate_cij(&model_correlators(&model)?);
    let coupling = [
        coupling_matrix(pure, Half::Amplitude).normalized_abs(),
        coupling_matrix(pure, Half::Phase).normalized_abs(),
    ];
    let affinity = [
        affinity_matrix(pure, Half::Amplitude)?,
        affinity_matrix(pure, Half::Phase)?,
    ];

    let mut files = Vec::new();
    let mut emit = |name: String, m: &PairMatrix| -> Result<(), CliError> {
        let path = out_dir.join(name);
        write_atomic(&path, m.to_grid().as_bytes())?;
        files.push(path);
        Ok(())
    };
    if let Some(c) = &cij_data {
        emit("cij_data.txt".into(), c)?;
    }
    emit("cij_model.txt".into(), &cij_model)?;
    for (half, (j, a)) in [Half::Amplitude, Half::Phase]
        .iter()
        .zip(coupling.iter().zip(&affinity))
    {
        emit(format!("coupling_{}.txt", half.name()), j)?;
        emit(format!("affinity_{}.txt", half.name()), a)?;
    }
    let notice = data.is_none().then(|| {
        "no dataset given: data correlation map skipped, model-only outputs written".to_string()
    });
    let json_path = out_dir.join("interpret.json");
    write_json(
        &json_path,
        &serde_json::json!({
            "checkpoint": checkpoint.display().to_string(),
            "cij_data": &cij_data,
            "cij_model": &cij_model,
            "coupling_amplitude": &coupling[0],
            "coupling_phase": &coupling[1],
            "affinity_amplitude": &affinity[0],
            "affinity_phase": &affinity[1],
            "coupling_normalization": "absolute value divided by the largest off-diagonal magnitude",
            "notice": &notice,
        }),
    )?;
    files.push(json_path);
    Ok(InterpretOutput {
        files,
        notice,
        cij_data,
        cij_model,
        coupling,
        affinity,
    })
}

/// Counting table for set partitions of `n` qubits, optionally listing them.
pub fn cmd_partitions(n: usize, list: bool, max_block: Option<usize>) -> Result<String, CliError> {
    if n == 0 {
        return Err(CliError::Validation(vec![
            "n must be at least 1".to_string()
        ]));
    }
    let mut out = String::new();
    let _ = writeln!(out, "n = {n}");
    let _ = writeln!(out, "Bell number B_{n} = {}", bell_number(n));
    let _ = writeln!(out, "k  S({n},k)");
    for k in 1..=n {
        let _ = writeln!(out, "{k}  {}", stirling2(n, k));
    }
    if n <= depthcert::MAX_QUBITS {
        let _ = writeln!(out, "d_max  partitions");
        for k in 1..=n {
            let _ = writeln!(out, "{k}  {}", count_with_max_block(n, k)?);
        }
    }
    if list {
        for p in enumerate_partitions(n)? {
            if max_block.is_none_or(|k| p.d_max() <= k) {
                let _ = writeln!(out, "{}", p.label());
            }
        }
    }
    Ok(out)
}
