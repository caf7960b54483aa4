use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use depthcert_cli::{
    cmd_certify, cmd_gen_data, cmd_interpret, cmd_partitions, cmd_train, CliError,
    ExperimentConfig, Overrides,
};

/// Certify multipartite entanglement depth from randomized Pauli measurement data.
#[derive(Parser)]
#[command(name = "depthcert", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for both measurement sampling and training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of concurrent training runs.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Likelihood-gap threshold in nats per shot.
    #[arg(long, global = true)]
    threshold: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured target and write a dataset.
    GenData,
    /// Train one model on a dataset.
    Train {
        /// Dataset file; simulated from the config when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Partition label for a block-product model (default: unconstrained).
        #[arg(long)]
        partition: Option<String>,
    },
    /// Run the partition hierarchy and certify entanglement depth.
    Certify {
        /// Dataset file; simulated from the config when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Correlation, coupling and affinity matrices of a trained model.
    Interpret {
        /// Checkpoint of an unconstrained model.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Dataset for the data-side correlation map.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Stirling and Bell numbers, counts by largest block, optional listing.
    Partitions {
        /// Number of qubits.
        #[arg(long)]
        n: usize,
        /// List every partition label.
        #[arg(long)]
        list: bool,
        /// Only list partitions whose largest block is at most this size.
        #[arg(long)]
        max_block: Option<usize>,
    },
}

fn load_config(g: &Global) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &g.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: g.seed,
        workers: g.workers,
        out: g.out.clone(),
        threshold: g.threshold,
    });
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Partitions { n, list, max_block } => {
            print!("{}", cmd_partitions(n, list, max_block)?);
        }
        Command::GenData => {
            let cfg = load_config(&cli.global)?;
            let out = cmd_gen_data(&cfg)?;
            println!(
                "wrote {} ({} shots over {} bases)",
                out.dataset_path.display(),
                out.dataset.n_shots(),
                out.dataset.bases().len()
            );
        }
        Command::Train { data, partition } => {
            let cfg = load_config(&cli.global)?;
            let out = cmd_train(&cfg, data.as_deref(), partition.as_deref())?;
            let s = &out.summary;
            println!(
                "{} ({}): best NLL {:.6}, final {:.6}, empirical entropy {:.6} nats/shot",
                s.partition, s.kind, s.best_nll, s.final_nll, s.empirical_entropy
            );
            if let Some(o) = s.hs_overlap {
                println!("HS overlap with target {o:.4}");
            }
            println!("checkpoint {}", out.checkpoint_path.display());
        }
        Command::Certify { data } => {
            let cfg = load_config(&cli.global)?;
            let out = cmd_certify(&cfg, data.as_deref())?;
            print!("{}", out.report.to_table());
            println!("{}", out.report.certificate());
        }
        Command::Interpret { checkpoint, data } => {
            let cfg = load_config(&cli.global)?;
            let out = cmd_interpret(&cfg.output_dir, &checkpoint, data.as_deref())?;
            if let Some(n) = &out.notice {
                eprintln!("notice: {n}");
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
