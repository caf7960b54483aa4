//! Experiment configuration file (TOML).
//!
//! ```toml
//! output_dir = "out/ghz6"
//! workers = 1
//!
//! [target]
//! kind = "ghz"
//! n = 6
//! axes = "XYZXYZ"    # optional local readout frame
//! damping = 0.05     # optional amplitude damping per qubit
//!
//! [measurement]
//! n_bases = 200
//! shots_per_basis = 2000
//! seed = 1
//!
//! [hierarchy]
//! named = "benchmark6"          # or: partitions = ["3|3", "2|2|2"]
//! threshold = 0.05
//! replicas = 1
//!
//! [train]
//! steps = 6000
//! ```

use std::path::{Path, PathBuf};

use depthcert::certify::{
    HierarchyKind, HierarchySpec, DEFAULT_MIXED_THRESHOLD, DEFAULT_THRESHOLD,
};
use depthcert::partitions::{parse_label, Partition};
use depthcert::qcore::{
    build_bell_pairs, build_dicke, build_ghz, tensor_product, DampingChannel, DensityMatrix,
    QuantumState, StateVector,
};
use depthcert::train::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A pure target state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    Ghz {
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        axes: Option<String>,
    },
    BellPairs {
        pairs: usize,
    },
    Dicke {
        n: usize,
        k: usize,
    },
    /// Tensor product of the listed parts, in order.
    Composite {
        parts: Vec<StateSpec>,
    },
}

impl StateSpec {
    pub fn n_qubits(&self) -> usize {
        match self {
            StateSpec::Ghz { n, .. } | StateSpec::Dicke { n, .. } => *n,
            StateSpec::BellPairs { pairs } => 2 * pairs,
            StateSpec::Composite { parts } => parts.iter().map(StateSpec::n_qubits).sum(),
        }
    }

    pub fn build(&self) -> depthcert::Result<StateVector> {
        match self {
            StateSpec::Ghz { n, axes } => {
                let frame = axes.as_deref().map(str::parse).transpose()?;
                build_ghz(*n, frame.as_ref())
            }
            StateSpec::BellPairs { pairs } => build_bell_pairs(*pairs),
            StateSpec::Dicke { n, k } => build_dicke(*n, *k),
            StateSpec::Composite { parts } => {
                let factors = parts
                    .iter()
                    .map(StateSpec::build)
                    .collect::<depthcert::Result<Vec<_>>>()?;
                tensor_product(&factors)
            }
        }
    }

    /// Short human-readable description.
    pub fn describe(&self) -> String {
        match self {
            StateSpec::Ghz { n, axes: Some(a) } => format!("GHZ-{n}^{a}"),
            StateSpec::Ghz { n, axes: None } => format!("GHZ-{n}"),
            StateSpec::BellPairs { pairs } => format!("{pairs} Bell pairs"),
            StateSpec::Dicke { n, k } => format!("Dicke D({n},{k})"),
            StateSpec::Composite { parts } => parts
                .iter()
                .map(StateSpec::describe)
                .collect::<Vec<_>>()
                .join(" ⊗ "),
        }
    }

    fn collect_violations(&self, out: &mut Vec<String>) {
        match self {
            StateSpec::Ghz { n, axes } => {
                if *n < 2 {
                    out.push(format!("ghz needs n >= 2 (got {n})"));
                }
                if let Some(a) = axes {
                    match a.parse::<depthcert::qcore::BasisPattern>() {
                        Ok(b) if b.len() != *n => {
                            out.push(format!("ghz axes {a:?} do not have {n} letters"))
                        }
                        Err(e) => out.push(format!("ghz axes {a:?}: {e}")),
                        _ => {}
                    }
                }
            }
            StateSpec::BellPairs { pairs } => {
                if *pairs == 0 {
                    out.push("bell_pairs needs pairs >= 1".to_string());
                }
            }
            StateSpec::Dicke { n, k } => {
                if *n == 0 || k > n {
                    out.push(format!("dicke needs n >= 1 and k <= n (got n={n}, k={k})"));
                }
            }
            StateSpec::Composite { parts } => {
                if parts.is_empty() {
                    out.push("composite target has no parts".to_string());
                }
                parts.iter().for_each(|p| p.collect_violations(out));
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetConfig {
    #[serde(flatten)]
    pub state: StateSpec,
    /// Amplitude damping probability applied to every qubit.
    #[serde(default)]
    pub damping: f64,
}

impl TargetConfig {
    pub fn is_mixed(&self) -> bool {
        self.damping > 0.0
    }

    /// Pure state, or its damped density operator when damping > 0.
    pub fn build(&self) -> depthcert::Result<QuantumState> {
        let psi = self.state.build()?;
        if self.damping > 0.0 {
            let channel = DampingChannel::new(self.damping)?;
            Ok(QuantumState::Mixed(
                channel.apply(&DensityMatrix::from_pure(&psi)),
            ))
        } else {
            Ok(QuantumState::Pure(psi))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub n_bases: usize,
    pub shots_per_basis: usize,
    pub seed: u64,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        MeasurementConfig {
            n_bases: 200,
            shots_per_basis: 2000,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HierarchyConfig {
    /// Explicit partition labels ("3|3", "{0,2}|{1,3}").
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partitions: Option<Vec<String>>,
    /// Named list used when `partitions` is absent; defaults by qubit count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub named: Option<HierarchyKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default = "one")]
    pub replicas: usize,
}

fn one() -> usize {
    1
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        HierarchyConfig {
            partitions: None,
            named: None,
            threshold: None,
            replicas: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetConfig>,
    #[serde(default)]
    pub measurement: MeasurementConfig,
    #[serde(default)]
    pub hierarchy: HierarchyConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default = "one")]
    pub workers: usize,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            target: None,
            measurement: MeasurementConfig::default(),
            hierarchy: HierarchyConfig::default(),
            train: TrainConfig::default(),
            output_dir: default_out(),
            workers: 1,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub threshold: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serializable")
    }

    /// `--seed` seeds both the measurement and the training.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.measurement.seed = s;
            self.train.seed = s;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        if let Some(t) = o.threshold {
            self.hierarchy.threshold = Some(t);
        }
    }

    pub fn is_mixed(&self) -> bool {
        self.target.as_ref().is_some_and(TargetConfig::is_mixed)
    }

    /// Every violated constraint. `need_target` for commands that simulate data.
    pub fn violations(&self, need_target: bool) -> Vec<String> {
        let mut out = Vec::new();
        match &self.target {
            Some(t) => {
                t.state.collect_violations(&mut out);
                if !(0.0..=1.0).contains(&t.damping) {
                    out.push(format!("damping must lie in [0, 1] (got {})", t.damping));
                }
                let n = t.state.n_qubits();
                if n > depthcert::MAX_QUBITS {
                    out.push(format!(
                        "target has {n} qubits, limit is {}",
                        depthcert::MAX_QUBITS
                    ));
                }
                if t.is_mixed() && n > 10 {
                    out.push(format!("damped targets are limited to 10 qubits (got {n})"));
                }
            }
            None if need_target => out.push("config has no [target] section".to_string()),
            None => {}
        }
        if self.measurement.n_bases == 0 {
            out.push("measurement.n_bases must be at least 1".to_string());
        }
        if self.measurement.shots_per_basis == 0 {
            out.push("measurement.shots_per_basis must be at least 1".to_string());
        }
        if let Some(t) = self.hierarchy.threshold {
            if !(t > 0.0) {
                out.push(format!("hierarchy.threshold must be positive (got {t})"));
            }
        }
        if self.hierarchy.replicas == 0 {
            out.push("hierarchy.replicas must be at least 1".to_string());
        }
        if self.workers == 0 {
            out.push("workers must be at least 1".to_string());
        }
        out.extend(
            self.train
                .violations()
                .into_iter()
                .map(|v| format!("train: {v}")),
        );
        out
    }

    pub fn validate(&self, need_target: bool) -> Result<(), CliError> {
        let v = self.violations(need_target);
        if v.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(v))
        }
    }

    /// Gap threshold: explicit, else 0.01 for damped targets and 0.05 otherwise.
    pub fn threshold(&self) -> f64 {
        self.hierarchy.threshold.unwrap_or(if self.is_mixed() {
            DEFAULT_MIXED_THRESHOLD
        } else {
            DEFAULT_THRESHOLD
        })
    }

    /// Training settings with the ensemble rank resolved from the target.
    pub fn effective_train(&self) -> TrainConfig {
        TrainConfig {
            ensemble_rank: Some(self.train.ensemble_rank.unwrap_or(if self.is_mixed() {
                4
            } else {
                1
            })),
            ..self.train.clone()
        }
    }

    pub fn hierarchy_spec(&self, n: usize) -> Result<HierarchySpec, CliError> {
        let partitions: Vec<Partition> = match &self.hierarchy.partitions {
            Some(labels) => {
                let mut out = Vec::new();
                let mut bad = Vec::new();
                for l in labels {
                    match parse_label(l, n) {
                        Ok(p) => out.push(p),
                        Err(e) => bad.push(format!("partition {l:?}: {e}")),
                    }
                }
                if !bad.is_empty() {
                    return Err(CliError::Validation(bad));
                }
                out
            }
            None => self
                .hierarchy
                .named
                .unwrap_or_else(|| HierarchyKind::for_qubits(n))
                .partitions(n)?,
        };
        Ok(HierarchySpec {
            replicas: self.hierarchy.replicas,
            ..HierarchySpec::new(partitions, self.threshold(), self.effective_train())
        })
    }
}
