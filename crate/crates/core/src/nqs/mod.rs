//! Neural quantum states built from pairs of real RBMs.
//!
//! A pure state on `m` qubits is
//! ψ(s) ∝ exp[A(s)]·exp[i2πΦ(s)], with
//! A(s) = Σ a_i s_i + Σ_h log 2cosh(b_h + Σ_i W_ih s_i) and
//! Φ(s) = Σ c_i s_i + Σ_h g(d_h + Σ_i U_ih s_i), g bounded in (0, 1).
//! Spins are s_i = 2x_i − 1 for bit x_i of the configuration.
//!
//! Separable models keep an independent pure model per partition block, so
//! the state is a tensor product across blocks by construction. Ensembles mix
//! R block-product components with softmax weights.

mod checkpoint;
pub(crate) mod eval;
mod rbm;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointMeta,
    CHECKPOINT_MAGIC,
};
pub use rbm::{bounded_phase, log2cosh, RbmHalf};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::partitions::Partition;
use crate::qcore::{check_qubits, rotate_into, BasisPattern, DensityMatrix, StateVector};
use crate::{rng, Error, Result};
use eval::{PureEval, SnqsEval};

/// Amplitude and phase RBMs over the same visible layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureNqs {
    pub n_qubits: usize,
    pub amplitude: RbmHalf,
    pub phase: RbmHalf,
}

impl PureNqs {
    pub fn zeros(n_qubits: usize, hidden_amp: usize, hidden_phase: usize) -> Self {
        PureNqs {
            n_qubits,
            amplitude: RbmHalf::zeros(n_qubits, hidden_amp),
            phase: RbmHalf::zeros(n_qubits, hidden_phase),
        }
    }

    pub fn state_vector(&self) -> Result<StateVector> {
        check_qubits(self.n_qubits)?;
        self.check()?;
        StateVector::from_amplitudes(self.n_qubits, PureEval::new(self).psi)
    }

    fn check(&self) -> Result<()> {
        self.amplitude.check_shapes()?;
        self.phase.check_shapes()?;
        if self.amplitude.n_visible != self.n_qubits || self.phase.n_visible != self.n_qubits {
            return Err(Error::invalid(
                "RBM visible layer does not match qubit count",
            ));
        }
        Ok(())
    }

    fn visit(&self, f: &mut dyn FnMut(f64)) {
        self.amplitude.visit(f);
        self.phase.visit(f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut f64)) {
        self.amplitude.visit_mut(f);
        self.phase.visit_mut(f);
    }
}

fn check_spins(model: &PureNqs, spins: &[f64]) -> Result<()> {
    if spins.len() != model.n_qubits {
        return Err(Error::invalid(format!(
            "{} spins for a {}-qubit model",
            spins.len(),
            model.n_qubits
        )));
    }
    if let Some(s) = spins.iter().find(|s| **s != 1.0 && **s != -1.0) {
        return Err(Error::invalid(format!("spin value {s} is not ±1")));
    }
    Ok(())
}

/// A(s) for one ±1 spin configuration.
pub fn log_amplitude(model: &PureNqs, spins: &[f64]) -> Result<f64> {
    check_spins(model, spins)?;
    let half = &model.amplitude;
    let mut pre = vec![0.0; half.n_hidden];
    half.preactivations(spins, &mut pre);
    Ok(half.visible_term(spins) + pre.iter().map(|z| log2cosh(*z)).sum::<f64>())
}

/// Φ(s) in units of full turns; the amplitude phase factor is exp(i2πΦ).
pub fn phase_of(model: &PureNqs, spins: &[f64]) -> Result<f64> {
    check_spins(model, spins)?;
    let half = &model.phase;
    let mut pre = vec![0.0; half.n_hidden];
    half.preactivations(spins, &mut pre);
    Ok(half.visible_term(spins) + pre.iter().map(|z| bounded_phase(*z)).sum::<f64>())
}

/// One independent pure model per partition block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnqsModel {
    pub partition: Partition,
    pub blocks: Vec<PureNqs>,
}

impl SnqsModel {
    pub fn new(partition: Partition, blocks: Vec<PureNqs>) -> Result<Self> {
        if blocks.len() != partition.n_blocks() {
            return Err(Error::invalid(
                "one block model per partition block required",
            ));
        }
        for (b, m) in partition.blocks().iter().zip(&blocks) {
            if b.len() != m.n_qubits {
                return Err(Error::invalid(format!(
                    "block of {} qubits carries a {}-qubit model",
                    b.len(),
                    m.n_qubits
                )));
            }
        }
        Ok(SnqsModel { partition, blocks })
    }

    pub fn n_qubits(&self) -> usize {
        self.partition.n_qubits()
    }

    pub fn state_vector(&self) -> Result<StateVector> {
        check_qubits(self.n_qubits())?;
        for b in &self.blocks {
            b.check()?;
        }
        StateVector::from_amplitudes(self.n_qubits(), SnqsEval::new(self, None).psi)
    }

    /// Equivalent single RBM pair on all qubits with visible–hidden weights
    /// masked to zero outside each block's hidden group.
    pub fn masked_equivalent(&self) -> PureNqs {
        let n = self.n_qubits();
        let ha: usize = self.blocks.iter().map(|b| b.amplitude.n_hidden).sum();
        let hp: usize = self.blocks.iter().map(|b| b.phase.n_hidden).sum();
        let mut out = PureNqs::zeros(n, ha, hp);
        let (mut oa, mut op) = (0, 0);
        for (block, m) in self.partition.blocks().iter().zip(&self.blocks) {
            for (dst, src, offset) in [
                (&mut out.amplitude, &m.amplitude, oa),
                (&mut out.phase, &m.phase, op),
            ] {
                for (local, &q) in block.iter().enumerate() {
                    dst.visible_bias[q] = src.visible_bias[local];
                    for h in 0..src.n_hidden {
                        dst.weights[q * dst.n_hidden + offset + h] = src.weight(local, h);
                    }
                }
                dst.hidden_bias[offset..offset + src.n_hidden].copy_from_slice(&src.hidden_bias);
            }
            oa += m.amplitude.n_hidden;
            op += m.phase.n_hidden;
        }
        out
    }

    fn visit(&self, f: &mut dyn FnMut(f64)) {
        self.blocks.iter().for_each(|b| b.visit(f));
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut f64)) {
        self.blocks.iter_mut().for_each(|b| b.visit_mut(f));
    }
}

/// Convex mixture of block-product pure components sharing one partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub components: Vec<SnqsModel>,
    pub logits: Vec<f64>,
}

impl EnsembleModel {
    pub fn new(components: Vec<SnqsModel>, logits: Vec<f64>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::invalid("ensemble with no components"));
        };
        if logits.len() != components.len() {
            return Err(Error::invalid("one logit per ensemble component required"));
        }
        if components.iter().any(|c| c.partition != first.partition) {
            return Err(Error::invalid("ensemble components must share a partition"));
        }
        Ok(EnsembleModel { components, logits })
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.components[0].n_qubits()
    }

    pub fn partition(&self) -> &Partition {
        &self.components[0].partition
    }

    /// softmax(logits).
    pub fn weights(&self) -> Vec<f64> {
        softmax(&self.logits)
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// Any trainable model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum NqsModel {
    Pure(PureNqs),
    Separable(SnqsModel),
    Ensemble(EnsembleModel),
}

impl NqsModel {
    pub fn n_qubits(&self) -> usize {
        match self {
            NqsModel::Pure(m) => m.n_qubits,
            NqsModel::Separable(m) => m.n_qubits(),
            NqsModel::Ensemble(m) => m.n_qubits(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            NqsModel::Pure(_) => "pure",
            NqsModel::Separable(_) => "separable",
            NqsModel::Ensemble(_) => "ensemble",
        }
    }

    /// Partition enforced by the architecture (single block when unconstrained).
    pub fn partition(&self) -> Partition {
        match self {
            NqsModel::Pure(m) => Partition::full(m.n_qubits),
            NqsModel::Separable(m) => m.partition.clone(),
            NqsModel::Ensemble(m) => m.partition().clone(),
        }
    }

    /// Normalized pure state; ensembles have none.
    pub fn state_vector(&self) -> Result<StateVector> {
        match self {
            NqsModel::Pure(m) => m.state_vector(),
            NqsModel::Separable(m) => m.state_vector(),
            NqsModel::Ensemble(_) => Err(Error::invalid("an ensemble has no single state vector")),
        }
    }

    /// Mixture weights and component states (a single unit-weight component
    /// for pure models).
    pub fn components(&self) -> Result<(Vec<f64>, Vec<StateVector>)> {
        match self {
            NqsModel::Ensemble(e) => {
                let states = e
                    .components
                    .iter()
                    .map(SnqsModel::state_vector)
                    .collect::<Result<Vec<_>>>()?;
                Ok((e.weights(), states))
            }
            _ => Ok((vec![1.0], vec![self.state_vector()?])),
        }
    }

    /// Density operator Σ_k w_k |ψ_k⟩⟨ψ_k|.
    pub fn density(&self) -> Result<DensityMatrix> {
        let (w, states) = self.components()?;
        check_qubits(self.n_qubits())?;
        DensityMatrix::from_mixture(&w, &states)
    }

    pub fn n_params(&self) -> usize {
        let mut count = 0;
        self.visit(&mut |_| count += 1);
        count
    }

    /// Flattened parameters in a fixed traversal order.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        self.visit(&mut |v| out.push(v));
        out
    }

    pub fn set_params(&mut self, values: &[f64]) {
        let mut it = values.iter();
        self.visit_mut(&mut |v| *v = *it.next().expect("parameter vector too short"));
        assert!(it.next().is_none(), "parameter vector too long");
    }

    /// Same structure with every parameter set to zero.
    pub fn zeros_like(&self) -> NqsModel {
        let mut out = self.clone();
        out.visit_mut(&mut |v| *v = 0.0);
        out
    }

    pub(crate) fn visit(&self, f: &mut dyn FnMut(f64)) {
        match self {
            NqsModel::Pure(m) => m.visit(f),
            NqsModel::Separable(m) => m.visit(f),
            NqsModel::Ensemble(e) => {
                e.components.iter().for_each(|c| c.visit(f));
                e.logits.iter().for_each(|l| f(*l));
            }
        }
    }

    pub(crate) fn visit_mut(&mut self, f: &mut dyn FnMut(&mut f64)) {
        match self {
            NqsModel::Pure(m) => m.visit_mut(f),
            NqsModel::Separable(m) => m.visit_mut(f),
            NqsModel::Ensemble(e) => {
                e.components.iter_mut().for_each(|c| c.visit_mut(f));
                e.logits.iter_mut().for_each(f);
            }
        }
    }
}

/// Born probabilities of a model in `basis`; mixtures are weighted sums.
pub fn model_born_probs(model: &NqsModel, basis: &BasisPattern) -> Result<Vec<f64>> {
    if basis.len() != model.n_qubits() {
        return Err(Error::invalid(format!(
            "basis of length {} for a {}-qubit model",
            basis.len(),
            model.n_qubits()
        )));
    }
    let (weights, states) = model.components()?;
    let mut probs = vec![0.0; 1 << model.n_qubits()];
    for (w, s) in weights.iter().zip(states) {
        let mut amps = s.into_amplitudes();
        rotate_into(&mut amps, basis);
        for (p, a) in probs.iter_mut().zip(&amps) {
            *p += w * a.norm_sqr();
        }
    }
    Ok(probs)
}

/// Explicit density matrix of an ensemble.
pub fn ensemble_density(model: &EnsembleModel) -> Result<DensityMatrix> {
    if model.n_qubits() > 10 {
        return Err(Error::Capacity {
            what: "qubits for a dense ensemble density",
            got: model.n_qubits(),
            limit: 10,
        });
    }
    NqsModel::Ensemble(model.clone()).density()
}

/// Which architecture to build.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelSpec {
    /// Unconstrained pure RBM state.
    Pure,
    /// Block-product state over the partition.
    Separable(Partition),
    /// Rank-R mixture of block-product states; `None` = unconstrained components.
    Ensemble {
        partition: Option<Partition>,
        rank: usize,
    },
}

impl ModelSpec {
    /// Pure or separable for rank 1, ensemble otherwise.
    pub fn for_partition(partition: &Partition, rank: usize) -> ModelSpec {
        match (partition.is_full(), rank) {
            (true, 1) => ModelSpec::Pure,
            (false, 1) => ModelSpec::Separable(partition.clone()),
            (true, r) => ModelSpec::Ensemble {
                partition: None,
                rank: r,
            },
            (false, r) => ModelSpec::Ensemble {
                partition: Some(partition.clone()),
                rank: r,
            },
        }
    }
}

/// Hidden sizes and initialization scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    pub hidden_amp: usize,
    pub hidden_phase: usize,
    pub init_std: f64,
    /// Per-block (amp, phase) hidden sizes; blocks default to the full sizes.
    #[serde(default)]
    pub block_hidden: Option<Vec<(usize, usize)>>,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            hidden_amp: 64,
            hidden_phase: 64,
            init_std: 1e-2,
            block_hidden: None,
        }
    }
}

/// Build a model with all parameters (logits included) i.i.d. N(0, init_std²).
pub fn init_model(
    spec: &ModelSpec,
    n_qubits: usize,
    config: &InitConfig,
    seed: u64,
) -> Result<NqsModel> {
    if n_qubits == 0 {
        return Err(Error::invalid("model needs at least one qubit"));
    }
    check_qubits(n_qubits)?;
    if !(config.init_std > 0.0) || config.hidden_amp == 0 || config.hidden_phase == 0 {
        return Err(Error::invalid("hidden sizes and init_std must be positive"));
    }
    let block_model = |partition: &Partition| -> Result<SnqsModel> {
        if partition.n_qubits() != n_qubits {
            return Err(Error::invalid(format!(
                "partition {partition} covers {} qubits, model has {n_qubits}",
                partition.n_qubits()
            )));
        }
        let sizes: Vec<(usize, usize)> = match &config.block_hidden {
            Some(s) if !partition.is_full() => {
                if s.len() != partition.n_blocks() {
                    return Err(Error::invalid("block_hidden needs one entry per block"));
                }
                s.clone()
            }
            _ => vec![(config.hidden_amp, config.hidden_phase); partition.n_blocks()],
        };
        let blocks = partition
            .blocks()
            .iter()
            .zip(sizes)
            .map(|(b, (ha, hp))| PureNqs::zeros(b.len(), ha, hp))
            .collect();
        SnqsModel::new(partition.clone(), blocks)
    };
    let full = Partition::full(n_qubits);
    let mut model = match spec {
        ModelSpec::Pure => NqsModel::Pure(PureNqs::zeros(
            n_qubits,
            config.hidden_amp,
            config.hidden_phase,
        )),
        ModelSpec::Separable(p) => NqsModel::Separable(block_model(p)?),
        ModelSpec::Ensemble { partition, rank } => {
            if *rank == 0 {
                return Err(Error::invalid("ensemble rank must be positive"));
            }
            let p = partition.as_ref().unwrap_or(&full);
            let components = (0..*rank)
                .map(|_| block_model(p))
                .collect::<Result<Vec<_>>>()?;
            NqsModel::Ensemble(EnsembleModel::new(components, vec![0.0; *rank])?)
        }
    };
    let normal = Normal::new(0.0, config.init_std).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = rng::seeded(seed);
    model.visit_mut(&mut |v| *v = normal.sample(&mut rng));
    Ok(model)
}

#[cfg(test)]
mod tests;
