//! Maximum-likelihood fitting of NQS models to measurement frequencies.
//!
//! The objective is the per-shot negative log-likelihood in nats,
//! L = −Σ_b (N_b/N) Σ_s f_b(s) log max(p(s|b), ε_p), evaluated exactly over
//! all 2^n configurations every step. Optimization is full-batch Adam with a
//! cosine-decayed learning rate.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::measure::FrequencyTable;
use crate::nqs::eval::{PureEval, SnqsEval};
use crate::nqs::{init_model, InitConfig, ModelSpec, NqsModel, SnqsModel};
use crate::qcore::{adjoint, apply_gate, BasisPattern, C64};
use crate::{Error, Result};

/// Lower clamp on model probabilities inside the logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub init_std: f64,
    pub hidden_amp: usize,
    pub hidden_phase: usize,
    /// Mixture rank; `None` picks 4 for mixed targets and 1 otherwise.
    pub ensemble_rank: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 6000,
            lr_start: 5e-3,
            lr_end: 5e-5,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            init_std: 1e-2,
            hidden_amp: 64,
            hidden_phase: 64,
            ensemble_rank: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Every violated constraint, in field order.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.steps == 0 {
            out.push("steps must be at least 1".to_string());
        }
        if !(self.lr_end > 0.0 && self.lr_end <= self.lr_start && self.lr_start.is_finite()) {
            out.push(format!(
                "learning rates need 0 < lr_end <= lr_start (got {} and {})",
                self.lr_end, self.lr_start
            ));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            out.push("Adam betas must lie in [0, 1)".to_string());
        }
        if !(self.adam_eps > 0.0) {
            out.push("adam_eps must be positive".to_string());
        }
        if !(self.init_std > 0.0) {
            out.push("init_std must be positive".to_string());
        }
        if self.hidden_amp == 0 || self.hidden_phase == 0 {
            out.push("hidden sizes must be positive".to_string());
        }
        if self.ensemble_rank == Some(0) {
            out.push("ensemble_rank must be positive".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations() {
            v if v.is_empty() => Ok(()),
            v => Err(Error::InvalidArgument(v.join("; "))),
        }
    }

    pub fn init_config(&self) -> InitConfig {
        InitConfig {
            hidden_amp: self.hidden_amp,
            hidden_phase: self.hidden_phase,
            init_std: self.init_std,
            block_hidden: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainResult {
    pub best_nll: f64,
    pub final_nll: f64,
    /// NLL before update t for t = 0..steps, then the NLL after the last update.
    pub loss_trace: Vec<f64>,
    pub best_model: NqsModel,
    pub wall_time: f64,
}

/// lr_end + (lr_start − lr_end)(1 + cos(π·step/steps))/2.
pub fn cosine_lr(step: usize, config: &TrainConfig) -> f64 {
    let t = step.min(config.steps) as f64 / config.steps as f64;
    config.lr_end
        + (config.lr_start - config.lr_end) * (1.0 + (std::f64::consts::PI * t).cos()) / 2.0
}

struct BasisTerm {
    /// (qubit, readout gate, its adjoint) for non-Z axes.
    gates: Vec<QubitGates>,
    /// (outcome index, count / N_shots)
    weights: Vec<(usize, f64)>,
}

/// Frequency table compiled for repeated evaluation.
pub struct Objective {
    n_qubits: usize,
    terms: Vec<BasisTerm>,
    block_maps: Option<(crate::partitions::Partition, Vec<Vec<u32>>)>,
}

impl Objective {
    pub fn new(freq: &FrequencyTable) -> Self {
        let total = freq.n_shots() as f64;
        let terms = freq
            .bases()
            .map(|(basis, counts)| BasisTerm {
                gates: gates_of(basis),
                weights: counts
                    .counts
                    .iter()
                    .map(|(&s, &c)| (s, c as f64 / total))
                    .collect(),
            })
            .collect();
        Objective {
            n_qubits: freq.n_qubits(),
            terms,
            block_maps: None,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn check(&self, model: &NqsModel) -> Result<()> {
        if model.n_qubits() != self.n_qubits {
            return Err(Error::invalid(format!(
                "{}-qubit model for {}-qubit data",
                model.n_qubits(),
                self.n_qubits
            )));
        }
        Ok(())
    }

    fn maps_for(&mut self, model: &NqsModel) {
        let p = model.partition();
        if p.is_full() {
            return;
        }
        if self.block_maps.as_ref().is_some_and(|(q, _)| *q == p) {
            return;
        }
        let maps = crate::nqs::eval::block_index_maps(p.n_qubits(), p.blocks());
        self.block_maps = Some((p, maps));
    }

    pub fn nll(&self, model: &NqsModel) -> Result<f64> {
        self.check(model)?;
        Ok(self.evaluate(model, false).0)
    }

    /// Loss and its gradient, shaped like the model.
    pub fn nll_and_gradient(&mut self, model: &NqsModel) -> Result<(f64, NqsModel)> {
        self.check(model)?;
        self.maps_for(model);
        let (loss, grad) = self.evaluate(model, true);
        Ok((loss, grad.expect("gradient requested")))
    }

    fn evaluate(&self, model: &NqsModel, want_grad: bool) -> (f64, Option<NqsModel>) {
        let maps = self
            .block_maps
            .as_ref()
            .and_then(|(p, m)| (*p == model.partition()).then_some(m.as_slice()));
        let (weights, evals): (Vec<f64>, Vec<CompEval>) = match model {
            NqsModel::Pure(m) => (vec![1.0], vec![CompEval::Pure(PureEval::new(m))]),
            NqsModel::Separable(s) => (vec![1.0], vec![CompEval::Snqs(SnqsEval::new(s, maps))]),
            NqsModel::Ensemble(e) => (
                e.weights(),
                e.components
                    .iter()
                    .map(|c| CompEval::Snqs(SnqsEval::new(c, maps)))
                    .collect(),
            ),
        };
        let n = self.n_qubits;
        let dim = 1usize << n;
        let r = evals.len();
        let zero = C64::new(0.0, 0.0);
        let mut phi: Vec<Vec<C64>> = vec![vec![zero; dim]; r];
        let mut g_psi: Vec<Vec<C64>> = if want_grad {
            vec![vec![zero; dim]; r]
        } else {
            Vec::new()
        };
        let mut g_phi = vec![zero; dim];
        let mut d_w = vec![0.0; r];
        let mut loss = 0.0;
        let mut dl_dp: Vec<f64> = Vec::new();

        for term in &self.terms {
            for (buf, ev) in phi.iter_mut().zip(&evals) {
                buf.copy_from_slice(ev.psi());
                for (q, g, _) in &term.gates {
                    apply_gate(buf, n, *q, g);
                }
            }
            dl_dp.clear();
            for &(s, wt) in &term.weights {
                let p: f64 = weights
                    .iter()
                    .zip(&phi)
                    .map(|(w, f)| w * f[s].norm_sqr())
                    .sum();
                // written so that NaN propagates instead of being clamped
                let clamped = if p < PROB_FLOOR { PROB_FLOOR } else { p };
                loss -= wt * clamped.ln();
                dl_dp.push(if p > PROB_FLOOR { -wt / p } else { 0.0 });
            }
            if !want_grad {
                continue;
            }
            for k in 0..r {
                g_phi.iter_mut().for_each(|z| *z = zero);
                for (&(s, _), &d) in term.weights.iter().zip(&dl_dp) {
                    d_w[k] += d * phi[k][s].norm_sqr();
                    g_phi[s] = phi[k][s] * (2.0 * weights[k] * d);
                }
                for (q, _, ga) in term.gates.iter().rev() {
                    apply_gate(&mut g_phi, n, *q, ga);
                }
                for (acc, z) in g_psi[k].iter_mut().zip(&g_phi) {
                    *acc += z;
                }
            }
        }
        if !want_grad {
            return (loss, None);
        }
        let mut grad = model.zeros_like();
        match (&mut grad, model) {
            (NqsModel::Pure(gm), NqsModel::Pure(m)) => evals[0].backward_pure(m, &g_psi[0], gm),
            (NqsModel::Separable(gm), NqsModel::Separable(m)) => {
                evals[0].backward_snqs(m, &g_psi[0], gm)
            }
            (NqsModel::Ensemble(ge), NqsModel::Ensemble(e)) => {
                for (k, ev) in evals.iter().enumerate() {
                    ev.backward_snqs(&e.components[k], &g_psi[k], &mut ge.components[k]);
                }
                // softmax Jacobian: ∂w_k/∂ℓ_j = w_k(δ_kj − w_j)
                let mean: f64 = weights.iter().zip(&d_w).map(|(w, d)| w * d).sum();
                for (j, gl) in ge.logits.iter_mut().enumerate() {
                    *gl = weights[j] * (d_w[j] - mean);
                }
            }
            _ => unreachable!("gradient shares the model's shape"),
        }
        (loss, Some(grad))
    }
}

/// Qubit, readout gate and its adjoint.
type QubitGates = (usize, [[C64; 2]; 2], [[C64; 2]; 2]);

fn gates_of(basis: &BasisPattern) -> Vec<QubitGates> {
    basis
        .axes()
        .iter()
        .enumerate()
        .filter_map(|(q, a)| a.readout_gate().map(|g| (q, g, adjoint(&g))))
        .collect()
}

enum CompEval<'a> {
    Pure(PureEval),
    Snqs(SnqsEval<'a>),
}

impl CompEval<'_> {
    fn psi(&self) -> &[C64] {
        match self {
            CompEval::Pure(e) => &e.psi,
            CompEval::Snqs(e) => &e.psi,
        }
    }

    fn backward_pure(
        &self,
        model: &crate::nqs::PureNqs,
        g: &[C64],
        grad: &mut crate::nqs::PureNqs,
    ) {
        match self {
            CompEval::Pure(e) => e.backward(model, g, grad),
            CompEval::Snqs(_) => unreachable!(),
        }
    }

    fn backward_snqs(&self, model: &SnqsModel, g: &[C64], grad: &mut SnqsModel) {
        match self {
            CompEval::Snqs(e) => e.backward(model, g, grad),
            CompEval::Pure(_) => unreachable!(),
        }
    }
}

/// Per-shot NLL of `model` on `freq`.
pub fn nll(model: &NqsModel, freq: &FrequencyTable) -> Result<f64> {
    Objective::new(freq).nll(model)
}

/// Exact gradient of [`nll`] with respect to every model parameter.
pub fn nll_gradient(model: &NqsModel, freq: &FrequencyTable) -> Result<NqsModel> {
    Ok(Objective::new(freq).nll_and_gradient(model)?.1)
}

/// Full-batch Adam from `model`, keeping the lowest-loss snapshot.
pub fn train(model: NqsModel, freq: &FrequencyTable, config: &TrainConfig) -> Result<TrainResult> {
    config.validate()?;
    let clock = Clock::start();
    let mut obj = Objective::new(freq);
    let mut model = model;
    let mut params = model.params();
    let mut m = vec![0.0; params.len()];
    let mut v = vec![0.0; params.len()];
    let mut trace = Vec::with_capacity(config.steps + 1);
    let mut best = (f64::INFINITY, params.clone());
    let (b1, b2) = (config.adam_beta1, config.adam_beta2);

    for step in 0..config.steps {
        let (loss, grad) = obj.nll_and_gradient(&model)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { step, loss });
        }
        trace.push(loss);
        if loss < best.0 {
            best = (loss, params.clone());
        }
        let lr = cosine_lr(step, config);
        let t = (step + 1) as i32;
        let (c1, c2) = (1.0 - b1.powi(t), 1.0 - b2.powi(t));
        let g = grad.params();
        for i in 0..params.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            params[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + config.adam_eps);
        }
        model.set_params(&params);
    }
    let final_nll = obj.nll(&model)?;
    if !final_nll.is_finite() {
        return Err(Error::Diverged {
            step: config.steps,
            loss: final_nll,
        });
    }
    trace.push(final_nll);
    if final_nll < best.0 {
        best = (final_nll, params);
    }
    model.set_params(&best.1);
    Ok(TrainResult {
        best_nll: best.0,
        final_nll,
        loss_trace: trace,
        best_model: model,
        wall_time: clock.elapsed(),
    })
}

/// Initialize from `config` (hidden sizes, init_std, seed) and train.
pub fn fit(spec: &ModelSpec, freq: &FrequencyTable, config: &TrainConfig) -> Result<TrainResult> {
    config.validate()?;
    let model = init_model(spec, freq.n_qubits(), &config.init_config(), config.seed)?;
    train(model, freq, config)
}

/// Two-column `step nll` text.
pub fn write_loss_trace(w: &mut impl Write, trace: &[f64]) -> Result<()> {
    writeln!(w, "# step nll (nats per shot)")?;
    for (step, loss) in trace.iter().enumerate() {
        writeln!(w, "{step} {loss:.12e}")?;
    }
    Ok(())
}

#[cfg(not(target_arch = "wasm32"))]
struct Clock(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Clock {
    fn start() -> Self {
        Clock(std::time::Instant::now())
    }

    fn elapsed(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[cfg(target_arch = "wasm32")]
struct Clock;

#[cfg(target_arch = "wasm32")]
impl Clock {
    fn start() -> Self {
        Clock
    }

    fn elapsed(&self) -> f64 {
        0.0
    }
}
