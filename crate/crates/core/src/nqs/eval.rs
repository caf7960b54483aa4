//! Forward evaluation over all 2^n configurations with cached activations,
//! and the matching reverse pass from a state-space gradient to parameters.
//!
//! State-space gradients use the convention g = ∂L/∂Re ψ + i ∂L/∂Im ψ, so a
//! first-order change is dL = Re Σ conj(g)·dψ.

use std::borrow::Cow;
use std::f64::consts::TAU;

use super::rbm::{bounded_phase, bounded_phase_derivative, log2cosh, RbmHalf};
use super::{PureNqs, SnqsModel};
use crate::qcore::C64;

/// Spin table: `spins[x*m + i]` = ±1 for qubit `i` of configuration `x`
/// (bit 1 ↦ +1).
pub(crate) fn spin_table(m: usize) -> Vec<f64> {
    let dim = 1usize << m;
    let mut out = Vec::with_capacity(dim * m);
    for x in 0..dim {
        for i in 0..m {
            out.push(if (x >> (m - 1 - i)) & 1 == 1 {
                1.0
            } else {
                -1.0
            });
        }
    }
    out
}

/// Cached forward pass of a single pure RBM state.
pub(crate) struct PureEval {
    pub psi: Vec<C64>,
    m: usize,
    spins: Vec<f64>,
    amp_act: Vec<f64>,
    phase_act: Vec<f64>,
}

/// Log-amplitude and phase (in turns) for every configuration, filling the
/// derivative caches.
fn half_pass(
    half: &RbmHalf,
    spins: &[f64],
    m: usize,
    act: &mut Vec<f64>,
    hidden: impl Fn(f64) -> f64,
    hidden_deriv: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let dim = 1usize << m;
    let h = half.n_hidden;
    act.clear();
    act.resize(dim * h, 0.0);
    let mut pre = vec![0.0; h];
    let mut out = Vec::with_capacity(dim);
    for x in 0..dim {
        let s = &spins[x * m..(x + 1) * m];
        half.preactivations(s, &mut pre);
        let mut total = half.visible_term(s);
        let slot = &mut act[x * h..(x + 1) * h];
        for (a, &z) in slot.iter_mut().zip(&pre) {
            total += hidden(z);
            *a = hidden_deriv(z);
        }
        out.push(total);
    }
    out
}

fn half_backward(
    half: &RbmHalf,
    spins: &[f64],
    m: usize,
    act: &[f64],
    d_out: &[f64],
    grad: &mut RbmHalf,
) {
    let h = half.n_hidden;
    let mut t = vec![0.0; h];
    for (x, &d) in d_out.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let s = &spins[x * m..(x + 1) * m];
        for ((ti, a), gb) in t
            .iter_mut()
            .zip(&act[x * h..(x + 1) * h])
            .zip(grad.hidden_bias.iter_mut())
        {
            *ti = d * a;
            *gb += *ti;
        }
        for (i, &si) in s.iter().enumerate() {
            grad.visible_bias[i] += d * si;
            let row = &mut grad.weights[i * h..(i + 1) * h];
            for (w, ti) in row.iter_mut().zip(&t) {
                *w += si * ti;
            }
        }
    }
}

impl PureEval {
    pub fn new(model: &PureNqs) -> Self {
        let m = model.n_qubits;
        let spins = spin_table(m);
        let mut amp_act = Vec::new();
        let mut phase_act = Vec::new();
        let log_amp = half_pass(
            &model.amplitude,
            &spins,
            m,
            &mut amp_act,
            log2cosh,
            f64::tanh,
        );
        let phase = half_pass(
            &model.phase,
            &spins,
            m,
            &mut phase_act,
            bounded_phase,
            bounded_phase_derivative,
        );
        let shift = log_amp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut psi: Vec<C64> = log_amp
            .iter()
            .zip(&phase)
            .map(|(a, p)| C64::from_polar((a - shift).exp(), TAU * p))
            .collect();
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        psi.iter_mut().for_each(|z| *z /= norm);
        PureEval {
            psi,
            m,
            spins,
            amp_act,
            phase_act,
        }
    }

    /// Accumulate ∂L/∂θ into `grad` given g = ∂L/∂ψ for the normalized state.
    pub fn backward(&self, model: &PureNqs, g: &[C64], grad: &mut PureNqs) {
        // c = Re⟨ψ, g⟩ removes the component along ψ fixed by normalization
        let c: f64 = self
            .psi
            .iter()
            .zip(g)
            .map(|(p, gi)| (p.conj() * gi).re)
            .sum();
        let mut d_amp = Vec::with_capacity(self.psi.len());
        let mut d_phase = Vec::with_capacity(self.psi.len());
        for (p, gi) in self.psi.iter().zip(g) {
            let z = gi.conj() * p;
            d_amp.push(z.re - c * p.norm_sqr());
            d_phase.push(-TAU * z.im);
        }
        half_backward(
            &model.amplitude,
            &self.spins,
            self.m,
            &self.amp_act,
            &d_amp,
            &mut grad.amplitude,
        );
        half_backward(
            &model.phase,
            &self.spins,
            self.m,
            &self.phase_act,
            &d_phase,
            &mut grad.phase,
        );
    }
}

/// Local index of every full configuration inside each block.
pub(crate) fn block_index_maps(n: usize, blocks: &[Vec<usize>]) -> Vec<Vec<u32>> {
    let dim = 1usize << n;
    blocks
        .iter()
        .map(|block| {
            (0..dim)
                .map(|x| {
                    block
                        .iter()
                        .fold(0u32, |acc, &q| (acc << 1) | ((x >> (n - 1 - q)) & 1) as u32)
                })
                .collect()
        })
        .collect()
}

/// Forward pass of a block-product state.
pub(crate) struct SnqsEval<'a> {
    pub psi: Vec<C64>,
    blocks: Vec<PureEval>,
    maps: Option<Cow<'a, [Vec<u32>]>>,
}

impl<'a> SnqsEval<'a> {
    pub fn new(model: &SnqsModel, maps: Option<&'a [Vec<u32>]>) -> Self {
        let blocks: Vec<PureEval> = model.blocks.iter().map(PureEval::new).collect();
        if blocks.len() == 1 {
            let psi = blocks[0].psi.clone();
            return SnqsEval {
                psi,
                blocks,
                maps: None,
            };
        }
        let n = model.partition.n_qubits();
        let maps: Cow<'a, [Vec<u32>]> = match maps {
            Some(m) => Cow::Borrowed(m),
            None => Cow::Owned(block_index_maps(n, model.partition.blocks())),
        };
        let dim = 1usize << n;
        let psi = (0..dim)
            .map(|x| {
                blocks
                    .iter()
                    .zip(maps.iter())
                    .map(|(b, map)| b.psi[map[x] as usize])
                    .product()
            })
            .collect();
        SnqsEval {
            psi,
            blocks,
            maps: Some(maps),
        }
    }

    pub fn backward(&self, model: &SnqsModel, g: &[C64], grad: &mut SnqsModel) {
        let Some(maps) = &self.maps else {
            self.blocks[0].backward(&model.blocks[0], g, &mut grad.blocks[0]);
            return;
        };
        for (b, (eval, map)) in self.blocks.iter().zip(maps.iter()).enumerate() {
            let mut gb = vec![C64::new(0.0, 0.0); eval.psi.len()];
            for (x, gx) in g.iter().enumerate() {
                if *gx == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut rest = C64::new(1.0, 0.0);
                for (other, (oe, om)) in self.blocks.iter().zip(maps.iter()).enumerate() {
                    if other != b {
                        rest *= oe.psi[om[x] as usize];
                    }
                }
                gb[map[x] as usize] += gx * rest.conj();
            }
            eval.backward(&model.blocks[b], &gb, &mut grad.blocks[b]);
        }
    }
}
