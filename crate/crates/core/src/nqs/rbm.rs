use std::f64::consts::FRAC_2_PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One real RBM with visible biases, hidden biases and an
/// `n_visible × n_hidden` weight matrix (row-major, row = visible unit).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbmHalf {
    pub n_visible: usize,
    pub n_hidden: usize,
    pub visible_bias: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RbmHalf {
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Self {
        RbmHalf {
            n_visible,
            n_hidden,
            visible_bias: vec![0.0; n_visible],
            hidden_bias: vec![0.0; n_hidden],
            weights: vec![0.0; n_visible * n_hidden],
        }
    }

    pub fn weight(&self, visible: usize, hidden: usize) -> f64 {
        self.weights[visible * self.n_hidden + hidden]
    }

    /// Row `i` of the weight matrix: couplings of visible unit `i`.
    pub fn row(&self, visible: usize) -> &[f64] {
        &self.weights[visible * self.n_hidden..(visible + 1) * self.n_hidden]
    }

    pub(crate) fn check_shapes(&self) -> Result<()> {
        if self.visible_bias.len() != self.n_visible
            || self.hidden_bias.len() != self.n_hidden
            || self.weights.len() != self.n_visible * self.n_hidden
        {
            return Err(Error::invalid("RBM parameter shapes are inconsistent"));
        }
        if self
            .visible_bias
            .iter()
            .chain(&self.hidden_bias)
            .chain(&self.weights)
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("non-finite RBM parameter"));
        }
        Ok(())
    }

    /// Hidden pre-activations b_h + Σ_i W_ih s_i for one spin configuration.
    pub(crate) fn preactivations(&self, spins: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.hidden_bias);
        for (i, &s) in spins.iter().enumerate() {
            for (o, w) in out.iter_mut().zip(self.row(i)) {
                *o += s * w;
            }
        }
    }

    pub(crate) fn visible_term(&self, spins: &[f64]) -> f64 {
        self.visible_bias
            .iter()
            .zip(spins)
            .map(|(a, s)| a * s)
            .sum()
    }

    pub(crate) fn visit(&self, f: &mut dyn FnMut(f64)) {
        self.visible_bias
            .iter()
            .chain(&self.hidden_bias)
            .chain(&self.weights)
            .for_each(|v| f(*v));
    }

    pub(crate) fn visit_mut(&mut self, f: &mut dyn FnMut(&mut f64)) {
        self.visible_bias
            .iter_mut()
            .chain(self.hidden_bias.iter_mut())
            .chain(self.weights.iter_mut())
            .for_each(f);
    }
}

/// log(2 cosh x) without overflow.
#[inline]
pub fn log2cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// Bounded phase nonlinearity g(z) = (2/π)·arctan(tanh z) + 1/2 ∈ (0, 1).
#[inline]
pub fn bounded_phase(z: f64) -> f64 {
    FRAC_2_PI * z.tanh().atan() + 0.5
}

/// g'(z) = (2/π)·sech²z / (1 + tanh²z).
#[inline]
pub fn bounded_phase_derivative(z: f64) -> f64 {
    let t = z.tanh();
    FRAC_2_PI * (1.0 - t * t) / (1.0 + t * t)
}
