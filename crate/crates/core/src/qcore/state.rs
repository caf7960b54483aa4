use super::{adjoint, apply_gate, check_qubits, rotate_into, Axis, BasisPattern, C64};
use crate::{Error, Result};

/// Normalized pure state of `n` qubits as 2^n dense amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Wrap amplitudes, rescaling them to unit norm.
    pub fn from_amplitudes(n_qubits: usize, mut amplitudes: Vec<C64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::invalid(format!(
                "{} amplitudes for {n_qubits} qubits (need {})",
                amplitudes.len(),
                1usize << n_qubits
            )));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Degenerate(format!("state norm {norm}")));
        }
        let inv = 1.0 / norm;
        amplitudes.iter_mut().for_each(|a| *a *= inv);
        Ok(StateVector {
            n_qubits,
            amplitudes,
        })
    }

    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::invalid(format!("basis index {index} >= {dim}")));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(StateVector {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::invalid(
                "inner product of states with different dimensions",
            ));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Apply a single-qubit unitary to qubit `q`.
    pub fn apply_single(&mut self, q: usize, gate: &[[C64; 2]; 2]) {
        apply_gate(&mut self.amplitudes, self.n_qubits, q, gate);
    }

    /// Outcome distribution when every qubit is measured along its axis in
    /// `basis`; bit 0 is the +1 eigenvalue.
    pub fn born_probabilities(&self, basis: &BasisPattern) -> Result<Vec<f64>> {
        if basis.len() != self.n_qubits {
            return Err(Error::invalid(format!(
                "basis of length {} for {} qubits",
                basis.len(),
                self.n_qubits
            )));
        }
        let mut amps = self.amplitudes.clone();
        rotate_into(&mut amps, basis);
        Ok(amps.iter().map(|a| a.norm_sqr()).collect())
    }
}

/// GHZ state whose two branches are the all-(+1) and all-(−1) eigenstates of
/// the per-qubit axes (default all Z).
pub fn build_ghz(n: usize, local_axes: Option<&BasisPattern>) -> Result<StateVector> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "GHZ needs at least 2 qubits, got {n}"
        )));
    }
    check_qubits(n)?;
    if let Some(axes) = local_axes {
        if axes.len() != n {
            return Err(Error::invalid(format!(
                "{} local axes for a {n}-qubit GHZ state",
                axes.len()
            )));
        }
    }
    let dim = 1usize << n;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    amps[0] = C64::new(r, 0.0);
    amps[dim - 1] = C64::new(r, 0.0);
    if let Some(axes) = local_axes {
        for (q, axis) in axes.axes().iter().enumerate() {
            if let Some(g) = axis.readout_gate() {
                apply_gate(&mut amps, n, q, &adjoint(&g));
            }
        }
    }
    StateVector::from_amplitudes(n, amps)
}

/// |Φ+⟩ on each consecutive pair (0,1), (2,3), ….
pub fn build_bell_pairs(n_pairs: usize) -> Result<StateVector> {
    if n_pairs == 0 {
        return Err(Error::invalid("need at least one Bell pair"));
    }
    let pair = build_ghz(2, Some(&BasisPattern::uniform(2, Axis::Z)))?;
    tensor_product(&vec![pair; n_pairs])
}

/// Equal superposition of all `n`-bit strings with Hamming weight `k`.
pub fn build_dicke(n: usize, k: usize) -> Result<StateVector> {
    if n == 0 || k > n {
        return Err(Error::invalid(format!(
            "Dicke state needs 0 <= k <= n, n >= 1 (n={n}, k={k})"
        )));
    }
    check_qubits(n)?;
    let amps = (0..1usize << n)
        .map(|i| {
            if i.count_ones() as usize == k {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    StateVector::from_amplitudes(n, amps)
}

/// Kronecker product in listed order; factor `j` occupies the qubits after
/// those of factors `0..j`.
pub fn tensor_product(factors: &[StateVector]) -> Result<StateVector> {
    let Some(first) = factors.first() else {
        return Err(Error::invalid("tensor product of an empty list"));
    };
    let total: usize = factors.iter().map(|f| f.n_qubits).sum();
    check_qubits(total)?;
    let mut amps = first.amplitudes.clone();
    for f in &factors[1..] {
        let mut next = Vec::with_capacity(amps.len() * f.dim());
        for a in &amps {
            next.extend(f.amplitudes.iter().map(|b| a * b));
        }
        amps = next;
    }
    StateVector::from_amplitudes(total, amps)
}
