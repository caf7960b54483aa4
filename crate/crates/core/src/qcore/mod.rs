//! Dense quantum-state toolkit for up to [`MAX_QUBITS`](crate::MAX_QUBITS)
//! qubits.
//!
//! Index convention: qubit 0 is the most significant bit of an amplitude
//! index, so `|q0 q1 … q_{n-1}⟩` is stored at `Σ q_i 2^{n-1-i}`.

mod basis;
mod channel;
mod density;
mod metrics;
mod state;

pub use basis::{Axis, BasisPattern, Bitstring};
pub use channel::{apply_amplitude_damping, DampingChannel};
pub use density::DensityMatrix;
pub use metrics::{hs_distance, hs_overlap, pair_negativity, pair_negativity_pure};
pub use state::{build_bell_pairs, build_dicke, build_ghz, tensor_product, StateVector};

use num_complex::Complex64;

pub type C64 = Complex64;

/// Either representation of a target or model state.
#[derive(Clone, Debug)]
pub enum QuantumState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl QuantumState {
    pub fn n_qubits(&self) -> usize {
        match self {
            QuantumState::Pure(s) => s.n_qubits(),
            QuantumState::Mixed(r) => r.n_qubits(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix {
        match self {
            QuantumState::Pure(s) => DensityMatrix::from_pure(s),
            QuantumState::Mixed(r) => r.clone(),
        }
    }

    pub fn born_probabilities(&self, basis: &BasisPattern) -> crate::Result<Vec<f64>> {
        match self {
            QuantumState::Pure(s) => s.born_probabilities(basis),
            QuantumState::Mixed(r) => r.born_probabilities(basis),
        }
    }
}

impl From<StateVector> for QuantumState {
    fn from(s: StateVector) -> Self {
        QuantumState::Pure(s)
    }
}

impl From<DensityMatrix> for QuantumState {
    fn from(r: DensityMatrix) -> Self {
        QuantumState::Mixed(r)
    }
}

/// Free-function form of [`QuantumState::born_probabilities`].
pub fn born_probabilities(state: &QuantumState, basis: &BasisPattern) -> crate::Result<Vec<f64>> {
    state.born_probabilities(basis)
}

/// Apply a 2x2 gate to qubit `q` of an `n`-qubit amplitude vector in place.
pub(crate) fn apply_gate(amps: &mut [C64], n: usize, q: usize, gate: &[[C64; 2]; 2]) {
    let stride = 1usize << (n - 1 - q);
    let dim = amps.len();
    let mut base = 0;
    while base < dim {
        for lo in base..base + stride {
            let hi = lo + stride;
            let a0 = amps[lo];
            let a1 = amps[hi];
            amps[lo] = gate[0][0] * a0 + gate[0][1] * a1;
            amps[hi] = gate[1][0] * a0 + gate[1][1] * a1;
        }
        base += 2 * stride;
    }
}

/// Rotate every qubit into the Z readout frame of `basis` (Z axes untouched).
pub(crate) fn rotate_into(amps: &mut [C64], basis: &BasisPattern) {
    let n = basis.len();
    for (q, axis) in basis.axes().iter().enumerate() {
        if let Some(g) = axis.readout_gate() {
            apply_gate(amps, n, q, &g);
        }
    }
}

pub(crate) fn adjoint(g: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    [
        [g[0][0].conj(), g[1][0].conj()],
        [g[0][1].conj(), g[1][1].conj()],
    ]
}

#[inline]
pub(crate) fn bit_of(index: usize, n: usize, q: usize) -> usize {
    (index >> (n - 1 - q)) & 1
}

pub(crate) fn check_qubits(n: usize) -> crate::Result<()> {
    if n > crate::MAX_QUBITS {
        return Err(crate::Error::Capacity {
            what: "qubits",
            got: n,
            limit: crate::MAX_QUBITS,
        });
    }
    Ok(())
}
