use nalgebra::DMatrix;

use super::{check_qubits, BasisPattern, StateVector, C64};
use crate::{Error, Result};

/// Dense 2^n x 2^n density operator, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    /// Wrap raw entries after checking Hermiticity (1e-10) and unit trace (1e-10).
    pub fn from_entries(n_qubits: usize, entries: Vec<C64>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        if entries.len() != dim * dim {
            return Err(Error::invalid(format!(
                "{} entries for a {dim}x{dim} density matrix",
                entries.len()
            )));
        }
        let rho = DensityMatrix { n_qubits, entries };
        let herm = rho.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::invalid(format!(
                "matrix not Hermitian (max deviation {herm:e})"
            )));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::invalid(format!("trace {tr} is not 1")));
        }
        Ok(rho)
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let a = state.amplitudes();
        let dim = a.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for x in a {
            entries.extend(a.iter().map(|y| x * y.conj()));
        }
        DensityMatrix {
            n_qubits: state.n_qubits(),
            entries,
        }
    }

    /// Σ_k w_k |ψ_k⟩⟨ψ_k|; weights must be non-negative and sum to 1.
    pub fn from_mixture(weights: &[f64], states: &[StateVector]) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(Error::invalid("mixture with no components"));
        };
        if weights.len() != states.len() {
            return Err(Error::invalid(
                "mixture weights and states differ in length",
            ));
        }
        if weights.iter().any(|w| *w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(
                "mixture weights must be a probability vector",
            ));
        }
        let dim = first.dim();
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for (w, s) in weights.iter().zip(states) {
            if s.dim() != dim {
                return Err(Error::invalid("mixture components differ in dimension"));
            }
            let a = s.amplitudes();
            for (r, ar) in a.iter().enumerate() {
                let row = &mut entries[r * dim..(r + 1) * dim];
                let scaled = ar * *w;
                for (e, ac) in row.iter_mut().zip(a) {
                    *e += scaled * ac.conj();
                }
            }
        }
        Ok(DensityMatrix {
            n_qubits: first.n_qubits(),
            entries,
        })
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1usize << n_qubits;
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = C64::new(1.0 / dim as f64, 0.0);
        }
        Ok(DensityMatrix { n_qubits, entries })
    }

    #[cfg(test)]
    pub(crate) fn from_raw(n_qubits: usize, entries: Vec<C64>) -> Self {
        DensityMatrix { n_qubits, entries }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim() + col]
    }

    pub fn trace(&self) -> C64 {
        let dim = self.dim();
        (0..dim).map(|i| self.entries[i * dim + i]).sum()
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|e| e.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in r..dim {
                let d = (self.entries[r * dim + c] - self.entries[c * dim + r].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Eigenvalues in ascending order (dense Hermitian solver).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let dim = self.dim();
        let m = DMatrix::from_fn(dim, dim, |r, c| {
            // symmetrize against round-off
            (self.entries[r * dim + c] + self.entries[c * dim + r].conj()) * 0.5
        });
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Full check of the density-operator invariants, including PSD within −1e-8.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::invalid(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("trace {tr}")));
        }
        let min = self.eigenvalues()[0];
        if min < -1e-8 {
            return Err(Error::invalid(format!("smallest eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// U ρ U† for a single-qubit unitary on qubit `q`.
    pub fn apply_single(&mut self, q: usize, gate: &[[C64; 2]; 2]) {
        let n = self.n_qubits;
        let dim = self.dim();
        let stride = 1usize << (n - 1 - q);
        // rows: ρ ← (U ⊗ I) ρ
        for col in 0..dim {
            for lo in (0..dim).filter(|i| i & stride == 0) {
                let hi = lo | stride;
                let a0 = self.entries[lo * dim + col];
                let a1 = self.entries[hi * dim + col];
                self.entries[lo * dim + col] = gate[0][0] * a0 + gate[0][1] * a1;
                self.entries[hi * dim + col] = gate[1][0] * a0 + gate[1][1] * a1;
            }
        }
        // columns: ρ ← ρ (U ⊗ I)†
        for row in self.entries.chunks_mut(dim) {
            for lo in (0..dim).filter(|i| i & stride == 0) {
                let hi = lo | stride;
                let a0 = row[lo];
                let a1 = row[hi];
                row[lo] = a0 * gate[0][0].conj() + a1 * gate[0][1].conj();
                row[hi] = a0 * gate[1][0].conj() + a1 * gate[1][1].conj();
            }
        }
    }

    /// Diagonal of the rotated operator: Tr[ρ Π_s] for every outcome s.
    pub fn born_probabilities(&self, basis: &BasisPattern) -> Result<Vec<f64>> {
        if basis.len() != self.n_qubits {
            return Err(Error::invalid(format!(
                "basis of length {} for {} qubits",
                basis.len(),
                self.n_qubits
            )));
        }
        let mut rotated = self.clone();
        for (q, axis) in basis.axes().iter().enumerate() {
            if let Some(g) = axis.readout_gate() {
                rotated.apply_single(q, &g);
            }
        }
        let dim = self.dim();
        Ok((0..dim)
            .map(|i| rotated.entries[i * dim + i].re.max(0.0))
            .collect())
    }
}
