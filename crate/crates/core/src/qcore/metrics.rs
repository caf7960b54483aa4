use nalgebra::Matrix4;

use super::{bit_of, DensityMatrix, StateVector, C64};
use crate::{Error, Result};

fn same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::invalid(format!(
            "density matrices of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Tr[ρ1 ρ2] / sqrt(Tr[ρ1²] Tr[ρ2²]).
pub fn hs_overlap(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    same_dim(rho1, rho2)?;
    let p1 = rho1.purity();
    let p2 = rho2.purity();
    let denom = (p1 * p2).sqrt();
    if !(denom > 0.0) {
        return Err(Error::Degenerate("zero purity in HS overlap".into()));
    }
    // Tr[AB] = Σ A_ij B_ji = Σ A_ij conj(B_ij) for Hermitian B
    let cross: f64 = rho1
        .entries()
        .iter()
        .zip(rho2.entries())
        .map(|(a, b)| (a * b.conj()).re)
        .sum();
    Ok(cross / denom)
}

/// sqrt(Tr[(ρ1 − ρ2)²]).
pub fn hs_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    same_dim(rho1, rho2)?;
    let s: f64 = rho1
        .entries()
        .iter()
        .zip(rho2.entries())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Ok(s.sqrt())
}

fn check_pair(n: usize, i: usize, j: usize) -> Result<()> {
    if i == j {
        return Err(Error::invalid(format!(
            "negativity needs two distinct qubits, got {i} twice"
        )));
    }
    if i >= n || j >= n {
        return Err(Error::invalid(format!(
            "qubit pair ({i}, {j}) out of range for {n} qubits"
        )));
    }
    Ok(())
}

/// Local index (2·bit_i + bit_j) and the index of the remaining qubits.
fn split(index: usize, n: usize, i: usize, j: usize) -> (usize, usize) {
    let local = 2 * bit_of(index, n, i) + bit_of(index, n, j);
    let mut rest = 0;
    for q in (0..n).filter(|&q| q != i && q != j) {
        rest = (rest << 1) | bit_of(index, n, q);
    }
    (local, rest)
}

/// Two-qubit reduced density matrix on (i, j), local basis |b_i b_j⟩.
pub(crate) fn reduced_pair(rho: &DensityMatrix, i: usize, j: usize) -> Matrix4<C64> {
    let n = rho.n_qubits();
    let dim = rho.dim();
    let parts: Vec<(usize, usize)> = (0..dim).map(|x| split(x, n, i, j)).collect();
    let mut m = Matrix4::<C64>::zeros();
    for r in 0..dim {
        let (lr, rr) = parts[r];
        for c in 0..dim {
            let (lc, rc) = parts[c];
            if rr == rc {
                m[(lr, lc)] += rho.get(r, c);
            }
        }
    }
    m
}

fn reduced_pair_pure(state: &StateVector, i: usize, j: usize) -> Matrix4<C64> {
    let n = state.n_qubits();
    let rest_dim = 1usize << (n - 2);
    let mut blocks = vec![[C64::new(0.0, 0.0); 4]; rest_dim];
    for (x, a) in state.amplitudes().iter().enumerate() {
        let (l, r) = split(x, n, i, j);
        blocks[r][l] = *a;
    }
    let mut m = Matrix4::<C64>::zeros();
    for v in &blocks {
        for r in 0..4 {
            for c in 0..4 {
                m[(r, c)] += v[r] * v[c].conj();
            }
        }
    }
    m
}

fn negativity_of(reduced: &Matrix4<C64>) -> f64 {
    // partial transpose on the second qubit: swap b_j ↔ b_j'
    let mut pt = Matrix4::<C64>::zeros();
    for r in 0..4 {
        for c in 0..4 {
            let (ri, rj) = (r >> 1, r & 1);
            let (ci, cj) = (c >> 1, c & 1);
            pt[(2 * ri + cj, 2 * ci + rj)] = reduced[(r, c)];
        }
    }
    let sym = (pt + pt.adjoint()) * C64::new(0.5, 0.0);
    sym.symmetric_eigenvalues()
        .iter()
        .filter(|l| **l < 0.0)
        .map(|l| -l)
        .sum()
}

/// Sum of |negative eigenvalues| of the partial transpose (on `j`) of the
/// reduced state of qubits (i, j).
pub fn pair_negativity(rho: &DensityMatrix, i: usize, j: usize) -> Result<f64> {
    check_pair(rho.n_qubits(), i, j)?;
    Ok(negativity_of(&reduced_pair(rho, i, j)))
}

/// [`pair_negativity`] of |ψ⟩⟨ψ| without forming the full density matrix.
pub fn pair_negativity_pure(state: &StateVector, i: usize, j: usize) -> Result<f64> {
    check_pair(state.n_qubits(), i, j)?;
    Ok(negativity_of(&reduced_pair_pure(state, i, j)))
}
