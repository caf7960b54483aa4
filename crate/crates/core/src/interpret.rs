//! Post-hoc diagnostics: connected two-body correlators from shots or from a
//! model, their basis aggregation C_ij, and weight-space coupling and
//! affinity matrices of an unconstrained RBM.

use serde::{Deserialize, Serialize};

use crate::measure::MeasurementDataset;
use crate::nqs::{model_born_probs, NqsModel, PureNqs, RbmHalf};
use crate::qcore::{check_qubits, Axis, BasisPattern, QuantumState};
use crate::{Error, Result};

/// c[i][j][α][β] for i ≠ j, α, β ∈ {X, Y, Z}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorTensor {
    pub n: usize,
    /// Flattened as ((i·n + j)·3 + α)·3 + β; NaN where absent.
    entries: Vec<f64>,
    /// Supporting shots per entry (data mode only).
    support: Option<Vec<usize>>,
}

fn slot(n: usize, i: usize, j: usize, a: Axis, b: Axis) -> usize {
    ((i * n + j) * 3 + a.index()) * 3 + b.index()
}

impl CorrelatorTensor {
    /// `None` on the diagonal or where no shot supports the estimate.
    pub fn get(&self, i: usize, j: usize, a: Axis, b: Axis) -> Option<f64> {
        if i == j {
            return None;
        }
        let v = self.entries[slot(self.n, i, j, a, b)];
        (!v.is_nan()).then_some(v)
    }

    pub fn support(&self, i: usize, j: usize, a: Axis, b: Axis) -> Option<usize> {
        self.support.as_ref().map(|s| s[slot(self.n, i, j, a, b)])
    }

    pub fn is_complete(&self, i: usize, j: usize) -> bool {
        Axis::ALL
            .iter()
            .all(|a| Axis::ALL.iter().all(|b| self.get(i, j, *a, *b).is_some()))
    }

    /// Zero one entry (both orientations).
    pub fn clear(&mut self, i: usize, j: usize, a: Axis, b: Axis) {
        let n = self.n;
        self.entries[slot(n, i, j, a, b)] = 0.0;
        self.entries[slot(n, j, i, b, a)] = 0.0;
    }
}

/// Connected correlators from shots whose basis has α at i and β at j,
/// with eigenvalues σ = 1 − 2·bit.
pub fn data_correlators(dataset: &MeasurementDataset) -> Result<CorrelatorTensor> {
    let n = dataset.n_qubits();
    if dataset.n_shots() == 0 {
        return Err(Error::invalid("empty dataset"));
    }
    let size = n * n * 9;
    // count, Σσiσj, Σσi, Σσj
    let mut acc = vec![[0.0f64; 4]; size];
    let mut support = vec![0usize; size];
    let mut sigma = vec![0.0; n];
    for rec in dataset.records() {
        let axes = dataset.basis_of(rec).axes();
        for (q, s) in sigma.iter_mut().enumerate() {
            *s = rec.outcome.eigenvalue(q);
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let k = slot(n, i, j, axes[i], axes[j]);
                support[k] += 1;
                let a = &mut acc[k];
                a[0] += 1.0;
                a[1] += sigma[i] * sigma[j];
                a[2] += sigma[i];
                a[3] += sigma[j];
            }
        }
    }
    let entries = acc
        .iter()
        .map(|a| {
            if a[0] == 0.0 {
                f64::NAN
            } else {
                a[1] / a[0] - (a[2] / a[0]) * (a[3] / a[0])
            }
        })
        .collect();
    Ok(CorrelatorTensor {
        n,
        entries,
        support: Some(support),
    })
}

fn exact_correlators(
    n: usize,
    probs_in: impl Fn(&BasisPattern) -> Result<Vec<f64>>,
) -> Result<CorrelatorTensor> {
    check_qubits(n)?;
    let mut entries = vec![f64::NAN; n * n * 9];
    for i in 0..n {
        for j in i + 1..n {
            for a in Axis::ALL {
                for b in Axis::ALL {
                    let mut axes = vec![Axis::Z; n];
                    axes[i] = a;
                    axes[j] = b;
                    let probs = probs_in(&BasisPattern::new(axes))?;
                    let (mut sij, mut si, mut sj) = (0.0, 0.0, 0.0);
                    for (x, p) in probs.iter().enumerate() {
                        let ei = 1.0 - 2.0 * ((x >> (n - 1 - i)) & 1) as f64;
                        let ej = 1.0 - 2.0 * ((x >> (n - 1 - j)) & 1) as f64;
                        sij += p * ei * ej;
                        si += p * ei;
                        sj += p * ej;
                    }
                    let c = sij - si * sj;
                    entries[slot(n, i, j, a, b)] = c;
                    entries[slot(n, j, i, b, a)] = c;
                }
            }
        }
    }
    Ok(CorrelatorTensor {
        n,
        entries,
        support: None,
    })
}

/// Exact connected correlators of a trained model (mixture for ensembles).
pub fn model_correlators(model: &NqsModel) -> Result<CorrelatorTensor> {
    exact_correlators(model.n_qubits(), |b| model_born_probs(model, b))
}

/// Exact connected correlators of a known state.
pub fn state_correlators(state: &QuantumState) -> Result<CorrelatorTensor> {
    exact_correlators(state.n_qubits(), |b| state.born_probabilities(b))
}

/// Symmetric n×n matrix with an optional completeness mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMatrix {
    pub n: usize,
    /// Row-major.
    pub values: Vec<f64>,
    /// Per-entry flag: every contributing estimate was present.
    pub complete: Option<Vec<bool>>,
    /// Set when the matrix could not be normalized as intended.
    pub degenerate: bool,
}

impl PairMatrix {
    fn new(n: usize, values: Vec<f64>) -> Self {
        PairMatrix {
            n,
            values,
            complete: None,
            degenerate: false,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    best = best.max(self.get(i, j).abs());
                }
            }
        }
        best
    }

    /// |M| divided by its largest off-diagonal magnitude.
    pub fn normalized_abs(&self) -> PairMatrix {
        let top = self.max_off_diagonal();
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = v.abs());
        if top > 0.0 {
            out.values.iter_mut().for_each(|v| *v /= top);
        } else {
            out.degenerate = true;
        }
        out
    }

    /// One row per line, space-separated, 6 significant digits.
    pub fn to_grid(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| format_sig(self.get(i, j))).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// `%g`-style formatting with 6 significant digits.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 {
            "0".to_string()
        } else {
            v.to_string()
        };
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{v:.5e}");
        let (mant, e) = s.split_once('e').expect("scientific format");
        let mant = if mant.contains('.') {
            mant.trim_end_matches('0').trim_end_matches('.')
        } else {
            mant
        };
        format!("{mant}e{e}")
    }
}

/// C_ij = sqrt(Σ_{αβ} c²); absent entries count as 0 and clear the mask.
pub fn aggregate_cij(t: &CorrelatorTensor) -> PairMatrix {
    let n = t.n;
    let mut values = vec![0.0; n * n];
    let mut complete = vec![true; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut sum = 0.0;
            for a in Axis::ALL {
                for b in Axis::ALL {
                    sum += t.get(i, j, a, b).map_or(0.0, |c| c * c);
                }
            }
            values[i * n + j] = sum.sqrt();
            complete[i * n + j] = t.is_complete(i, j);
        }
    }
    PairMatrix {
        complete: Some(complete),
        ..PairMatrix::new(n, values)
    }
}

/// Which RBM of the pair to inspect.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Half {
    Amplitude,
    Phase,
}

impl Half {
    pub fn name(self) -> &'static str {
        match self {
            Half::Amplitude => "amplitude",
            Half::Phase => "phase",
        }
    }

    fn of(self, model: &PureNqs) -> &RbmHalf {
        match self {
            Half::Amplitude => &model.amplitude,
            Half::Phase => &model.phase,
        }
    }
}

/// Effective pair couplings J = W·Wᵀ of one half.
pub fn coupling_matrix(model: &PureNqs, half: Half) -> PairMatrix {
    let w = half.of(model);
    let n = w.n_visible;
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = w.row(i).iter().zip(w.row(j)).map(|(a, b)| a * b).sum();
        }
    }
    PairMatrix::new(n, values)
}

/// A_ij = 1 − d²_ij / max d² over squared distances between weight rows.
pub fn affinity_matrix(model: &PureNqs, half: Half) -> Result<PairMatrix> {
    let w = half.of(model);
    let n = w.n_visible;
    if n < 2 {
        return Err(Error::invalid("affinity needs at least two qubits"));
    }
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d2[i * n + j] = w
                .row(i)
                .iter()
                .zip(w.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
        }
    }
    let top = d2.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(PairMatrix {
            degenerate: true,
            ..PairMatrix::new(n, vec![1.0; n * n])
        });
    }
    Ok(PairMatrix::new(
        n,
        d2.iter().map(|d| 1.0 - d / top).collect(),
    ))
}

#[cfg(test)]
mod tests;
