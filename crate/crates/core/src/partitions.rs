//! Set-partition combinatorics and partition labels.
//!
//! Labels come in two forms. Contiguous partitions use block sizes over the
//! fixed qubit order, `"3|3|4"` meaning {0,1,2}|{3,4,5}|{6,7,8,9}. Arbitrary
//! partitions list the members explicitly, `"{0,2}|{1,3}"`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, MAX_QUBITS};

/// Disjoint non-empty qubit blocks covering `0..n`.
///
/// Blocks are kept in canonical order: each block sorted, blocks ordered by
/// their smallest member.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition {
    n_qubits: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(n_qubits: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n_qubits];
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::invalid("empty block in partition"));
            }
            block.sort_unstable();
            for &q in block.iter() {
                if q >= n_qubits {
                    return Err(Error::invalid(format!(
                        "qubit {q} out of range for {n_qubits} qubits"
                    )));
                }
                if std::mem::replace(&mut seen[q], true) {
                    return Err(Error::invalid(format!("qubit {q} appears in two blocks")));
                }
            }
        }
        if let Some(q) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!(
                "qubit {q} not covered by any block"
            )));
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Partition { n_qubits, blocks })
    }

    /// Single block holding every qubit.
    pub fn full(n_qubits: usize) -> Self {
        Partition {
            n_qubits,
            blocks: vec![(0..n_qubits).collect()],
        }
    }

    /// Contiguous blocks of the given sizes in qubit order.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let mut blocks = Vec::with_capacity(sizes.len());
        let mut start = 0;
        for &s in sizes {
            if s == 0 {
                return Err(Error::invalid("zero block size"));
            }
            blocks.push((start..start + s).collect());
            start += s;
        }
        Partition::new(start, blocks)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Largest block size.
    pub fn d_max(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_full(&self) -> bool {
        self.blocks.len() == 1
    }

    fn is_contiguous(&self) -> bool {
        let mut next = 0;
        for b in &self.blocks {
            if b[0] != next || b.windows(2).any(|w| w[1] != w[0] + 1) {
                return false;
            }
            next = b[b.len() - 1] + 1;
        }
        true
    }

    /// Canonical text label.
    pub fn label(&self) -> String {
        if self.is_contiguous() {
            self.blocks
                .iter()
                .map(|b| b.len().to_string())
                .collect::<Vec<_>>()
                .join("|")
        } else {
            self.blocks
                .iter()
                .map(|b| {
                    let inner: Vec<String> = b.iter().map(usize::to_string).collect();
                    format!("{{{}}}", inner.join(","))
                })
                .collect::<Vec<_>>()
                .join("|")
        }
    }

    /// Block id of every qubit.
    pub fn block_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_qubits];
        for (b, block) in self.blocks.iter().enumerate() {
            for &q in block {
                out[q] = b;
            }
        }
        out
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parse `"n1|n2|…"` (contiguous) or `"{a,b}|{c}|…"` (explicit) for `n` qubits.
pub fn parse_label(label: &str, n: usize) -> Result<Partition> {
    let tokens: Vec<&str> = label.split('|').map(str::trim).collect();
    let explicit = tokens.iter().any(|t| t.starts_with('{'));
    if explicit {
        let mut blocks = Vec::with_capacity(tokens.len());
        for tok in &tokens {
            let inner = tok
                .strip_prefix('{')
                .and_then(|t| t.strip_suffix('}'))
                .ok_or_else(|| Error::Label {
                    token: tok.to_string(),
                    msg: "expected {i,j,...}".into(),
                })?;
            let members = inner
                .split(',')
                .map(|m| {
                    m.trim().parse::<usize>().map_err(|_| Error::Label {
                        token: tok.to_string(),
                        msg: format!("bad qubit index {m:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            blocks.push(members);
        }
        return Partition::new(n, blocks).map_err(|e| Error::Label {
            token: label.to_string(),
            msg: e.to_string(),
        });
    }
    let mut sizes = Vec::with_capacity(tokens.len());
    for tok in &tokens {
        let size: usize = tok.parse().map_err(|_| Error::Label {
            token: tok.to_string(),
            msg: "block size is not a positive integer".into(),
        })?;
        if size == 0 {
            return Err(Error::Label {
                token: tok.to_string(),
                msg: "block size must be positive".into(),
            });
        }
        sizes.push(size);
    }
    let total: usize = sizes.iter().sum();
    if total != n {
        return Err(Error::Label {
            token: tokens.last().copied().unwrap_or_default().to_string(),
            msg: format!("block sizes sum to {total}, expected {n}"),
        });
    }
    Partition::contiguous(&sizes)
}

/// Stirling number of the second kind via S(N+1,k) = k S(N,k) + S(N,k−1).
pub fn stirling2(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    // row[j] holds S(m, j) while m runs 0..=n
    let mut row = vec![BigUint::zero(); k + 1];
    row[0] = BigUint::one();
    for m in 0..n {
        for j in (1..=k.min(m + 1)).rev() {
            let carried = std::mem::take(&mut row[j]) * BigUint::from(j) + &row[j - 1];
            row[j] = carried;
        }
        row[0] = BigUint::zero();
    }
    std::mem::take(&mut row[k])
}

/// Number of set partitions of an `n`-element set.
pub fn bell_number(n: usize) -> BigUint {
    (0..=n).map(|k| stirling2(n, k)).sum()
}

/// Set partitions in restricted-growth-string order.
#[derive(Clone, Debug)]
pub struct PartitionIter {
    rgs: Vec<usize>,
    // running maximum of rgs[0..=i]
    maxes: Vec<usize>,
    done: bool,
}

impl PartitionIter {
    fn new(n: usize) -> Self {
        PartitionIter {
            rgs: vec![0; n],
            maxes: vec![0; n],
            done: n == 0,
        }
    }

    fn advance(&mut self) {
        let n = self.rgs.len();
        // rightmost position that can still be incremented
        for i in (1..n).rev() {
            if self.rgs[i] <= self.maxes[i - 1] {
                self.rgs[i] += 1;
                self.maxes[i] = self.maxes[i - 1].max(self.rgs[i]);
                for j in (i + 1)..n {
                    self.rgs[j] = 0;
                    self.maxes[j] = self.maxes[i];
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let n = self.rgs.len();
        let n_blocks = self.maxes[n - 1] + 1;
        let mut blocks = vec![Vec::new(); n_blocks];
        for (q, &b) in self.rgs.iter().enumerate() {
            blocks[b].push(q);
        }
        self.advance();
        Some(Partition {
            n_qubits: n,
            blocks,
        })
    }
}

/// Every set partition of `0..n` exactly once.
pub fn enumerate_partitions(n: usize) -> Result<PartitionIter> {
    if n > MAX_QUBITS {
        return Err(Error::Capacity {
            what: "partition enumeration size",
            got: n,
            limit: MAX_QUBITS,
        });
    }
    Ok(PartitionIter::new(n))
}

/// Number of set partitions of `0..n` whose largest block has exactly `k` elements.
pub fn count_with_max_block(n: usize, k: usize) -> Result<u64> {
    Ok(enumerate_partitions(n)?.filter(|p| p.d_max() == k).count() as u64)
}
