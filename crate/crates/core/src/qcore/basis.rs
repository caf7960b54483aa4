use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::C64;
use crate::{Error, Result};

/// Local Pauli measurement axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i]
    }

    pub fn as_char(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Axis> {
        match c {
            'X' => Some(Axis::X),
            'Y' => Some(Axis::Y),
            'Z' => Some(Axis::Z),
            _ => None,
        }
    }

    /// Unitary taking the +1/−1 eigenstates of this axis to |0⟩/|1⟩.
    /// X: Hadamard. Y: Hadamard·S†. Z needs no rotation.
    pub fn readout_gate(self) -> Option<[[C64; 2]; 2]> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Axis::X => Some([
                [C64::new(r, 0.0), C64::new(r, 0.0)],
                [C64::new(r, 0.0), C64::new(-r, 0.0)],
            ]),
            Axis::Y => Some([
                [C64::new(r, 0.0), C64::new(0.0, -r)],
                [C64::new(r, 0.0), C64::new(0.0, r)],
            ]),
            Axis::Z => None,
        }
    }
}

/// One Pauli axis per qubit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisPattern(Vec<Axis>);

impl BasisPattern {
    pub fn new(axes: Vec<Axis>) -> Self {
        BasisPattern(axes)
    }

    pub fn uniform(n: usize, axis: Axis) -> Self {
        BasisPattern(vec![axis; n])
    }

    pub fn axes(&self) -> &[Axis] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All 3^n patterns in lexicographic X < Y < Z order.
    pub fn all(n: usize) -> Vec<BasisPattern> {
        let total = 3usize.pow(n as u32);
        (0..total)
            .map(|mut code| {
                let mut axes = vec![Axis::X; n];
                for slot in axes.iter_mut().rev() {
                    *slot = Axis::from_index(code % 3);
                    code /= 3;
                }
                BasisPattern(axes)
            })
            .collect()
    }
}

impl fmt::Display for BasisPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.0 {
            write!(f, "{}", a.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for BasisPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::invalid("empty basis pattern"));
        }
        s.chars()
            .map(|c| {
                Axis::from_char(c).ok_or_else(|| {
                    Error::invalid(format!("basis character {c:?} not in {{X,Y,Z}}"))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(BasisPattern)
    }
}

/// Measurement outcome; bit `q` is qubit `q`, qubit 0 most significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring {
    n: usize,
    index: usize,
}

impl Bitstring {
    pub fn from_index(n: usize, index: usize) -> Result<Self> {
        if n == 0 || n > usize::BITS as usize - 1 || index >> n != 0 {
            return Err(Error::invalid(format!(
                "index {index} does not fit {n} bits"
            )));
        }
        Ok(Bitstring { n, index })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut index = 0usize;
        for &b in bits {
            if b > 1 {
                return Err(Error::invalid(format!("bit value {b} not in {{0,1}}")));
            }
            index = (index << 1) | b as usize;
        }
        Bitstring::from_index(bits.len(), index)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn bit(&self, q: usize) -> u8 {
        super::bit_of(self.index, self.n, q) as u8
    }

    /// Eigenvalue ±1 of qubit `q` (bit 0 ↦ +1).
    pub fn eigenvalue(&self, q: usize) -> f64 {
        1.0 - 2.0 * self.bit(q) as f64
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            write!(f, "{}", self.bit(q))?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                _ => Err(Error::invalid(format!(
                    "bit character {c:?} not in {{0,1}}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Bitstring::from_bits(&bits)
    }
}
