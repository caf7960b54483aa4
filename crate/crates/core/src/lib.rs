//! Certification of multipartite entanglement depth from randomized local
//! Pauli measurement data.
//!
//! A fully connected restricted-Boltzmann-machine wavefunction and a family
//! of partition-constrained (block-product) wavefunctions are fitted by
//! maximum likelihood to the same bitstring dataset. Persistent likelihood
//! gaps for every partition whose largest block has at most `k` qubits rule
//! out `k`-producible descriptions of the data, certifying an entanglement
//! depth larger than `k`.
//!
//! Modules:
//! - [`qcore`]: dense states, basis rotations, Born probabilities, amplitude
//!   damping and state diagnostics.
//! - [`measure`]: randomized basis sampling, shot simulation, frequency tables
//!   and the dataset file format.
//! - [`partitions`]: Stirling/Bell counting, set-partition enumeration and labels.
//! - [`nqs`]: RBM wavefunctions, separable variants, ensembles and checkpoints.
//! - [`train`]: exact NLL, analytic gradients and Adam with cosine decay.
//! - [`certify`]: hypothesis hierarchies, likelihood gaps and depth certificates.
//! - [`interpret`]: correlators, coupling and affinity matrices.

pub mod certify;
pub mod error;
pub mod interpret;
pub mod measure;
pub mod nqs;
pub mod partitions;
pub mod qcore;
pub mod rng;
pub mod train;

pub use error::{Error, Result};

/// Hard cap on the number of qubits handled by exact enumeration.
pub const MAX_QUBITS: usize = 12;
