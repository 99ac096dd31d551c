//! Noise-free UCCSD-VQE toolkit for small molecules.
//!
//! The pipeline runs from FCIDUMP integrals to reaction energies:
//!
//! * [`hamio`] reads integrals, builds the spin-orbital Hamiltonian, folds frozen
//!   core orbitals and truncates the virtual space.
//! * [`pauli`] implements Pauli-string algebra and the Jordan–Wigner mapping.
//! * [`ansatz`] enumerates UCCSD excitations and screens doubles with MP2.
//! * [`circuit`] synthesizes Pauli exponentials, cancels gates and counts them.
//! * [`simulator`] is a dense state-vector simulator.
//! * [`vqe`] minimizes the simulated energy with L-BFGS.
//! * [`fci`] is the exact-diagonalization oracle.
//! * [`resources`] fits and extrapolates two-qubit gate counts.
//! * [`workflow`] composes reaction energies and resource brackets.

pub mod ansatz;
pub mod circuit;
pub mod error;
pub mod fci;
pub mod hamio;
pub mod pauli;
pub mod resources;
pub mod simulator;
pub mod units;
pub mod vqe;
pub mod workflow;

#[cfg(test)]
pub(crate) mod dense_oracle;

pub use error::{Error, Result};
