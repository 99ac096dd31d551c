//! Integral ingestion and the spin-orbital Hamiltonian.
//!
//! FCIDUMP files (Molpro convention) are parsed into [`SpatialIntegrals`], expanded
//! into a [`SpinOrbitalHamiltonian`], and reduced to the correlated ("non-frozen")
//! orbital space by [`SpinOrbitalHamiltonian::freeze_core`] and
//! [`SpinOrbitalHamiltonian::select_active`].

mod fcidump;
mod hamiltonian;
mod manifest;

pub use fcidump::{parse_fcidump, read_fcidump, write_fcidump, SpatialIntegrals};
pub use hamiltonian::{
    to_spin_orbitals, ActiveSpace, Spin, SpinLayout, SpinOrbital, SpinOrbitalHamiltonian,
};
pub use manifest::{FixtureEntry, FixtureManifest};
