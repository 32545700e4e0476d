//! Entanglement entropy bounds for systems with a conserved particle number,
//! plus the exact-diagonalization machinery to watch a fermion chain reach
//! them under unitary evolution.

pub mod basis;
pub mod bounds;
pub mod eigen;
pub mod error;
pub mod experiment;
pub mod hamiltonian;
pub mod maximizer;
pub mod measures;
pub mod nelder_mead;
pub mod oracle;
pub mod states;

pub use error::{Error, Result};
