//! Driven Kerr resonators with one- and two-photon loss in a truncated Fock
//! space: states, Hamiltonians, Lindblad dynamics, steady states and
//! phase-space diagnostics.

pub mod analysis;
pub mod approx;
pub mod cli;
pub mod error;
pub mod fock;
pub mod liouville;
pub mod model;
pub mod special;
pub mod states;

pub use error::{Error, Result};
pub use fock::{DensityOperator, FockSpace, OperatorMatrix, StateVector, C64};
