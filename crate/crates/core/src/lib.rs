//! Three-level Λ-type rf-SQUID qubits: arbitrary single-qubit rotations via
//! coupled/uncoupled states, and cavity-mediated transfer and entanglement of
//! two qubits by (fractional) adiabatic passage.
//!
//! Units throughout: time in ns, every frequency-like quantity an angular
//! frequency in rad/ns, and hbar = 1.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cavity;
pub mod device;
pub mod error;
pub mod pulse;
pub mod quantum;
pub mod rotation;
pub mod runner;
mod serde_complex;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use pulse::Pulse;
pub use quantum::{
    eigendecompose, fidelity, propagate, Basis, EigenPair, HamiltonianModel, StateVector,
    Trajectory, DEFAULT_DT,
};
