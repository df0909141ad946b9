//! State vectors, Hamiltonians, the Schrödinger propagator and a Hermitian
//! eigensolver shared by every model in the crate.

mod eigen;
mod hamiltonian;
mod propagate;
mod state;

pub use eigen::{eigendecompose, eigendecompose_raw, EigenPair};
pub use hamiltonian::{hermiticity_defect, max_abs, HamiltonianModel, StaticHamiltonian};
pub use propagate::{propagate, propagate_amplitudes, step_count, Trajectory, DEFAULT_DT};
pub use state::{fidelity, Basis, StateVector, NORM_TOLERANCE};
