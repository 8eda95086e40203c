//! Exact dense simulation of `M` nuclear and `L` probe qubits.
//!
//! Basis ordering: nuclear qubits occupy the most significant bits, probes
//! the least significant, so operators are `nuclear ⊗ probe`. Qubit `q`
//! (counted from the left) of basis index `s` is bit `n − 1 − q`, and bit
//! value 0 is the `σ_z = +1` state.

mod perturbation;
mod protocol;
mod state;
mod system;

pub use perturbation::{perturbation_defect, perturbation_expansion};
pub use protocol::{
    average_over_nuclear_basis, dephased_ghz_observable, run_dd_protocol, run_ghz_protocol,
    NoiseModel, NuclearInit, ProtocolRun,
};
pub use state::{apply_dephasing_channel, evolve, pi_pulse_probes, DensityState, DephasingChannel};
pub use system::{build_effective_hamiltonian, QuantumSystem, DEFAULT_DIMENSION_CAP};

pub use num_complex::Complex64;
pub type CMatrix = nalgebra::DMatrix<Complex64>;
