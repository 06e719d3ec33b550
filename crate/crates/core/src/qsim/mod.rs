//! Dense statevector simulation: states, circuits, measurement, QFT and
//! phase estimation over diagonal unitaries.

mod circuit;
mod kernels;
mod qft;
mod state;

pub use circuit::{normalize_turn, Circuit, Gate, GateKind, Matrix2};
pub use kernels::gather_bits;
pub use qft::{inverse_qft_circuit, phase_estimation_circuit, qft_circuit, qpe_register_size};
pub use state::{
    apply, measure_subregister, sample_index, StateVector, DEFAULT_QUBIT_CAP, STATE_TOL,
};

/// Functional alias for [`Circuit::controlled`].
pub fn controlled(circuit: &Circuit, controls: &[usize]) -> crate::Result<Circuit> {
    circuit.controlled(controls)
}
