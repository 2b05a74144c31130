//! Statevector simulation with Monte Carlo noise injection.

mod circuit;
mod ensemble;
mod library;
mod noise;
mod state;

pub use circuit::{Circuit, Gate, GateKind};
pub use ensemble::{ensemble_qoi, ShotEnsemble, Target};
pub use library::{circuit_library, LibraryCircuit, CLIFFORD_WORD_LEN, QAOA4_EDGES, QAOA4_OPTIMAL};
pub use noise::{sample_noisy, simulate_ideal, NoiseSpec};
