//! Noise-parameter inference and error filtering for small quantum circuits,
//! carried out entirely on a classical computer.
//!
//! The crate has four layers:
//!
//! * [`linalg`]: probability vectors, Kronecker chains, Walsh transforms,
//!   simplex projection and a dense LU solver.
//! * [`sim`]: a statevector simulator with Monte Carlo Pauli and readout
//!   noise, used to synthesize shot ensembles with known ground truth.
//! * [`forward`] and [`filters`]: closed-form propagation of readout and
//!   bit-flip noise, and the matching backward filters.
//! * [`inference`] and [`metrics`]: rejection-sampling and Metropolis
//!   inference of the noise parameters, plus KL diagnostics and reports.

pub mod error;
pub mod filters;
pub mod forward;
pub mod inference;
pub mod linalg;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use filters::{
    build_g, calibration_filter, combined_filter, gate_filter, meas_filter, CalibrationFilter,
    CombinedFilter, GateFilterMatrix, MeasFilter,
};
pub use forward::{meas_matrix, push_bitflip, push_measurement, qoi, ModelSpec, NoiseParams, QoiModel};
pub use inference::{
    bjw_infer, gaussian_kde, posterior_map_tuple, posterior_mean_tuple, standard_infer, KdeModel,
    Method, PosteriorSet, PriorSpec, TruncatedNormal,
};
pub use linalg::{
    basis_index, basis_string, fourier_coeffs, fourier_eval, kron_chain, project_simplex,
    project_to_prob, solve_dense, walsh_matrix, FourierSpectrum, ProbVector, SquareMatrix,
};
pub use metrics::{kl_divergence, qoi_derivative, sensitivity_sweep, Curve, SweepParam};
pub use report::{emit_report, RunArtifacts};
pub use sim::{
    circuit_library, ensemble_qoi, sample_noisy, simulate_ideal, Circuit, Gate, GateKind,
    LibraryCircuit, NoiseSpec, ShotEnsemble, Target,
};
