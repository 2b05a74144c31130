//! Fixtures shared by the criterion benchmarks.

use qniff::{ProbVector, ShotEnsemble};

/// Deterministic interior distribution on `n` qubits.
pub fn spread_distribution(n: usize) -> ProbVector {
    let dim = 1usize << n;
    let raw: Vec<f64> = (0..dim).map(|i| 1.0 + ((i * 7919) % 13) as f64).collect();
    let total: f64 = raw.iter().sum();
    ProbVector::new(raw.into_iter().map(|v| v / total).collect()).expect("normalized")
}

/// Per-ensemble QoI values spread around `center`.
pub fn qoi_samples(len: usize, center: f64, width: f64) -> Vec<f64> {
    (0..len)
        .map(|i| center + width * (((i * 2654435761) % 1000) as f64 / 1000.0 - 0.5))
        .collect()
}

/// Single-qubit ensembles with `zeros` hits out of 1024 shots each.
pub fn flat_ensembles(ensembles: usize, zeros: u64) -> ShotEnsemble {
    ShotEnsemble::new(1, vec![vec![zeros, 1024 - zeros]; ensembles], 0).expect("valid counts")
}
