use std::path::Path;

use qniff::linalg::basis_string;
use qniff::rng::{derive_seed, domain, stream};
use qniff::{sample_noisy, LibraryCircuit, NoiseSpec};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{gates_per_qubit, Resolved};
use crate::error::CliResult;
use crate::rundir::{self, calibration_file, slot_file};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub file: String,
    pub circuit: String,
    pub rng_seed: u64,
    pub noise: NoiseSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub circuit: String,
    pub n_qubits: usize,
    pub gates_per_qubit: u32,
    pub qoi_target: String,
    pub shots: u64,
    pub ensembles: usize,
    pub files: Vec<FileRecord>,
}

/// Truth for slot `t`: every rate shifted by `N(0, sd)` and clamped back
/// into its valid range.
pub fn drifted_noise(truth: &NoiseSpec, sd: f64, seed: u64, t: usize) -> NoiseSpec {
    if t == 0 || sd == 0.0 {
        return truth.clone();
    }
    let mut rng = stream(seed, domain::DRIFT, t as u64);
    let normal = Normal::new(0.0, sd).expect("sd checked at config load");
    let mut shift = |v: f64, hi: f64| (v + normal.sample(&mut rng)).clamp(0.0, hi);
    let eps_g = shift(truth.eps_g, 0.999);
    let readout = truth.readout.iter().map(|&(e0, e1)| (shift(e0, 0.499), shift(e1, 0.499))).collect();
    NoiseSpec { eps_g, readout }
}

pub fn cmd_simulate(r: &Resolved, out: &Path) -> CliResult<()> {
    rundir::ensure_dir(out)?;
    let cfg = &r.config;
    let n = r.n_qubits();
    let mut files = Vec::new();
    let mut run = |file: String, circuit: &qniff::Circuit, noise: &NoiseSpec, rng_seed: u64| -> CliResult<()> {
        let e = sample_noisy(circuit, noise, cfg.shots, cfg.ensembles, rng_seed)?;
        rundir::write_ensemble(&out.join(&file), &e)?;
        files.push(FileRecord { file, circuit: circuit.label().to_string(), rng_seed, noise: noise.clone() });
        Ok(())
    };

    for t in 0..cfg.filter.time_slots {
        let noise = drifted_noise(&cfg.noise, cfg.filter.drift_sd, cfg.seed, t);
        run(slot_file(t), &r.circuit, &noise, derive_seed(cfg.seed, seeds::SLOT + t as u64))?;
    }
    if let Some(test) = &r.test_circuit {
        run(rundir::TEST_ENSEMBLES.into(), test, &cfg.noise, derive_seed(cfg.seed, seeds::TEST))?;
    }
    // basis-state preparations for the calibration filter
    for j in 0..1usize << n {
        let prep = LibraryCircuit::BasisPrep { n, index: j }.build()?;
        let file = calibration_file(&basis_string(j, n));
        run(file, &prep, &cfg.noise, derive_seed(cfg.seed, seeds::CALIBRATION + j as u64))?;
    }

    let prov = Provenance {
        tool: "qniff".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        circuit: r.circuit.label().to_string(),
        n_qubits: n,
        gates_per_qubit: gates_per_qubit(&r.circuit),
        qoi_target: r.qoi_target()?,
        shots: cfg.shots,
        ensembles: cfg.ensembles,
        files,
    };
    rundir::write_json(&out.join(rundir::PROVENANCE), &prov)
}
