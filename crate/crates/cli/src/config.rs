//! Run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use qniff::inference::{McmcOptions, DEFAULT_DRAWS};
use qniff::linalg::basis_string;
use qniff::{simulate_ideal, Circuit, LibraryCircuit, NoiseParams, NoiseSpec, PriorSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SHOTS: u64 = 1024;
pub const DEFAULT_ENSEMBLES: usize = 128;

/// A library circuit (`{"name": "grover2"}`) or a circuit JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CircuitSource {
    File { file: PathBuf },
    Library(LibraryCircuit),
}

impl CircuitSource {
    pub fn build(&self, base: &Path) -> CliResult<Circuit> {
        match self {
            CircuitSource::Library(lib) => Ok(lib.build()?),
            CircuitSource::File { file } => {
                let path = if file.is_absolute() { file.clone() } else { base.join(file) };
                let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
                Ok(Circuit::from_json(&text)?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSelector {
    #[default]
    Bjw,
    Standard,
    Both,
}

impl MethodSelector {
    pub fn methods(&self) -> Vec<qniff::Method> {
        use qniff::Method;
        match self {
            MethodSelector::Bjw => vec![Method::Bjw],
            MethodSelector::Standard => vec![Method::Standard],
            MethodSelector::Both => vec![Method::Bjw, Method::Standard],
        }
    }
}

/// Either an explicit prior or one centered on a perturbed copy of the
/// ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorConfig {
    Perturbed {
        #[serde(default = "defaults::gate_sd")]
        gate_sd: f64,
        #[serde(default = "defaults::readout_sd")]
        readout_sd: f64,
        #[serde(default = "defaults::gate_shift")]
        gate_shift: f64,
        #[serde(default = "defaults::readout_shift")]
        readout_shift: f64,
        #[serde(default = "defaults::draws")]
        draws: usize,
    },
    /// Used as is for joint inference, and for every qubit in per-qubit mode.
    Explicit { spec: PriorSpec },
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig::Perturbed {
            gate_sd: defaults::gate_sd(),
            readout_sd: defaults::readout_sd(),
            gate_shift: defaults::gate_shift(),
            readout_shift: defaults::readout_shift(),
            draws: defaults::draws(),
        }
    }
}

impl PriorConfig {
    pub fn resolve(&self, truth: &NoiseParams, seed: u64) -> CliResult<PriorSpec> {
        let spec = match self {
            PriorConfig::Perturbed { gate_sd, readout_sd, gate_shift, readout_shift, draws } => {
                PriorSpec::perturbed(truth, *gate_sd, *readout_sd, *gate_shift, *readout_shift, *draws, seed)?
            }
            PriorConfig::Explicit { spec } => spec.clone(),
        };
        if spec.n_qubits() != truth.n_qubits() {
            return Err(CliError::Validation(format!(
                "prior has {} parameters, expected {}",
                spec.dim(),
                1 + 2 * truth.n_qubits()
            )));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceConfig {
    /// Circuit whose data the parameters are inferred from. Defaults to the
    /// main circuit.
    #[serde(default)]
    pub test_circuit: Option<CircuitSource>,
    /// Infer each qubit's `(eps_g, eps_m0, eps_m1)` from its marginal.
    #[serde(default)]
    pub per_qubit: bool,
    /// Bit-flip layers in the forward model; defaults to the largest
    /// per-qubit gate count of the test circuit.
    #[serde(default)]
    pub m: Option<u32>,
    /// QoI basis string; defaults to the most likely ideal outcome.
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub mcmc: McmcOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    Meas,
    Gate,
    #[default]
    Combined,
    Calibration,
}

impl FilterMode {
    pub fn name(&self) -> &'static str {
        match self {
            FilterMode::Meas => "meas",
            FilterMode::Gate => "gate",
            FilterMode::Combined => "combined",
            FilterMode::Calibration => "calibration",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    #[serde(default)]
    pub mode: FilterMode,
    /// Also filter with the ground-truth parameters.
    #[serde(default)]
    pub include_truth: bool,
    /// Slot 0 uses the ground truth; later slots redraw data with every
    /// parameter shifted by an independent `N(0, drift_sd)`.
    #[serde(default = "defaults::time_slots")]
    pub time_slots: usize,
    #[serde(default = "defaults::drift_sd")]
    pub drift_sd: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            mode: FilterMode::default(),
            include_truth: false,
            time_slots: defaults::time_slots(),
            drift_sd: defaults::drift_sd(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    #[serde(default = "defaults::sweep_param")]
    pub param: String,
    #[serde(default = "defaults::sweep_range")]
    pub range: (f64, f64),
    #[serde(default = "defaults::sweep_steps")]
    pub steps: usize,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self { param: defaults::sweep_param(), range: defaults::sweep_range(), steps: defaults::sweep_steps() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub circuit: CircuitSource,
    /// QoI basis string for filtering and sensitivity; defaults to the most
    /// likely ideal outcome.
    #[serde(default)]
    pub qoi_target: Option<String>,
    /// Ground truth used for synthesis.
    pub noise: NoiseSpec,
    #[serde(default = "defaults::shots")]
    pub shots: u64,
    #[serde(default = "defaults::ensembles")]
    pub ensembles: usize,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub method: MethodSelector,
    #[serde(default)]
    pub inference: InferenceConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub sensitivity: SensitivityConfig,
}

mod defaults {
    pub fn gate_sd() -> f64 {
        0.01
    }
    pub fn readout_sd() -> f64 {
        0.1
    }
    pub fn gate_shift() -> f64 {
        0.005
    }
    pub fn readout_shift() -> f64 {
        0.02
    }
    pub fn draws() -> usize {
        super::DEFAULT_DRAWS
    }
    pub fn time_slots() -> usize {
        1
    }
    pub fn drift_sd() -> f64 {
        0.005
    }
    pub fn sweep_param() -> String {
        "eps_g".into()
    }
    pub fn sweep_range() -> (f64, f64) {
        (0.0, 0.5)
    }
    pub fn sweep_steps() -> usize {
        101
    }
    pub fn shots() -> u64 {
        super::DEFAULT_SHOTS
    }
    pub fn ensembles() -> usize {
        super::DEFAULT_ENSEMBLES
    }
}

/// Config plus everything derived from it.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub circuit: Circuit,
    pub test_circuit: Option<Circuit>,
    pub truth: NoiseParams,
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Build circuits and check cross-field consistency. Relative circuit
    /// file paths are taken from `base`.
    pub fn resolve(self, base: &Path) -> CliResult<Resolved> {
        if self.shots == 0 || self.ensembles == 0 {
            return Err(CliError::Validation("shots and ensembles must be positive".into()));
        }
        if self.filter.time_slots == 0 {
            return Err(CliError::Validation("time_slots must be at least 1".into()));
        }
        if !(self.filter.drift_sd >= 0.0 && self.filter.drift_sd.is_finite()) {
            return Err(CliError::Validation("drift_sd must be nonnegative".into()));
        }
        let circuit = self.circuit.build(base)?;
        let n = circuit.n_qubits();
        self.noise.validate(n)?;
        let test_circuit = match &self.inference.test_circuit {
            Some(src) => {
                let c = src.build(base)?;
                if c.n_qubits() != n {
                    return Err(CliError::Validation(format!(
                        "test circuit has {} qubits, main circuit has {n}",
                        c.n_qubits()
                    )));
                }
                Some(c)
            }
            None => None,
        };
        let (e0, e1) = self.noise.readout.iter().cloned().unzip();
        let truth = NoiseParams::new(self.noise.eps_g, e0, e1)?;
        let r = Resolved { config: self, circuit, test_circuit, truth };
        r.qoi_target()?;
        Ok(r)
    }
}

/// First index of the largest entry.
pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn gates_per_qubit(c: &Circuit) -> u32 {
    (0..c.n_qubits()).map(|q| c.gates_on(q)).max().unwrap_or(0) as u32
}

impl Resolved {
    pub fn n_qubits(&self) -> usize {
        self.circuit.n_qubits()
    }

    pub fn qoi_target(&self) -> CliResult<String> {
        let n = self.n_qubits();
        let t = match &self.config.qoi_target {
            Some(t) => t.clone(),
            None => basis_string(argmax(simulate_ideal(&self.circuit).values()), n),
        };
        qniff::basis_index(&t, n)?;
        Ok(t)
    }

    pub fn inference_circuit(&self) -> &Circuit {
        self.test_circuit.as_ref().unwrap_or(&self.circuit)
    }
}
