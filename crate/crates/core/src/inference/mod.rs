//! Parameter inference from per-ensemble QoI data.

mod bjw;
mod kde;
mod prior;
mod standard;
mod summary;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{ModelSpec, NoiseParams, QoiModel};

pub use bjw::{bjw_infer, MIN_DRAWS, MIN_OBS, SAFETY_FACTOR};
pub use kde::{gaussian_kde, scott_bandwidth, KdeModel};
pub use prior::{PriorSpec, TruncatedNormal, DEFAULT_DRAWS};
pub use standard::{standard_infer, standard_infer_with, McmcOptions};
pub use summary::{
    effective_sample_size, marginal_means, marginal_peaks, posterior_map_tuple, posterior_mean_tuple, MAP_GRID_STEP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Bjw,
    Standard,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Bjw => "bjw",
            Method::Standard => "standard",
        }
    }
}

/// KDE bandwidths used for the pushforward comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bandwidths {
    pub obs: Option<f64>,
    pub prior_pushforward: Option<f64>,
    pub posterior_pushforward: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcDiagnostics {
    pub steps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub proposal_sd: Vec<f64>,
    pub ess: Vec<f64>,
    pub min_ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub bandwidth_rule: String,
    pub kl_grid: usize,
    pub kl_floor: f64,
    pub prior_draws: usize,
    /// Rejection bound (BJW only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcmc: Option<McmcDiagnostics>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Posterior samples and summaries. Samples are flattened in
/// [`NoiseParams::to_vec`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSet {
    pub method: Method,
    pub n_qubits: usize,
    pub param_names: Vec<String>,
    pub accepted: Vec<Vec<f64>>,
    pub acceptance_rate: f64,
    pub mean_tuple: NoiseParams,
    pub map_tuple: NoiseParams,
    pub marginal_means: Vec<f64>,
    /// `KL(posterior pushforward ‖ observed)`.
    pub pushforward_kl: Option<f64>,
    /// `KL(prior pushforward ‖ observed)`.
    pub prior_pushforward_kl: Option<f64>,
    pub bandwidths: Bandwidths,
    pub seed: u64,
    pub diagnostics: Diagnostics,
}

impl PosteriorSet {
    pub fn accepted_params(&self) -> Result<Vec<NoiseParams>> {
        self.accepted.iter().map(|v| NoiseParams::from_slice(v)).collect()
    }

    /// `Q` at every accepted sample.
    pub fn pushforward(&self, spec: &ModelSpec) -> Result<Vec<f64>> {
        let model = QoiModel::new(spec);
        self.accepted
            .iter()
            .map(|v| model.evaluate(&NoiseParams::from_slice(v)?))
            .collect()
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }
}

/// Summaries shared by both methods.
pub(crate) fn summarize(accepted: &[Vec<f64>]) -> Result<(NoiseParams, NoiseParams, Vec<f64>)> {
    let mean = NoiseParams::from_slice(&posterior_mean_tuple(accepted)?)?;
    let map = NoiseParams::from_slice(&posterior_map_tuple(accepted)?)?;
    Ok((mean, map, marginal_means(accepted)?))
}

pub(crate) fn check_dims(prior: &PriorSpec, spec: &ModelSpec) -> Result<()> {
    prior.validate()?;
    if prior.n_qubits() != spec.n_qubits {
        return Err(Error::DimensionMismatch { expected: spec.n_qubits, got: prior.n_qubits() });
    }
    Ok(())
}
