use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::NoiseParams;
use crate::rng::{domain, stream};

/// Default number of prior draws.
pub const DEFAULT_DRAWS: usize = 20_000;

/// Normal distribution restricted to `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedNormal {
    pub center: f64,
    pub sd: f64,
    #[serde(default)]
    pub lower: f64,
    #[serde(default = "one")]
    pub upper: f64,
}

fn one() -> f64 {
    1.0
}

impl TruncatedNormal {
    /// Truncated to `[0, 1]`.
    pub fn new(center: f64, sd: f64) -> Result<Self> {
        let t = Self { center, sd, lower: 0.0, upper: 1.0 };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sd > 0.0 && self.sd.is_finite()) {
            return Err(Error::invalid(format!("prior sd must be positive, got {}", self.sd)));
        }
        if !(self.lower < self.upper) {
            return Err(Error::invalid(format!("prior bounds [{}, {}] are empty", self.lower, self.upper)));
        }
        if !(self.lower..=self.upper).contains(&self.center) {
            return Err(Error::invalid(format!(
                "prior center {} outside [{}, {}]",
                self.center, self.lower, self.upper
            )));
        }
        Ok(())
    }

    /// Rejection from the untruncated normal. The center lies inside the
    /// interval, so at least a few percent of proposals land for any sd up
    /// to the interval width.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let z: f64 = StandardNormal.sample(rng);
            let x = self.center + self.sd * z;
            if (self.lower..=self.upper).contains(&x) {
                return x;
            }
        }
    }

    /// Log density up to the truncation constant; `-inf` outside the bounds.
    pub fn log_kernel(&self, x: f64) -> f64 {
        if !(self.lower..=self.upper).contains(&x) {
            return f64::NEG_INFINITY;
        }
        let z = (x - self.center) / self.sd;
        -0.5 * z * z
    }
}

/// Independent truncated-normal priors in [`NoiseParams::to_vec`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub params: Vec<TruncatedNormal>,
    /// Number of prior draws `L`.
    #[serde(default = "default_draws")]
    pub draws: usize,
}

fn default_draws() -> usize {
    DEFAULT_DRAWS
}

impl PriorSpec {
    pub fn new(params: Vec<TruncatedNormal>, draws: usize) -> Result<Self> {
        let p = Self { params, draws };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.len() < 3 || self.params.len() % 2 == 0 {
            return Err(Error::invalid(format!("prior has {} parameters, expected 1 + 2n", self.params.len())));
        }
        for p in &self.params {
            p.validate()?;
        }
        if self.draws == 0 {
            return Err(Error::invalid("prior needs at least one draw"));
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        (self.params.len() - 1) / 2
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    /// Priors centered on `center` with sd `gate_sd` for `eps_g` and
    /// `readout_sd` for the readout rates.
    pub fn around(center: &NoiseParams, gate_sd: f64, readout_sd: f64, draws: usize) -> Result<Self> {
        let params = center
            .to_vec()
            .into_iter()
            .enumerate()
            .map(|(i, c)| TruncatedNormal::new(c, if i == 0 { gate_sd } else { readout_sd }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(params, draws)
    }

    /// Synthetic-data priors: each center is the truth plus an independent
    /// normal offset (`gate_shift` sd for `eps_g`, `readout_shift` sd for the
    /// rest), folded back into `[0, 1)`.
    #[allow(clippy::too_many_arguments)]
    pub fn perturbed(
        truth: &NoiseParams,
        gate_sd: f64,
        readout_sd: f64,
        gate_shift: f64,
        readout_shift: f64,
        draws: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = stream(seed, domain::PRIOR, u64::MAX);
        let shifted: Vec<f64> = truth
            .to_vec()
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                let shift = if i == 0 { gate_shift } else { readout_shift };
                let z: f64 = StandardNormal.sample(&mut rng);
                fold_unit(t + shift * z)
            })
            .collect();
        Self::around(&NoiseParams::from_slice(&shifted)?, gate_sd, readout_sd, draws)
    }

    /// Draw `j` comes from its own stream, so the set is independent of
    /// thread scheduling.
    pub fn sample(&self, seed: u64) -> Vec<Vec<f64>> {
        (0..self.draws)
            .into_par_iter()
            .map(|j| {
                let mut rng = stream(seed, domain::PRIOR, j as u64);
                self.params.iter().map(|p| p.sample(&mut rng)).collect()
            })
            .collect()
    }

    pub fn log_kernel(&self, x: &[f64]) -> f64 {
        self.params.iter().zip(x).map(|(p, v)| p.log_kernel(*v)).sum()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.center).collect()
    }
}

/// Reflect into `[0, 1)` and keep away from the open endpoints.
fn fold_unit(x: f64) -> f64 {
    let mut v = x.abs();
    if v >= 1.0 {
        v = 2.0 - v;
    }
    v.clamp(1e-6, 1.0 - 1e-6)
}
