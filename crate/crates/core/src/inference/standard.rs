use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::bjw::{check_sizes, prior_pushforward};
use super::kde::{gaussian_kde, KdeModel};
use super::prior::PriorSpec;
use super::summary::effective_sample_size;
use super::{check_dims, summarize, Bandwidths, Diagnostics, McmcDiagnostics, Method, PosteriorSet};
use crate::error::{Error, Result};
use crate::forward::{ModelSpec, NoiseParams, QoiModel};
use crate::metrics::{kl_divergence, DEFAULT_KL_GRID, KL_FLOOR};
use crate::rng::{domain, stream};

/// Chains with a smaller effective sample size get a warning.
const MIN_ESS: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcOptions {
    pub steps: usize,
    pub burn_in_fraction: f64,
    /// Approximate number of retained samples after thinning.
    pub keep: usize,
    pub target_acceptance: f64,
}

impl Default for McmcOptions {
    fn default() -> Self {
        Self { steps: 100_000, burn_in_fraction: 0.2, keep: 2000, target_acceptance: 0.3 }
    }
}

struct Target<'a> {
    prior: &'a PriorSpec,
    model: QoiModel,
    hits: f64,
    misses: f64,
}

impl Target<'_> {
    /// Truncated-normal prior times the product-binomial likelihood, whose
    /// λ-dependent part only needs the summed counts.
    fn log_density(&self, x: &[f64]) -> f64 {
        let lp = self.prior.log_kernel(x);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        let Ok(lambda) = NoiseParams::from_slice(x) else {
            return f64::NEG_INFINITY;
        };
        let Ok(q) = self.model.evaluate(&lambda) else {
            return f64::NEG_INFINITY;
        };
        let ll = |count: f64, p: f64| if count == 0.0 { 0.0 } else { count * p.max(1e-300).ln() };
        lp + ll(self.hits, q) + ll(self.misses, 1.0 - q)
    }
}

fn sd(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    if v.len() < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Random-walk Metropolis–Hastings with default options.
pub fn standard_infer(prior: &PriorSpec, spec: &ModelSpec, obs_counts: &[(u64, u64)], seed: u64) -> Result<PosteriorSet> {
    standard_infer_with(prior, spec, obs_counts, seed, &McmcOptions::default())
}

/// Random-walk Metropolis–Hastings on prior × product-binomial likelihood.
///
/// `obs_counts[k]` is `(target hits, shots)` for ensemble `k`. The proposal
/// is Gaussian with per-parameter sd `scale · σ_i`: `σ_i` starts at the prior
/// sd and is reset to the chain's sd halfway through burn-in; the common
/// `scale` adapts toward the target acceptance during burn-in and is frozen
/// afterwards.
pub fn standard_infer_with(
    prior: &PriorSpec,
    spec: &ModelSpec,
    obs_counts: &[(u64, u64)],
    seed: u64,
    opts: &McmcOptions,
) -> Result<PosteriorSet> {
    check_dims(prior, spec)?;
    check_sizes(prior, obs_counts.len())?;
    if opts.steps < 10 || !(0.0..1.0).contains(&opts.burn_in_fraction) || opts.keep == 0 {
        return Err(Error::invalid("MCMC options out of range"));
    }
    if let Some(bad) = obs_counts.iter().find(|(h, s)| h > s || *s == 0) {
        return Err(Error::invalid(format!("bad ensemble counts {bad:?}")));
    }
    let hits: u64 = obs_counts.iter().map(|c| c.0).sum();
    let total: u64 = obs_counts.iter().map(|c| c.1).sum();
    let target = Target { prior, model: QoiModel::new(spec), hits: hits as f64, misses: (total - hits) as f64 };

    let d = prior.dim();
    let burn_in = (opts.steps as f64 * opts.burn_in_fraction) as usize;
    let kept_steps = opts.steps - burn_in;
    let thin = (kept_steps / opts.keep).max(1);
    let mut rng = stream(seed, domain::CHAIN, 0);

    let mut x = prior.centers();
    let mut lp = target.log_density(&x);
    if lp == f64::NEG_INFINITY {
        return Err(Error::invalid("posterior density is zero at the prior center"));
    }
    let mut sigma: Vec<f64> = prior.params.iter().map(|p| p.sd).collect();
    let mut log_scale = (2.38 / (d as f64).sqrt()).ln();
    let window = 100;
    let mut window_accepts = 0usize;
    let mut burn_trace: Vec<Vec<f64>> = Vec::with_capacity(burn_in / 2 + 1);
    let mut chain = Vec::with_capacity(kept_steps / thin + 1);
    let mut accepts_after = 0usize;
    let mut proposal = vec![0.0; d];

    for step in 0..opts.steps {
        let scale = log_scale.exp();
        for ((p, xi), si) in proposal.iter_mut().zip(&x).zip(&sigma) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *p = xi + scale * si * z;
        }
        let lp_new = target.log_density(&proposal);
        let u: f64 = rng.random();
        let accept = lp_new > f64::NEG_INFINITY && u.ln() < lp_new - lp;
        if accept {
            x.copy_from_slice(&proposal);
            lp = lp_new;
        }

        if step < burn_in {
            window_accepts += accept as usize;
            if (step + 1) % window == 0 {
                let rate = window_accepts as f64 / window as f64;
                let gain = 1.0 / (((step + 1) / window) as f64).sqrt();
                log_scale += 2.0 * gain * (rate - opts.target_acceptance);
                window_accepts = 0;
            }
            if step >= burn_in / 4 && step < burn_in / 2 {
                burn_trace.push(x.clone());
            }
            if step + 1 == burn_in / 2 && burn_trace.len() > 10 {
                for (k, s) in sigma.iter_mut().enumerate() {
                    let emp = sd(burn_trace.iter().map(|t| t[k]));
                    if emp > 0.0 {
                        *s = emp;
                    }
                }
                log_scale = (2.38 / (d as f64).sqrt()).ln();
            }
        } else {
            accepts_after += accept as usize;
            if (step - burn_in) % thin == 0 {
                chain.push(x.clone());
            }
        }
    }

    let ess: Vec<f64> = (0..d)
        .map(|k| effective_sample_size(&chain.iter().map(|s| s[k]).collect::<Vec<_>>()))
        .collect();
    let min_ess = ess.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut warnings = Vec::new();
    if min_ess < MIN_ESS {
        warnings.push(format!("chain is not mixing: minimum effective sample size {min_ess:.1} < {MIN_ESS}"));
    }

    let obs_qoi: Vec<f64> = obs_counts.iter().map(|(h, s)| *h as f64 / *s as f64).collect();
    let obs_kde = match gaussian_kde(&obs_qoi) {
        Ok(k) => Some(k),
        Err(Error::DegenerateSamples(m)) => {
            warnings.push(format!("observed QoI KDE unavailable: {m}"));
            None
        }
        Err(e) => return Err(e),
    };
    let (_, prior_q) = prior_pushforward(prior, spec, seed)?;
    let prior_kde = gaussian_kde(&prior_q).ok();
    let post_q: Vec<f64> = chain
        .iter()
        .map(|s| target.model.evaluate(&NoiseParams::from_slice(s)?))
        .collect::<Result<_>>()?;
    let post_kde = gaussian_kde(&post_q).ok();
    let kl_to_obs = |k: &Option<KdeModel>| -> Result<Option<f64>> {
        match (k, &obs_kde) {
            (Some(k), Some(o)) => Ok(Some(kl_divergence(k, o, DEFAULT_KL_GRID)?)),
            _ => Ok(None),
        }
    };
    let prior_kl = kl_to_obs(&prior_kde)?;
    let post_kl = kl_to_obs(&post_kde)?;

    let (mean_tuple, map_tuple, marginal_means) = summarize(&chain)?;
    Ok(PosteriorSet {
        method: Method::Standard,
        n_qubits: spec.n_qubits,
        param_names: NoiseParams::param_names(spec.n_qubits),
        accepted: chain,
        acceptance_rate: accepts_after as f64 / kept_steps.max(1) as f64,
        mean_tuple,
        map_tuple,
        marginal_means,
        pushforward_kl: post_kl,
        prior_pushforward_kl: prior_kl,
        bandwidths: Bandwidths {
            obs: obs_kde.as_ref().map(|k| k.bandwidth()),
            prior_pushforward: prior_kde.map(|k| k.bandwidth()),
            posterior_pushforward: post_kde.map(|k| k.bandwidth()),
        },
        seed,
        diagnostics: Diagnostics {
            bandwidth_rule: "scott".into(),
            kl_grid: DEFAULT_KL_GRID,
            kl_floor: KL_FLOOR,
            prior_draws: prior.draws,
            mu: None,
            mcmc: Some(McmcDiagnostics {
                steps: opts.steps,
                burn_in,
                thin,
                proposal_sd: sigma.iter().map(|s| s * log_scale.exp()).collect(),
                ess,
                min_ess,
            }),
            warnings,
        },
    })
}
