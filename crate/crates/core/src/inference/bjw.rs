use rand::Rng;
use rayon::prelude::*;

use super::kde::{gaussian_kde, KdeModel};
use super::prior::PriorSpec;
use super::{check_dims, summarize, Bandwidths, Diagnostics, Method, PosteriorSet};
use crate::error::{Error, Result};
use crate::forward::{ModelSpec, NoiseParams, QoiModel};
use crate::metrics::{kl_divergence, DEFAULT_KL_GRID, KL_FLOOR};
use crate::rng::{domain, stream};

/// Inflation applied to the sampled maximum density ratio.
pub const SAFETY_FACTOR: f64 = 1.05;
/// Smallest prior sample accepted.
pub const MIN_DRAWS: usize = 1000;
/// Smallest observed QoI sample accepted.
pub const MIN_OBS: usize = 30;

pub(crate) fn check_sizes(prior: &PriorSpec, n_obs: usize) -> Result<()> {
    if prior.draws < MIN_DRAWS {
        return Err(Error::invalid(format!("need at least {MIN_DRAWS} prior draws, got {}", prior.draws)));
    }
    if n_obs < MIN_OBS {
        return Err(Error::invalid(format!("need at least {MIN_OBS} observed QoI values, got {n_obs}")));
    }
    Ok(())
}

/// Push prior draws through `Q`.
pub(crate) fn prior_pushforward(prior: &PriorSpec, spec: &ModelSpec, seed: u64) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let draws = prior.sample(seed);
    let model = QoiModel::new(spec);
    let q = draws
        .par_iter()
        .map(|d| model.evaluate(&NoiseParams::from_slice(d)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok((draws, q))
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let i = ((sorted.len() - 1) as f64 * p).round() as usize;
    sorted[i]
}

/// `∫ min(p, q)` on a shared grid.
fn overlap(p: &KdeModel, q: &KdeModel) -> f64 {
    let (a0, a1) = p.range();
    let (b0, b1) = q.range();
    let pad = 5.0 * p.bandwidth().max(q.bandwidth());
    let (lo, hi) = (a0.min(b0) - pad, a1.max(b1) + pad);
    let n = 2048;
    let dx = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| lo + i as f64 * dx).collect();
    let (pv, qv) = (p.evaluate_many(&xs), q.evaluate_many(&xs));
    pv.iter().zip(&qv).map(|(a, b)| a.min(*b)).sum::<f64>() * dx
}

fn no_acceptance(reason: &str, ratios: &[f64], prior_kde: &KdeModel, obs_kde: &KdeModel) -> Error {
    let mut sorted = ratios.to_vec();
    sorted.sort_by(f64::total_cmp);
    Error::NoAcceptance(format!(
        "{reason}; density ratio quantiles p50={:.3e} p90={:.3e} p99={:.3e} max={:.3e}; KDE overlap {:.3e}; \
         prior pushforward range [{:.4}, {:.4}], observed range [{:.4}, {:.4}]",
        quantile(&sorted, 0.5),
        quantile(&sorted, 0.9),
        quantile(&sorted, 0.99),
        sorted[sorted.len() - 1],
        overlap(prior_kde, obs_kde),
        prior_kde.range().0,
        prior_kde.range().1,
        obs_kde.range().0,
        obs_kde.range().1,
    ))
}

/// Rejection sampling of prior draws so their pushforward matches the
/// observed QoI density.
///
/// Draw `λ_j` from the prior, compute `q_j = Q(λ_j)`, and fit KDEs to the
/// `q_j` and to `obs_qoi`. Draw `k` is accepted when
/// `π_obs(q_k) / π_prior(q_k) / μ` exceeds a uniform `ζ_k`, where `μ` is the
/// largest sampled ratio times [`SAFETY_FACTOR`].
pub fn bjw_infer(prior: &PriorSpec, spec: &ModelSpec, obs_qoi: &[f64], seed: u64) -> Result<PosteriorSet> {
    check_dims(prior, spec)?;
    check_sizes(prior, obs_qoi.len())?;
    let obs_kde = gaussian_kde(obs_qoi)?;
    let (draws, q) = prior_pushforward(prior, spec, seed)?;
    let prior_kde = gaussian_kde(&q).map_err(|e| match e {
        Error::DegenerateSamples(m) => {
            Error::DegenerateSamples(format!("prior pushforward is a point mass ({m}); Q does not depend on the prior"))
        }
        other => other,
    })?;

    let num = obs_kde.evaluate_many(&q);
    let den = prior_kde.evaluate_many(&q);
    let ratios: Vec<f64> = num.iter().zip(&den).map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 }).collect();
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    if !(max_ratio > 0.0) {
        return Err(no_acceptance(
            "observed density is zero at every prior pushforward value (disjoint supports)",
            &ratios,
            &prior_kde,
            &obs_kde,
        ));
    }
    let mu = max_ratio * SAFETY_FACTOR;

    let mut rng = stream(seed, domain::ACCEPT, 0);
    let mut accepted = Vec::new();
    let mut accepted_q = Vec::new();
    for ((d, r), qk) in draws.into_iter().zip(&ratios).zip(&q) {
        let zeta: f64 = rng.random();
        if r / mu > zeta {
            accepted.push(d);
            accepted_q.push(*qk);
        }
    }
    if accepted.is_empty() {
        return Err(no_acceptance("no draw passed the acceptance test", &ratios, &prior_kde, &obs_kde));
    }

    let mut warnings = Vec::new();
    let prior_kl = kl_divergence(&prior_kde, &obs_kde, DEFAULT_KL_GRID)?;
    let (post_kl, post_bw) = match gaussian_kde(&accepted_q) {
        Ok(k) => (Some(kl_divergence(&k, &obs_kde, DEFAULT_KL_GRID)?), Some(k.bandwidth())),
        Err(Error::DegenerateSamples(m)) => {
            warnings.push(format!("posterior pushforward KDE unavailable: {m}"));
            (None, None)
        }
        Err(e) => return Err(e),
    };
    let (mean_tuple, map_tuple, marginal_means) = summarize(&accepted)?;
    Ok(PosteriorSet {
        method: Method::Bjw,
        n_qubits: spec.n_qubits,
        param_names: NoiseParams::param_names(spec.n_qubits),
        acceptance_rate: accepted.len() as f64 / prior.draws as f64,
        accepted,
        mean_tuple,
        map_tuple,
        marginal_means,
        pushforward_kl: post_kl,
        prior_pushforward_kl: Some(prior_kl),
        bandwidths: Bandwidths {
            obs: Some(obs_kde.bandwidth()),
            prior_pushforward: Some(prior_kde.bandwidth()),
            posterior_pushforward: post_bw,
        },
        seed,
        diagnostics: Diagnostics {
            bandwidth_rule: "scott".into(),
            kl_grid: DEFAULT_KL_GRID,
            kl_floor: KL_FLOOR,
            prior_draws: prior.draws,
            mu: Some(mu),
            mcmc: None,
            warnings,
        },
    })
}
