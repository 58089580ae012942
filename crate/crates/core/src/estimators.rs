//! Monte Carlo estimates of a posterior predictive p-value from posterior draws.
//!
//! With θ₁, …, θ_M drawn from the posterior,
//!
//! * P̂_M averages the indicators 𝕀{f(D*ᵢ, θᵢ) ≥ f(D, θᵢ)} over fresh replicates D*ᵢ;
//! * R̂_M averages the exact conditional tails Q(θᵢ, D).
//!
//! Marginally over (θ, D), R̂_M is sub-uniform for every M and every
//! stationary sampling scheme, while P̂₁ is a fair coin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{parallel_replicates, GenerativeModel, ATOM_TOLERANCE};
use crate::numerics::{EmpiricalSample, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PosteriorSampler {
    Iid,
    /// Stationary chain with lag-1 autocorrelation `rho`.
    ///
    /// Each step keeps the current value with probability ρ and otherwise
    /// redraws from the posterior. This is an independence Metropolis chain
    /// whose proposal is the target itself, slowed down by a rejection rate
    /// of ρ; it is reversible, and started from a posterior draw it is
    /// stationary from the first step.
    Markov {
        rho: f64,
    },
}

impl PosteriorSampler {
    pub fn markov(rho: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::domain(format!("rho must lie in [0, 1), got {rho}")));
        }
        Ok(PosteriorSampler::Markov { rho })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Indicator average P̂_M.
    PHat,
    /// Conditional-tail average R̂_M.
    RHat,
    /// The exact p-value, the M → ∞ limit of both.
    Exact,
}

/// Calls `visit` on M posterior draws given `data`.
fn for_each_draw<M: GenerativeModel>(
    model: &M,
    data: M::Data,
    draws: usize,
    sampler: PosteriorSampler,
    rng: &mut RngStream,
    mut visit: impl FnMut(M::Param, &mut RngStream),
) {
    let mut theta = model.sample_posterior(data, rng);
    visit(theta, rng);
    for _ in 1..draws {
        theta = match sampler {
            PosteriorSampler::Markov { rho } if rng.uniform() < rho => theta,
            _ => model.sample_posterior(data, rng),
        };
        visit(theta, rng);
    }
}

fn check_draws(draws: usize, sampler: PosteriorSampler) -> Result<()> {
    if draws == 0 {
        return Err(Error::domain("the number of posterior draws must be at least 1"));
    }
    if let PosteriorSampler::Markov { rho } = sampler {
        PosteriorSampler::markov(rho)?;
    }
    Ok(())
}

/// P̂_M = (1/M) Σ 𝕀{f(D*ᵢ, θᵢ) ≥ f(D, θᵢ)}, each D*ᵢ drawn fresh given θᵢ.
pub fn estimate_p_hat<M: GenerativeModel>(
    model: &M,
    data: M::Data,
    draws: usize,
    sampler: PosteriorSampler,
    rng: &mut RngStream,
) -> Result<f64> {
    check_draws(draws, sampler)?;
    let mut hits = 0usize;
    for_each_draw(model, data, draws, sampler, rng, |theta, r| {
        let replicate = model.sample_data(theta, r);
        if model.discrepancy(replicate, theta) >= model.discrepancy(data, theta) {
            hits += 1;
        }
    });
    Ok(hits as f64 / draws as f64)
}

/// R̂_M = (1/M) Σ Q(θᵢ, D).
pub fn estimate_r_hat<M: GenerativeModel>(
    model: &M,
    data: M::Data,
    draws: usize,
    sampler: PosteriorSampler,
    rng: &mut RngStream,
) -> Result<f64> {
    check_draws(draws, sampler)?;
    let mut total = 0.0;
    for_each_draw(model, data, draws, sampler, rng, |theta, _| {
        total += model.conditional_sf(theta, data);
    });
    Ok(total / draws as f64)
}

/// Marginal law of an estimator: n_outer draws of (θ, D) from the model,
/// each followed by the chosen estimator.
pub fn marginal_estimator_run<M: GenerativeModel>(
    model: &M,
    draws: usize,
    sampler: PosteriorSampler,
    kind: EstimatorKind,
    n_outer: usize,
    rng: &RngStream,
) -> Result<EmpiricalSample> {
    check_draws(draws, sampler)?;
    let values = parallel_replicates(n_outer, rng, |r| {
        let theta = model.sample_prior(r);
        let data = model.sample_data(theta, r);
        match kind {
            EstimatorKind::PHat => estimate_p_hat(model, data, draws, sampler, r).expect("checked above"),
            EstimatorKind::RHat => estimate_r_hat(model, data, draws, sampler, r).expect("checked above"),
            EstimatorKind::Exact => model.exact_ppp(data),
        }
    })?;
    let sample = EmpiricalSample::new(values)?;
    Ok(match kind {
        EstimatorKind::Exact => sample.snapped(&model.known_atoms(), ATOM_TOLERANCE),
        _ => sample,
    })
}
