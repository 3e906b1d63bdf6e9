//! One-step belief updates.
//!
//! All rules are built on the Bayesian posterior `B(q, x)`. The conservative
//! rule mixes it with the prior, `(1 − γ) q + γ B(q, x)`.

use thiserror::Error;

use crate::model::{Belief, Model, ModelError};
use crate::schedule::{WeightContext, WeightSchedule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UpdateError {
    #[error("weight {gamma} pushes the belief out of the simplex (entry {entry})")]
    OutOfSimplex { gamma: f64, entry: f64 },
    #[error("invalid weight {0}")]
    InvalidWeight(f64),
    #[error("noisy posterior is not a simplex point: {0}")]
    InvalidNoise(String),
    #[error("observation index {index} out of range (model has {len})")]
    ObservationOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check_inputs(model: &Model, q: &Belief, x: usize) -> Result<(), UpdateError> {
    if x >= model.n_obs() {
        return Err(UpdateError::ObservationOutOfRange {
            index: x,
            len: model.n_obs(),
        });
    }
    if q.len() != model.n_params() {
        return Err(ModelError::DimensionMismatch(format!(
            "belief has {} entries, model has {} parameters",
            q.len(),
            model.n_params()
        ))
        .into());
    }
    Ok(())
}

/// Writes `B(q, x)` into `out`. The denominator is positive because every
/// `p_θ` has full support.
pub(crate) fn posterior_into(model: &Model, q: &[f64], x: usize, out: &mut [f64]) {
    let mut norm = 0.0;
    for (theta, (o, w)) in out.iter_mut().zip(q).enumerate() {
        *o = w * model.likelihood(theta, x);
        norm += *o;
    }
    for o in out.iter_mut() {
        *o /= norm;
    }
}

/// Mixes `q` toward `posterior` with weight `gamma` in place, returning the
/// most negative entry produced (0 if none).
pub(crate) fn mix_into(q: &mut [f64], posterior: &[f64], gamma: f64) -> f64 {
    let mut min = 0.0f64;
    for (w, b) in q.iter_mut().zip(posterior) {
        *w = (1.0 - gamma) * *w + gamma * b;
        min = min.min(*w);
    }
    min
}

/// Bayesian posterior `B_θ(q, x) = q_θ p_θ(x) / Σ_θ' q_θ' p_θ'(x)`.
pub fn bayes_posterior(model: &Model, q: &Belief, x: usize) -> Result<Belief, UpdateError> {
    check_inputs(model, q, x)?;
    let mut out = vec![0.0; q.len()];
    posterior_into(model, q.as_slice(), x, &mut out);
    Ok(Belief::from_nonnegative(out))
}

/// Conservative update `(1 − γ) q + γ B(q, x)`.
///
/// Weights above 1 are accepted as long as the result stays in the simplex;
/// otherwise use [`overreaction_update`].
pub fn cbay_update(model: &Model, q: &Belief, x: usize, gamma: f64) -> Result<Belief, UpdateError> {
    check_inputs(model, q, x)?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(UpdateError::InvalidWeight(gamma));
    }
    let mut posterior = vec![0.0; q.len()];
    posterior_into(model, q.as_slice(), x, &mut posterior);
    let mut next = q.as_slice().to_vec();
    let min = mix_into(&mut next, &posterior, gamma);
    if min < 0.0 {
        return Err(UpdateError::OutOfSimplex { gamma, entry: min });
    }
    Ok(Belief::from_nonnegative(next))
}

/// Conservative update with a noisy posterior estimate `b(q, x)`.
///
/// `noise` receives the exact posterior and returns the estimate; for the
/// limit theory to apply its conditional mean must be the posterior.
pub fn noisy_cbay_update<F>(model: &Model, q: &Belief, x: usize, gamma: f64, noise: F) -> Result<Belief, UpdateError>
where
    F: FnOnce(&Belief) -> Vec<f64>,
{
    check_inputs(model, q, x)?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(UpdateError::InvalidWeight(gamma));
    }
    let posterior = bayes_posterior(model, q, x)?;
    let estimate = noise(&posterior);
    if estimate.len() != q.len() {
        return Err(UpdateError::InvalidNoise(format!(
            "estimate has {} entries, expected {}",
            estimate.len(),
            q.len()
        )));
    }
    let estimate = Belief::new(estimate).map_err(|e| UpdateError::InvalidNoise(e.to_string()))?;
    let mut next = q.as_slice().to_vec();
    mix_into(&mut next, estimate.as_slice(), gamma);
    Ok(Belief::from_nonnegative(next))
}

/// Tempered posterior `q_θ p_θ(x)^γ / Σ_θ' q_θ' p_θ'(x)^γ`, computed in log
/// space.
pub fn generalized_bayes_update(model: &Model, q: &Belief, x: usize, gamma: f64) -> Result<Belief, UpdateError> {
    check_inputs(model, q, x)?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(UpdateError::InvalidWeight(gamma));
    }
    let mut out = q.as_slice().to_vec();
    generalized_into(model, &mut out, x, gamma);
    Ok(Belief::from_nonnegative(out))
}

pub(crate) fn generalized_into(model: &Model, q: &mut [f64], x: usize, gamma: f64) {
    let mut max = f64::NEG_INFINITY;
    for (theta, w) in q.iter_mut().enumerate() {
        *w = if *w > 0.0 {
            w.ln() + gamma * model.likelihood(theta, x).ln()
        } else {
            f64::NEG_INFINITY
        };
        max = max.max(*w);
    }
    let mut norm = 0.0;
    for w in q.iter_mut() {
        *w = (*w - max).exp();
        norm += *w;
    }
    for w in q.iter_mut() {
        *w /= norm;
    }
}

/// Conservative update with observation-dependent weight `γ_n α(x)`.
pub fn observation_dependent_update(
    model: &Model,
    q: &Belief,
    x: usize,
    gamma_n: f64,
    alpha: &[f64],
) -> Result<Belief, UpdateError> {
    check_inputs(model, q, x)?;
    if alpha.len() != model.n_obs() {
        return Err(ModelError::DimensionMismatch(format!(
            "{} observation weights for {} observations",
            alpha.len(),
            model.n_obs()
        ))
        .into());
    }
    cbay_update(model, q, x, gamma_n * alpha[x])
}

/// Update with weight `γ > 1`. If the raw update leaves the simplex, each
/// entry is clamped to `[clamp_eps, 1 − clamp_eps]` and the result is
/// renormalized.
pub fn overreaction_update(
    model: &Model,
    q: &Belief,
    x: usize,
    gamma: f64,
    clamp_eps: f64,
) -> Result<Belief, UpdateError> {
    check_inputs(model, q, x)?;
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(UpdateError::InvalidWeight(gamma));
    }
    if !(clamp_eps > 0.0 && clamp_eps < 1.0 / model.n_params() as f64) {
        return Err(UpdateError::InvalidWeight(clamp_eps));
    }
    let mut posterior = vec![0.0; q.len()];
    posterior_into(model, q.as_slice(), x, &mut posterior);
    let mut next = q.as_slice().to_vec();
    overreact_into(&mut next, &posterior, gamma, clamp_eps);
    Ok(Belief::from_nonnegative(next))
}

pub(crate) fn overreact_into(q: &mut [f64], posterior: &[f64], gamma: f64, clamp_eps: f64) {
    let min = mix_into(q, posterior, gamma);
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min < 0.0 || max > 1.0 {
        for w in q.iter_mut() {
            *w = w.clamp(clamp_eps, 1.0 - clamp_eps);
        }
        let norm: f64 = q.iter().sum();
        for w in q.iter_mut() {
            *w /= norm;
        }
    }
}

/// One update of `q` after observing `x` at (1-based) `step`, using the rule
/// the schedule selects.
pub fn apply_schedule(
    model: &Model,
    schedule: &WeightSchedule,
    q: &Belief,
    x: usize,
    step: u64,
) -> Result<Belief, UpdateError> {
    match schedule {
        WeightSchedule::PureBayes => bayes_posterior(model, q, x),
        WeightSchedule::Decreasing(family) => cbay_update(model, q, x, family.weight(step)),
        WeightSchedule::Constant(g) => cbay_update(model, q, x, *g),
        WeightSchedule::ObservationDependent { base, alpha } => {
            let g = base.base_weight(step).expect("base schedules are deterministic");
            observation_dependent_update(model, q, x, g, alpha)
        }
        WeightSchedule::GeneralizedBayes(base) => {
            let g = base.base_weight(step).expect("base schedules are deterministic");
            generalized_bayes_update(model, q, x, g)
        }
        WeightSchedule::Overreacting { base, clamp } => {
            overreaction_update(model, q, x, base + 1.0 / step.max(1) as f64, *clamp)
        }
        WeightSchedule::Custom(c) => {
            let g = c.weight(&WeightContext {
                step,
                belief: q,
                observation: x,
            });
            cbay_update(model, q, x, g)
        }
    }
}
