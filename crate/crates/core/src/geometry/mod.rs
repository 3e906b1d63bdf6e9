//! Analytic objects of the learning problem.
//!
//! For a belief `q` the predictive distribution is `L(q) = Σ_θ q_θ p_θ`, and
//! its cross-entropy against the truth is `V(q) = Σ_x p*(x) log L(q)(x)`.
//! The mean field of the conservative rule is `H_θ(q) = q_θ (f_θ(q) − 1)`
//! with `f_θ(q) = Σ_x p*(x) p_θ(x) / L(q)(x)`, which is also `∂V/∂q_θ`.
//!
//! The functions below accept any slice-like weight vector so they can be
//! evaluated off the simplex (finite differences, flows between
//! renormalizations). They assume `L(q)` is strictly positive.

mod family;
mod mixture;

pub use family::{is_convex_independent, is_full, is_tight};
pub use mixture::{lambda_set, AffineBasis, MixtureSet};

use thiserror::Error;

use crate::model::Model;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("{what} supports at most {max} parameters, model has {got}")]
    NotSupported { what: &'static str, max: usize, got: usize },
    #[error("observation weights: {0}")]
    InvalidAlpha(String),
}

/// Largest parameter count for the exact subset searches.
pub const MAX_PARAMS: usize = 16;

/// Predictive distribution `Σ_θ q_θ p_θ`.
pub fn predictive<Q: AsRef<[f64]> + ?Sized>(model: &Model, q: &Q) -> Vec<f64> {
    let mut out = vec![0.0; model.n_obs()];
    for (w, row) in q.as_ref().iter().zip(model.rows()) {
        if *w != 0.0 {
            for (o, p) in out.iter_mut().zip(row) {
                *o += w * p;
            }
        }
    }
    out
}

/// Cross-entropy of a distribution on X against the truth.
pub fn cross_entropy_of(true_dgp: &[f64], dist: &[f64]) -> f64 {
    true_dgp.iter().zip(dist).map(|(p, r)| p * r.ln()).sum()
}

/// `V(q) = Σ_x p*(x) log(Σ_θ q_θ p_θ(x))`.
pub fn cross_entropy_v<Q: AsRef<[f64]> + ?Sized>(model: &Model, q: &Q) -> f64 {
    cross_entropy_of(model.true_dgp(), &predictive(model, q))
}

/// `f_θ` evaluated at a given predictive distribution. Only depends on `q`
/// through `L(q)`.
pub fn f_at_predictive(model: &Model, pred: &[f64]) -> Vec<f64> {
    let ratio: Vec<f64> = model.true_dgp().iter().zip(pred).map(|(p, r)| p / r).collect();
    model
        .rows()
        .map(|row| row.iter().zip(&ratio).map(|(a, b)| a * b).sum())
        .collect()
}

/// The vectors `f(q)` and `H(q)`.
pub fn f_and_h<Q: AsRef<[f64]> + ?Sized>(model: &Model, q: &Q) -> (Vec<f64>, Vec<f64>) {
    let q = q.as_ref();
    let f = f_at_predictive(model, &predictive(model, q));
    let h = q.iter().zip(&f).map(|(w, fv)| w * (fv - 1.0)).collect();
    (f, h)
}

/// Mean field `H(q) = E_{p*}[B(q, ·)] − q`.
pub fn mean_field<Q: AsRef<[f64]> + ?Sized>(model: &Model, q: &Q) -> Vec<f64> {
    f_and_h(model, q).1
}

/// Gradient of `V` in ambient coordinates; identical to `f(q)`.
pub fn grad_v<Q: AsRef<[f64]> + ?Sized>(model: &Model, q: &Q) -> Vec<f64> {
    f_and_h(model, q).0
}

/// Time derivative of `V` along the flow `q̇ = H(q)`:
/// `Σ_θ q_θ f_θ (f_θ − 1)`. Non-negative on the simplex.
pub fn lyapunov_derivative<Q: AsRef<[f64]> + ?Sized>(model: &Model, q: &Q) -> f64 {
    let q = q.as_ref();
    let (f, _) = f_and_h(model, q);
    q.iter().zip(&f).map(|(w, fv)| w * fv * (fv - 1.0)).sum()
}

/// `KL(p ‖ r) = Σ p log(p / r)` for full-support distributions.
pub fn kl_divergence(p: &[f64], r: &[f64]) -> f64 {
    p.iter()
        .zip(r)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).ln())
        .sum()
}

/// Expected log growth of the weight on `theta` under one constant-weight
/// update: `Σ_x p*(x) log((1 − γ) + γ p_θ(x) / L(q)(x))`.
pub fn growth_rate<Q: AsRef<[f64]> + ?Sized>(model: &Model, q: &Q, gamma: f64, theta: usize) -> f64 {
    let pred = predictive(model, q);
    model
        .true_dgp()
        .iter()
        .zip(model.row(theta))
        .zip(&pred)
        .map(|((ps, p), r)| ps * ((1.0 - gamma) + gamma * p / r).ln())
        .sum()
}

/// As-if data-generating process `p*(x) α(x) / Σ_x' p*(x') α(x')`.
pub fn as_if_dgp(model: &Model, alpha: &[f64]) -> Result<Vec<f64>, GeometryError> {
    if alpha.len() != model.n_obs() {
        return Err(GeometryError::InvalidAlpha(format!(
            "{} weights for {} observations",
            alpha.len(),
            model.n_obs()
        )));
    }
    if let Some(a) = alpha.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(GeometryError::InvalidAlpha(format!("{a} is outside (0, 1]")));
    }
    let weighted: Vec<f64> = model.true_dgp().iter().zip(alpha).map(|(p, a)| p * a).collect();
    let norm: f64 = weighted.iter().sum();
    Ok(weighted.into_iter().map(|w| w / norm).collect())
}
