use std::fmt;
use std::sync::Arc;

use crate::geometry::{predictive, GeometryError};
use crate::model::Model;

type AlphaFn = dyn Fn(usize, &[f64]) -> f64 + Send + Sync;

/// Observation weights `α(x)` or `α(x, q)` scaling the update weight.
#[derive(Clone)]
pub enum Alpha {
    PerObservation(Vec<f64>),
    BeliefDependent(Arc<AlphaFn>),
}

impl fmt::Debug for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PerObservation(a) => f.debug_tuple("PerObservation").field(a).finish(),
            Self::BeliefDependent(_) => f.write_str("BeliefDependent(..)"),
        }
    }
}

impl Alpha {
    pub fn belief_dependent<F>(f: F) -> Self
    where
        F: Fn(usize, &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::BeliefDependent(Arc::new(f))
    }

    /// Confirmation-biased weights for two parameters and two observations,
    /// where observation 0 favours parameter 0. An observation that agrees
    /// with the currently more likely parameter gets `confirming`, one that
    /// contradicts it gets `contradicting`, and both get `tie` at `q = 1/2`.
    pub fn self_confirming(confirming: f64, contradicting: f64, tie: f64) -> Self {
        Self::belief_dependent(move |x, q| {
            let q0 = q[0];
            if q0 == 0.5 {
                tie
            } else if (q0 > 0.5) == (x == 0) {
                confirming
            } else {
                contradicting
            }
        })
    }

    pub fn at(&self, x: usize, q: &[f64]) -> f64 {
        match self {
            Self::PerObservation(a) => a[x],
            Self::BeliefDependent(f) => f(x, q),
        }
    }
}

/// `Ĥ_θ(q) = q_θ Σ_x p*(x) α(x, q) (p_θ(x)/L(q)(x) − 1)`, the mean field of
/// observation-weighted updating.
pub fn hat_h(model: &Model, q: &[f64], alpha: &Alpha) -> Result<Vec<f64>, GeometryError> {
    if let Alpha::PerObservation(a) = alpha {
        if a.len() != model.n_obs() {
            return Err(GeometryError::InvalidAlpha(format!(
                "{} weights for {} observations",
                a.len(),
                model.n_obs()
            )));
        }
    }
    let pred = predictive(model, q);
    let p_star = model.true_dgp();
    Ok((0..model.n_params())
        .map(|t| {
            let s: f64 = (0..model.n_obs())
                .map(|x| p_star[x] * alpha.at(x, q) * (model.likelihood(t, x) / pred[x] - 1.0))
                .sum();
            q[t] * s
        })
        .collect())
}

/// Zeros of a scalar function on `[lo, hi]`: exact zeros on a uniform grid
/// of `n` cells plus bisection-refined sign changes. A sign change is kept
/// only if the function is within `tol` of zero at the refined point, which
/// discards jump discontinuities.
pub fn scan_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize, tol: f64) -> Vec<f64> {
    let grid = |i: usize| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 };
    let mut roots: Vec<f64> = Vec::new();
    let push = |r: f64, roots: &mut Vec<f64>| {
        if roots.last().is_none_or(|last| (r - last).abs() > 1e-9) {
            roots.push(r);
        }
    };
    let mut prev = f(grid(0));
    if prev.abs() <= tol {
        push(grid(0), &mut roots);
    }
    for i in 1..=n {
        let x = grid(i);
        let cur = f(x);
        if prev.abs() > tol && cur.abs() > tol && prev.signum() != cur.signum() {
            let (mut a, mut b, mut fa) = (grid(i - 1), x, prev);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let fm = f(m);
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            let r = 0.5 * (a + b);
            if f(r).abs() <= tol {
                push(r, &mut roots);
            }
        }
        if cur.abs() <= tol {
            push(x, &mut roots);
        }
        prev = cur;
    }
    roots
}
