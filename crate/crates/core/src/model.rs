//! Learning problems and beliefs.
//!
//! A [`Model`] is a finite family of candidate distributions `p_θ` over a
//! finite observation set, together with the true data-generating process
//! `p*`. Every distribution must have full support. A [`Belief`] is a point
//! of the parameter simplex.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the sum of any stored probability vector.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Largest deviation of an input row sum from 1 that ingestion will repair
/// by renormalizing.
pub const STOCHASTIC_TOL: f64 = 1e-9;

// Rows closer to 1 than this are left untouched, which keeps validation
// idempotent bit-for-bit.
const RENORMALIZE_SKIP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("zero probability in {0}: full support is required")]
    ZeroLikelihood(String),
    #[error("{what} sums to {sum}, not 1")]
    NotStochastic { what: String, sum: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid probability {value} in {what}")]
    InvalidEntry { what: String, value: f64 },
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("parameter index {index} out of range (model has {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid belief: {0}")]
    InvalidBelief(String),
}

/// Unvalidated model data, as read from a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawModel {
    pub theta_labels: Vec<String>,
    pub x_labels: Vec<String>,
    pub likelihoods: Vec<Vec<f64>>,
    pub true_dgp: Vec<f64>,
}

impl RawModel {
    /// Raw model with generated labels `theta1..`, `x1..`.
    pub fn unlabeled(likelihoods: Vec<Vec<f64>>, true_dgp: Vec<f64>) -> Self {
        let n_theta = likelihoods.len();
        let n_x = true_dgp.len();
        Self {
            theta_labels: (1..=n_theta).map(|i| format!("theta{i}")).collect(),
            x_labels: (1..=n_x).map(|i| format!("x{i}")).collect(),
            likelihoods,
            true_dgp,
        }
    }
}

/// A validated learning problem. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    theta_labels: Vec<String>,
    x_labels: Vec<String>,
    // row-major, rows indexed by parameter
    likelihoods: Vec<f64>,
    true_dgp: Vec<f64>,
}

/// Checks the support and normalization assumptions and returns a [`Model`].
///
/// Rows whose sum is off by at most [`STOCHASTIC_TOL`] are renormalized.
pub fn validate_model(raw: &RawModel) -> Result<Model, ModelError> {
    let n_theta = raw.likelihoods.len();
    let n_x = raw.true_dgp.len();
    if n_theta == 0 {
        return Err(ModelError::DimensionMismatch("no parameters".into()));
    }
    if n_x == 0 {
        return Err(ModelError::DimensionMismatch("no observations".into()));
    }
    if raw.theta_labels.len() != n_theta {
        return Err(ModelError::DimensionMismatch(format!(
            "{} parameter labels for {} likelihood rows",
            raw.theta_labels.len(),
            n_theta
        )));
    }
    if raw.x_labels.len() != n_x {
        return Err(ModelError::DimensionMismatch(format!(
            "{} observation labels for a true distribution of length {}",
            raw.x_labels.len(),
            n_x
        )));
    }
    check_unique(&raw.theta_labels)?;
    check_unique(&raw.x_labels)?;

    let mut likelihoods = Vec::with_capacity(n_theta * n_x);
    for (label, row) in raw.theta_labels.iter().zip(&raw.likelihoods) {
        if row.len() != n_x {
            return Err(ModelError::DimensionMismatch(format!(
                "row `{label}` has {} entries, expected {n_x}",
                row.len()
            )));
        }
        likelihoods.extend(normalize_distribution(row, &format!("p_{label}"))?);
    }
    let true_dgp = normalize_distribution(&raw.true_dgp, "true_dgp")?;

    Ok(Model {
        theta_labels: raw.theta_labels.clone(),
        x_labels: raw.x_labels.clone(),
        likelihoods,
        true_dgp,
    })
}

fn check_unique(labels: &[String]) -> Result<(), ModelError> {
    for (i, a) in labels.iter().enumerate() {
        if labels[..i].contains(a) {
            return Err(ModelError::DuplicateLabel(a.clone()));
        }
    }
    Ok(())
}

fn normalize_distribution(row: &[f64], what: &str) -> Result<Vec<f64>, ModelError> {
    for &v in row {
        if !v.is_finite() || v < 0.0 {
            return Err(ModelError::InvalidEntry {
                what: what.to_string(),
                value: v,
            });
        }
        if v == 0.0 {
            return Err(ModelError::ZeroLikelihood(what.to_string()));
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(ModelError::NotStochastic {
            what: what.to_string(),
            sum,
        });
    }
    if (sum - 1.0).abs() > RENORMALIZE_SKIP {
        Ok(row.iter().map(|v| v / sum).collect())
    } else {
        Ok(row.to_vec())
    }
}

impl Model {
    pub fn new(raw: &RawModel) -> Result<Self, ModelError> {
        validate_model(raw)
    }

    /// Builds a model with generated labels.
    pub fn from_rows(likelihoods: Vec<Vec<f64>>, true_dgp: Vec<f64>) -> Result<Self, ModelError> {
        validate_model(&RawModel::unlabeled(likelihoods, true_dgp))
    }

    /// Number of parameters `|Θ|`.
    pub fn n_params(&self) -> usize {
        self.theta_labels.len()
    }

    /// Number of observations `|X|`.
    pub fn n_obs(&self) -> usize {
        self.x_labels.len()
    }

    /// The distribution `p_θ`.
    pub fn row(&self, theta: usize) -> &[f64] {
        let n = self.n_obs();
        &self.likelihoods[theta * n..(theta + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.likelihoods.chunks_exact(self.n_obs())
    }

    pub fn likelihood(&self, theta: usize, x: usize) -> f64 {
        self.likelihoods[theta * self.n_obs() + x]
    }

    pub fn true_dgp(&self) -> &[f64] {
        &self.true_dgp
    }

    pub fn theta_labels(&self) -> &[String] {
        &self.theta_labels
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn to_raw(&self) -> RawModel {
        RawModel {
            theta_labels: self.theta_labels.clone(),
            x_labels: self.x_labels.clone(),
            likelihoods: self.rows().map(<[f64]>::to_vec).collect(),
            true_dgp: self.true_dgp.clone(),
        }
    }

    /// Same family with a different true distribution.
    pub fn with_true_dgp(&self, true_dgp: Vec<f64>) -> Result<Self, ModelError> {
        let mut raw = self.to_raw();
        raw.true_dgp = true_dgp;
        validate_model(&raw)
    }

    pub fn check_theta(&self, theta: usize) -> Result<(), ModelError> {
        if theta < self.n_params() {
            Ok(())
        } else {
            Err(ModelError::IndexOutOfRange {
                index: theta,
                len: self.n_params(),
            })
        }
    }
}

/// A probability vector on the parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Belief(Vec<f64>);

impl Belief {
    /// Validates `weights` as a point of the simplex. Sums off by at most
    /// [`STOCHASTIC_TOL`] are renormalized.
    pub fn new(weights: Vec<f64>) -> Result<Self, ModelError> {
        if weights.is_empty() {
            return Err(ModelError::InvalidBelief("empty weight vector".into()));
        }
        if let Some(&bad) = weights.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(ModelError::InvalidBelief(format!("entry {bad} is not a probability")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(ModelError::InvalidBelief(format!("weights sum to {sum}")));
        }
        if (sum - 1.0).abs() > RENORMALIZE_SKIP {
            Ok(Self(weights.into_iter().map(|v| v / sum).collect()))
        } else {
            Ok(Self(weights))
        }
    }

    /// Belief that must match the model's parameter count.
    pub fn for_model(model: &Model, weights: Vec<f64>) -> Result<Self, ModelError> {
        if weights.len() != model.n_params() {
            return Err(ModelError::DimensionMismatch(format!(
                "belief has {} entries, model has {} parameters",
                weights.len(),
                model.n_params()
            )));
        }
        Self::new(weights)
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform belief over an empty set");
        Self(vec![1.0 / n as f64; n])
    }

    /// Renormalizes a non-negative vector with positive sum. Internal
    /// constructor for update rules whose output is a simplex point up to
    /// rounding.
    pub(crate) fn from_nonnegative(mut weights: Vec<f64>) -> Self {
        for w in weights.iter_mut() {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > RENORMALIZE_SKIP {
            for w in weights.iter_mut() {
                *w /= sum;
            }
        }
        Self(weights)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, theta: usize) -> f64 {
        self.0[theta]
    }

    /// Indices with strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|w| *w > 0.0)
    }

    /// Total-variation distance `½ Σ |q_θ − r_θ|`.
    pub fn tv_distance(&self, other: &Belief) -> f64 {
        0.5 * self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// Max-metric distance.
    pub fn max_distance(&self, other: &Belief) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl AsRef<[f64]> for Belief {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Display for Belief {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{w:.6}")?;
        }
        write!(f, ")")
    }
}

/// Point mass on `theta`.
pub fn delta_belief(theta: usize, model: &Model) -> Result<Belief, ModelError> {
    model.check_theta(theta)?;
    let mut w = vec![0.0; model.n_params()];
    w[theta] = 1.0;
    Ok(Belief(w))
}
