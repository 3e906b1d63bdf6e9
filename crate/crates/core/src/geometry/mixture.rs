//! The mixture set `Λ = {λ ∈ S : Σ_θ λ_θ p_θ = p*}`.

use super::{predictive, GeometryError, MAX_PARAMS};
use crate::linalg::{affine_span, basic_solutions, dedup_points, max_abs_diff};
use crate::model::{Belief, Model};

/// Vertices closer than this (max-metric) are merged.
const VERTEX_MERGE_TOL: f64 = 1e-9;

/// Affine parametrization `origin + Σ_k t_k directions[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineBasis {
    pub origin: Vec<f64>,
    /// Orthonormal directions.
    pub directions: Vec<Vec<f64>>,
}

impl AffineBasis {
    pub fn point(&self, coords: &[f64]) -> Vec<f64> {
        let mut p = self.origin.clone();
        for (t, d) in coords.iter().zip(&self.directions) {
            for (pi, di) in p.iter_mut().zip(d) {
                *pi += t * di;
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSet {
    /// Affine dimension, `-1` when empty.
    pub dimension: i32,
    /// Present whenever the set is non-empty. The origin is the centroid of
    /// the vertices, a relative-interior point.
    pub basis: Option<AffineBasis>,
    /// Extreme points; filled only when `dimension <= 2`.
    pub vertices: Vec<Belief>,
}

impl MixtureSet {
    pub fn is_empty(&self) -> bool {
        self.dimension < 0
    }

    pub fn is_singleton(&self) -> bool {
        self.dimension == 0
    }
}

/// Solves for all mixtures of the family that reproduce the true
/// distribution.
///
/// The set is a polytope whose vertices are the non-negative solutions
/// supported on linearly independent members; these are enumerated exactly
/// and the dimension is that of their affine hull.
pub fn lambda_set(model: &Model) -> Result<MixtureSet, GeometryError> {
    let n = model.n_params();
    if n > MAX_PARAMS {
        return Err(GeometryError::NotSupported {
            what: "mixture set",
            max: MAX_PARAMS,
            got: n,
        });
    }
    let pool: Vec<usize> = (0..n).collect();
    let raw = basic_solutions(model, &pool, model.true_dgp(), VERTEX_MERGE_TOL);
    let vertices: Vec<Vec<f64>> = dedup_points(raw, VERTEX_MERGE_TOL)
        .into_iter()
        .filter(|v| max_abs_diff(&predictive(model, v), model.true_dgp()) < 1e-9)
        .collect();
    if vertices.is_empty() {
        return Ok(MixtureSet {
            dimension: -1,
            basis: None,
            vertices: Vec::new(),
        });
    }
    let (dimension, directions) = affine_span(&vertices);
    let mut origin = vec![0.0; n];
    for v in &vertices {
        for (o, x) in origin.iter_mut().zip(v) {
            *o += x / vertices.len() as f64;
        }
    }
    let vertices = if dimension <= 2 {
        vertices.into_iter().map(Belief::from_nonnegative).collect()
    } else {
        Vec::new()
    };
    Ok(MixtureSet {
        dimension,
        basis: Some(AffineBasis { origin, directions }),
        vertices,
    })
}
