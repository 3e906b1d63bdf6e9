//! Structural properties of the likelihood family.

use nalgebra::DMatrix;

use super::{GeometryError, MAX_PARAMS};
use crate::linalg::{basic_solutions, rank};
use crate::model::Model;

/// Coordinates of a convex combination may be this negative.
const FEASIBILITY_TOL: f64 = 1e-9;

/// Whether the differences `p_θ − p_θ'` span the tangent space of the
/// observation simplex, i.e. have rank `|X| − 1`.
pub fn is_full(model: &Model) -> bool {
    let n_x = model.n_obs();
    let n_theta = model.n_params();
    let base = model.row(0);
    let diffs = DMatrix::from_fn(n_x, n_theta.saturating_sub(1), |x, j| {
        model.likelihood(j + 1, x) - base[x]
    });
    rank(&diffs) == n_x - 1
}

/// Whether no `p_θ` is a convex combination of the other members.
///
/// Each row is tested by an exact search over supports of affinely
/// independent members of the rest of the family.
pub fn is_convex_independent(model: &Model) -> Result<bool, GeometryError> {
    let n = model.n_params();
    if n > MAX_PARAMS {
        return Err(GeometryError::NotSupported {
            what: "convex independence",
            max: MAX_PARAMS,
            got: n,
        });
    }
    for theta in 0..n {
        let others: Vec<usize> = (0..n).filter(|t| *t != theta).collect();
        // a zero coordinate is allowed, so the positivity cut is -tol
        if !basic_solutions(model, &others, model.row(theta), -FEASIBILITY_TOL).is_empty() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Full and minimal: `|Θ| = |X|` and convex independence.
pub fn is_tight(model: &Model) -> Result<bool, GeometryError> {
    Ok(model.n_params() == model.n_obs() && is_full(model) && is_convex_independent(model)?)
}
