//! Small dense linear-algebra helpers over subsets of the likelihood family.

use nalgebra::{DMatrix, DVector};

use crate::model::Model;

/// Singular values at or below this are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Residual bound for an exact linear solve.
pub const SOLVE_TOL: f64 = 1e-9;

/// Indices of the set bits of `mask`, ascending.
pub fn mask_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

pub fn indices_mask(indices: &[usize]) -> u32 {
    indices.iter().fold(0, |m, &i| m | (1 << i))
}

/// All non-empty subsets of `pool` with at most `max_size` elements, as
/// bitmasks, ordered by size and then lexicographically.
pub fn subsets(pool: &[usize], max_size: usize) -> Vec<u32> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for size in 1..=max_size.min(pool.len()) {
        combinations(pool, size, 0, &mut current, &mut out);
    }
    out
}

fn combinations(pool: &[usize], size: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<u32>) {
    if current.len() == size {
        out.push(indices_mask(current));
        return;
    }
    for i in start..pool.len() {
        if pool.len() - i < size - current.len() {
            break;
        }
        current.push(pool[i]);
        combinations(pool, size, i + 1, current, out);
        current.pop();
    }
}

/// `|X| × |S|` matrix whose columns are the distributions `p_θ`, `θ ∈ S`.
pub fn likelihood_columns(model: &Model, subset: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(model.n_obs(), subset.len(), |x, j| model.likelihood(subset[j], x))
}

pub fn rank(m: &DMatrix<f64>) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    m.singular_values().iter().filter(|s| **s > RANK_TOL).count()
}

/// Solves `A λ = b` for a full-column-rank `A`, returning `None` when `A`
/// is rank deficient or the system is inconsistent.
pub fn solve_exact(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    if rank(a) < a.ncols() {
        return None;
    }
    let rhs = DVector::from_column_slice(b);
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&rhs, RANK_TOL).ok()?;
    let residual = (a * &x - &rhs).amax();
    (residual < SOLVE_TOL).then(|| x.iter().copied().collect())
}

/// Vertices of `{λ ≥ 0 : Σ_{θ ∈ pool} λ_θ p_θ = target}`, embedded in
/// `R^|Θ|`. Each vertex is found from its own support, on which the
/// columns are linearly independent. Coordinates within `tol` of zero are
/// treated as zero.
pub fn basic_solutions(model: &Model, pool: &[usize], target: &[f64], tol: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for mask in subsets(pool, model.n_obs()) {
        let support = mask_indices(mask);
        let a = likelihood_columns(model, &support);
        let Some(lambda) = solve_exact(&a, target) else {
            continue;
        };
        if lambda.iter().all(|l| *l > tol) {
            let mut full = vec![0.0; model.n_params()];
            for (&i, &l) in support.iter().zip(&lambda) {
                full[i] = l;
            }
            out.push(full);
        }
    }
    out
}

/// Dimension of the affine hull of `points`, and an orthonormal basis of
/// its direction space.
pub fn affine_span(points: &[Vec<f64>]) -> (i32, Vec<Vec<f64>>) {
    let Some(origin) = points.first() else {
        return (-1, Vec::new());
    };
    if points.len() == 1 {
        return (0, Vec::new());
    }
    let dim = origin.len();
    let diffs = DMatrix::from_fn(dim, points.len() - 1, |i, j| points[j + 1][i] - origin[i]);
    let svd = diffs.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut basis = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > RANK_TOL {
            basis.push(u.column(k).iter().copied().collect());
        }
    }
    (basis.len() as i32, basis)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Removes points within `tol` (max-metric) of an earlier point.
pub fn dedup_points(points: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if !out.iter().any(|q| max_abs_diff(q, &p) < tol) {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_order() {
        let s = subsets(&[0, 1, 2], 3);
        let as_idx: Vec<_> = s.iter().map(|m| mask_indices(*m)).collect();
        assert_eq!(
            as_idx,
            vec![vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 1, 2]]
        );
        assert_eq!(subsets(&[0, 1, 2, 3], 2).len(), 10);
    }

    #[test]
    fn exact_solves() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        assert_eq!(solve_exact(&a, &[1.0, 1.0]).unwrap(), vec![1.0, 0.5]);
        let tall = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0]);
        assert!(solve_exact(&tall, &[1.0, 2.0, 1.0]).is_none());
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(solve_exact(&singular, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn affine_dimension() {
        let pts = vec![vec![0.0, 0.6, 0.4], vec![0.5, 0.0, 0.5], vec![0.25, 0.3, 0.45]];
        assert_eq!(affine_span(&pts).0, 1);
        assert_eq!(affine_span(&pts[..1]).0, 0);
        assert_eq!(affine_span(&[]).0, -1);
    }
}
