//! Zero set of the mean field and its convex components.
//!
//! A belief `q` is a zero of `H` exactly when `f_θ(q) = 1` on its support.
//! Since `f` depends on `q` only through the predictive `L(q)`, the zeros
//! sharing a predictive `p̂` form the polytope
//! `{q ∈ S : L(q) = p̂, f_θ(p̂) = 1 on supp q}`, and these polytopes are the
//! components. `V` is constant on each of them and is maximal on exactly
//! one, the global component.
//!
//! Every vertex of a component is supported on linearly independent
//! members of the family, where it is the unique stationary point of `V`
//! on the affine hull of its support. Components are therefore found by
//! solving that strictly concave problem with Newton's method on each
//! independent support, keeping the strictly positive solutions, and
//! grouping them by predictive distribution.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{cross_entropy_of, f_at_predictive, predictive, MAX_PARAMS};
use crate::linalg::{indices_mask, likelihood_columns, mask_indices, max_abs_diff, rank, subsets};
use crate::model::{Belief, Model};

/// Bound on `max_θ |q_θ (f_θ(q) − 1)|` for a reported zero.
pub const KKT_TOL: f64 = 1e-9;
/// Predictive distributions closer than this belong to the same component.
pub const CLUSTER_TOL: f64 = 1e-7;
/// Coordinates at or below this are treated as off the support.
pub const INTERIOR_TOL: f64 = 1e-9;
/// Minimum separation of the global value from every other component.
pub const VALUE_GAP_TOL: f64 = 1e-9;

const NEWTON_MAX_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComponentError {
    #[error("stationary-point solve on support {support:?} did not converge after {iterations} iterations")]
    NoConvergence { support: Vec<usize>, iterations: usize },
    #[error("components {first} and {second} have cross-entropy values within {gap:e}; the maximum is ambiguous")]
    AmbiguousMaximum { first: usize, second: usize, gap: f64 },
    #[error("component analysis supports at most {max} parameters, model has {got}")]
    TooLarge { got: usize, max: usize },
    #[error("invalid face: {0}")]
    InvalidFace(String),
}

/// A maximizer of `V` over the open face with the given support.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceMaximizer {
    pub support: Vec<usize>,
    pub point: Belief,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// One relative-interior maximizer for every face the component meets.
    pub face_maximizers: Vec<FaceMaximizer>,
    /// Union of the member supports; the support of the component's
    /// maximal-support element.
    pub support: Vec<usize>,
    pub predictive_dist: Vec<f64>,
    pub v_value: f64,
    pub is_global: bool,
    /// Extreme points of the component.
    pub hull_vertices: Vec<Belief>,
}

impl Component {
    pub fn is_singleton(&self) -> bool {
        self.hull_vertices.len() == 1
    }

    /// Element of maximal support: the centroid of the hull vertices.
    pub fn centroid(&self) -> Belief {
        let n = self.hull_vertices[0].len();
        let mut c = vec![0.0; n];
        for v in &self.hull_vertices {
            for (ci, vi) in c.iter_mut().zip(v.as_slice()) {
                *ci += vi / self.hull_vertices.len() as f64;
            }
        }
        Belief::from_nonnegative(c)
    }

    /// Total-variation distance from `q` to the component.
    pub fn tv_distance(&self, q: &Belief) -> f64 {
        crate::hull::tv_distance_to_hull(q.as_slice(), &self.hull_vertices)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentAnalysis {
    pub components: Vec<Component>,
    /// Index of the global component.
    pub global: usize,
}

impl ComponentAnalysis {
    pub fn global_component(&self) -> &Component {
        &self.components[self.global]
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// A zero of `H` supported on linearly independent members.
#[derive(Debug, Clone)]
struct KktVertex {
    mask: u32,
    point: Vec<f64>,
    pred: Vec<f64>,
}

/// Maximizes `Σ_x p*(x) log (A q)(x) − Σ q` over `{q : A q > 0}`, where the
/// columns of `A` are the members in `support`. The maximizer satisfies
/// `f_θ = 1` on the support and sums to one. Returns `None` when the
/// columns are linearly dependent.
fn support_stationary_point(model: &Model, support: &[usize]) -> Result<Option<Vec<f64>>, ComponentError> {
    let a = likelihood_columns(model, support);
    if rank(&a) < support.len() {
        return Ok(None);
    }
    let p_star = model.true_dgp();
    let k = support.len();
    let objective = |y: &DVector<f64>, q: &DVector<f64>| -> f64 {
        if y.iter().any(|v| *v <= 0.0) {
            return f64::NEG_INFINITY;
        }
        p_star.iter().zip(y.iter()).map(|(p, v)| p * v.ln()).sum::<f64>() - q.sum()
    };
    let mut q = DVector::from_element(k, 1.0 / k as f64);
    let mut y = &a * &q;
    let mut value = objective(&y, &q);
    let no_convergence = || ComponentError::NoConvergence {
        support: support.to_vec(),
        iterations: NEWTON_MAX_ITERS,
    };
    for _ in 0..NEWTON_MAX_ITERS {
        let ratio = DVector::from_iterator(y.len(), p_star.iter().zip(y.iter()).map(|(p, v)| p / v));
        let grad = a.tr_mul(&ratio).add_scalar(-1.0);
        if grad.amax() < 1e-15 {
            return Ok(Some(q.iter().copied().collect()));
        }
        let weights = DVector::from_iterator(y.len(), p_star.iter().zip(y.iter()).map(|(p, v)| p / (v * v)));
        let weighted = DMatrix::from_fn(a.nrows(), k, |x, j| a[(x, j)] * weights[x]);
        let curvature = a.tr_mul(&weighted);
        let Some(chol) = curvature.cholesky() else {
            return Ok(None);
        };
        let step = chol.solve(&grad);
        let decrement = grad.dot(&step);
        if decrement < 1e-30 {
            return Ok(Some(q.iter().copied().collect()));
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &q + &step * t;
            let cand_y = &a * &cand;
            let cand_value = objective(&cand_y, &cand);
            // pure Newton steps once inside the quadratic region
            let sufficient = if decrement < 1e-12 {
                cand_value.is_finite()
            } else {
                cand_value >= value + 0.25 * t * decrement
            };
            if sufficient {
                q = cand;
                y = cand_y;
                value = cand_value;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        // quadratic convergence: the step just taken has reached rounding level
        if accepted && decrement < 1e-20 {
            return Ok(Some(q.iter().copied().collect()));
        }
        if !accepted {
            if grad.amax() < 1e-12 {
                return Ok(Some(q.iter().copied().collect()));
            }
            return Err(no_convergence());
        }
    }
    Err(no_convergence())
}

fn kkt_vertices(model: &Model, pool: &[usize]) -> Result<Vec<KktVertex>, ComponentError> {
    let candidates = subsets(pool, model.n_obs());
    let solved: Vec<Result<Option<KktVertex>, ComponentError>> = candidates
        .par_iter()
        .map(|&mask| {
            let support = mask_indices(mask);
            let Some(local) = support_stationary_point(model, &support)? else {
                return Ok(None);
            };
            if local.iter().any(|w| *w <= INTERIOR_TOL) {
                return Ok(None);
            }
            let mut point = vec![0.0; model.n_params()];
            for (&i, &w) in support.iter().zip(&local) {
                point[i] = w;
            }
            let norm: f64 = point.iter().sum();
            for w in point.iter_mut() {
                *w /= norm;
            }
            let pred = predictive(model, &point);
            let f = f_at_predictive(model, &pred);
            let residual = support.iter().map(|&i| (point[i] * (f[i] - 1.0)).abs()).fold(0.0, f64::max);
            if residual >= KKT_TOL {
                return Err(ComponentError::NoConvergence {
                    support,
                    iterations: NEWTON_MAX_ITERS,
                });
            }
            Ok(Some(KktVertex { mask, point, pred }))
        })
        .collect();
    let mut out = Vec::new();
    for r in solved {
        if let Some(v) = r? {
            out.push(v);
        }
    }
    Ok(out)
}

fn check_size(model: &Model) -> Result<(), ComponentError> {
    if model.n_params() > MAX_PARAMS {
        return Err(ComponentError::TooLarge {
            got: model.n_params(),
            max: MAX_PARAMS,
        });
    }
    Ok(())
}

fn centroid(points: &[&Vec<f64>]) -> Vec<f64> {
    let mut c = vec![0.0; points[0].len()];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p.iter()) {
            *ci += pi / points.len() as f64;
        }
    }
    c
}

/// Maximizer of `V` over the open face of beliefs supported exactly on
/// `support`, or `None` when the supremum over that face is only reached on
/// its boundary.
///
/// When the maximizers form a continuum the returned point is the centroid
/// of the extreme maximizers.
pub fn maximize_v_on_face(model: &Model, support: &[usize]) -> Result<Option<Belief>, ComponentError> {
    check_size(model)?;
    if support.is_empty() {
        return Err(ComponentError::InvalidFace("empty support".into()));
    }
    let mut face = support.to_vec();
    face.sort_unstable();
    face.dedup();
    if let Some(&bad) = face.iter().find(|t| **t >= model.n_params()) {
        return Err(ComponentError::InvalidFace(format!("parameter {bad} out of range")));
    }
    let vertices = kkt_vertices(model, &face)?;
    // the maximum over the closed face is attained at one of its vertices
    let best = vertices
        .iter()
        .max_by(|a, b| {
            cross_entropy_of(model.true_dgp(), &a.pred).total_cmp(&cross_entropy_of(model.true_dgp(), &b.pred))
        })
        .expect("singleton supports always yield a vertex");
    let maximizers: Vec<&KktVertex> = vertices
        .iter()
        .filter(|v| max_abs_diff(&v.pred, &best.pred) < CLUSTER_TOL)
        .collect();
    let union = maximizers.iter().fold(0u32, |m, v| m | v.mask);
    if union != indices_mask(&face) {
        return Ok(None);
    }
    let points: Vec<&Vec<f64>> = maximizers.iter().map(|v| &v.point).collect();
    Ok(Some(Belief::from_nonnegative(centroid(&points))))
}

/// All supports reachable as unions of vertex supports, in canonical order.
fn attainable_faces(masks: &[u32]) -> Vec<u32> {
    let mut faces: Vec<u32> = Vec::new();
    for &m in masks {
        if !faces.contains(&m) {
            faces.push(m);
        }
    }
    let mut i = 0;
    while i < faces.len() {
        for &m in masks {
            let u = faces[i] | m;
            if !faces.contains(&u) {
                faces.push(u);
            }
        }
        i += 1;
    }
    faces.sort_by_key(|m| (m.count_ones(), mask_indices(*m)));
    faces
}

/// Decomposes the zero set of `H` into its convex components and flags the
/// one maximizing `V`.
pub fn enumerate_components(model: &Model) -> Result<ComponentAnalysis, ComponentError> {
    check_size(model)?;
    let pool: Vec<usize> = (0..model.n_params()).collect();
    let vertices = kkt_vertices(model, &pool)?;

    let mut clusters: Vec<Vec<KktVertex>> = Vec::new();
    for v in vertices {
        match clusters
            .iter_mut()
            .find(|c| max_abs_diff(&c[0].pred, &v.pred) < CLUSTER_TOL)
        {
            Some(c) => {
                if !c.iter().any(|w| max_abs_diff(&w.point, &v.point) < CLUSTER_TOL) {
                    c.push(v);
                }
            }
            None => clusters.push(vec![v]),
        }
    }

    let mut components: Vec<Component> = clusters
        .into_iter()
        .map(|members| {
            let pred = members[0].pred.clone();
            let masks: Vec<u32> = members.iter().map(|v| v.mask).collect();
            let face_maximizers = attainable_faces(&masks)
                .into_iter()
                .map(|face| {
                    let inside: Vec<&Vec<f64>> = members
                        .iter()
                        .filter(|v| v.mask & !face == 0)
                        .map(|v| &v.point)
                        .collect();
                    FaceMaximizer {
                        support: mask_indices(face),
                        point: Belief::from_nonnegative(centroid(&inside)),
                    }
                })
                .collect();
            Component {
                face_maximizers,
                support: mask_indices(masks.iter().fold(0, |a, b| a | b)),
                v_value: cross_entropy_of(model.true_dgp(), &pred),
                predictive_dist: pred,
                is_global: false,
                hull_vertices: members.into_iter().map(|v| Belief::from_nonnegative(v.point)).collect(),
            }
        })
        .collect();

    let mut order: Vec<usize> = (0..components.len()).collect();
    order.sort_by(|a, b| components[*b].v_value.total_cmp(&components[*a].v_value));
    let global = order[0];
    if let Some(&second) = order.get(1) {
        let gap = components[global].v_value - components[second].v_value;
        if gap <= VALUE_GAP_TOL {
            return Err(ComponentError::AmbiguousMaximum {
                first: global,
                second,
                gap,
            });
        }
    }
    components[global].is_global = true;
    Ok(ComponentAnalysis { components, global })
}

/// Log-optimal mixture problem `max_{q ∈ S} Σ_x p*(x) log Σ_θ q_θ p_θ(x)`:
/// returns the optimal predictive distribution and value.
pub fn solve_problem_m(model: &Model) -> Result<(Vec<f64>, f64), ComponentError> {
    let analysis = enumerate_components(model)?;
    let g = analysis.global_component();
    Ok((g.predictive_dist.clone(), g.v_value))
}

/// Parameters maximizing `Σ_x p*(x) log p_θ(x)`: the limit of Bayesian
/// updating. Ties (within 1e-12) are all returned.
pub fn berk_point(model: &Model) -> Vec<usize> {
    let values: Vec<f64> = model.rows().map(|row| cross_entropy_of(model.true_dgp(), row)).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..values.len()).filter(|&t| best - values[t] <= 1e-12).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cross_entropy_v, mean_field};

    fn example1() -> Model {
        Model::from_rows(
            vec![
                vec![0.2, 0.4, 0.4],
                vec![0.4, 0.2, 0.4],
                vec![0.4, 0.4, 0.2],
            ],
            vec![1.0 / 3.0; 3],
        )
        .unwrap()
    }

    fn example2() -> Model {
        Model::from_rows(
            vec![
                vec![0.5, 0.25, 0.25],
                vec![0.25, 0.5, 0.25],
                vec![0.25, 0.25, 0.5],
                vec![0.25, 0.375, 0.375],
            ],
            vec![0.75, 0.125, 0.125],
        )
        .unwrap()
    }

    fn two_state(p_h: f64) -> Model {
        Model::from_rows(vec![vec![p_h, 1.0 - p_h], vec![1.0 - p_h, p_h]], vec![2.0 / 3.0, 1.0 / 3.0]).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        max_abs_diff(a, b) < tol
    }

    #[test]
    fn example1_faces() {
        let m = example1();
        let edge = maximize_v_on_face(&m, &[0, 1]).unwrap().unwrap();
        assert!(close(edge.as_slice(), &[0.5, 0.5, 0.0], 1e-12));
        let full = maximize_v_on_face(&m, &[0, 1, 2]).unwrap().unwrap();
        assert!(close(full.as_slice(), &[1.0 / 3.0; 3], 1e-12));
        for t in 0..3 {
            let v = maximize_v_on_face(&m, &[t]).unwrap().unwrap();
            assert_eq!(v.get(t), 1.0);
        }
        assert!(maximize_v_on_face(&m, &[]).is_err());
        assert!(maximize_v_on_face(&m, &[3]).is_err());
    }

    #[test]
    fn boundary_maximizer_is_not_attained() {
        // the edge {θ2, θ4} of the continuum example peaks at its endpoint δ_θ4
        let m = example2();
        assert_eq!(maximize_v_on_face(&m, &[1, 3]).unwrap(), None);
        assert_eq!(maximize_v_on_face(&m, &[0, 1]).unwrap(), None);
        let interior = maximize_v_on_face(&m, &[1, 2, 3]).unwrap().unwrap();
        assert!(interior.as_slice().iter().skip(1).all(|w| *w > 0.0));
        assert!(mean_field(&m, &interior).iter().all(|h| h.abs() < KKT_TOL));
    }

    #[test]
    fn example1_components() {
        let m = example1();
        let analysis = enumerate_components(&m).unwrap();
        assert_eq!(analysis.len(), 7);
        assert!(analysis.components.iter().all(Component::is_singleton));
        let g = analysis.global_component();
        assert!(close(g.hull_vertices[0].as_slice(), &[1.0 / 3.0; 3], 1e-12));
        assert!((g.v_value - (1.0f64 / 3.0).ln()).abs() < 1e-12);
        assert_eq!(analysis.components.iter().filter(|c| c.is_global).count(), 1);
    }

    #[test]
    fn example2_components() {
        let m = example2();
        let analysis = enumerate_components(&m).unwrap();
        assert_eq!(analysis.len(), 4);
        let g = analysis.global_component();
        assert!(close(g.hull_vertices[0].as_slice(), &[1.0, 0.0, 0.0, 0.0], 1e-12));
        let segment = analysis.components.iter().find(|c| !c.is_singleton()).unwrap();
        assert_eq!(segment.hull_vertices.len(), 2);
        assert!(segment.hull_vertices.iter().any(|v| close(v.as_slice(), &[0.0, 0.5, 0.5, 0.0], 1e-10)));
        assert!(segment.hull_vertices.iter().any(|v| close(v.as_slice(), &[0.0, 0.0, 0.0, 1.0], 1e-10)));
        assert_eq!(segment.support, vec![1, 2, 3]);
        // faces {4}, {2,3} and {2,3,4}
        assert_eq!(segment.face_maximizers.len(), 3);
        for fm in &segment.face_maximizers {
            assert_eq!(fm.point.support(), fm.support);
            assert!((cross_entropy_v(&m, &fm.point) - segment.v_value).abs() < 1e-9);
        }
    }

    #[test]
    fn example3_global_component_is_the_mixture_set() {
        let m = Model::from_rows(
            vec![vec![0.25, 0.75], vec![1.0 / 3.0, 2.0 / 3.0], vec![0.75, 0.25]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let analysis = enumerate_components(&m).unwrap();
        assert_eq!(analysis.len(), 4);
        let g = analysis.global_component();
        assert!(close(&g.predictive_dist, &[0.5, 0.5], 1e-12));
        let (pred, value) = solve_problem_m(&m).unwrap();
        assert!(close(&pred, m.true_dgp(), 1e-9));
        assert!((value - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn two_state_limits() {
        let analysis = enumerate_components(&two_state(0.1)).unwrap();
        let g = analysis.global_component();
        assert!((g.hull_vertices[0].get(0) - 7.0 / 24.0).abs() < 1e-12);
        let analysis = enumerate_components(&two_state(0.9)).unwrap();
        assert!((analysis.global_component().hull_vertices[0].get(0) - 17.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn binary_model_optimum() {
        let m = Model::from_rows(vec![vec![0.25, 0.75], vec![0.75, 0.25]], vec![1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let analysis = enumerate_components(&m).unwrap();
        let g = analysis.global_component();
        assert!(close(g.hull_vertices[0].as_slice(), &[5.0 / 6.0, 1.0 / 6.0], 1e-12));
        assert!(close(&g.predictive_dist, &[1.0 / 3.0, 2.0 / 3.0], 1e-12));
    }

    #[test]
    fn single_parameter() {
        let m = Model::from_rows(vec![vec![0.3, 0.7]], vec![0.5, 0.5]).unwrap();
        let (pred, value) = solve_problem_m(&m).unwrap();
        assert_eq!(pred, vec![0.3, 0.7]);
        assert!((value - (0.5 * 0.3f64.ln() + 0.5 * 0.7f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn near_ties_are_ambiguous() {
        // V at the two vertices sits only 2e-10 below the interior optimum
        let eps = 1e-5;
        let m = Model::from_rows(vec![vec![0.5 - eps, 0.5 + eps], vec![0.5 + eps, 0.5 - eps]], vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            enumerate_components(&m),
            Err(ComponentError::AmbiguousMaximum { .. })
        ));
        // duplicated members collapse into one component covering the simplex
        let m = Model::from_rows(vec![vec![0.2, 0.8], vec![0.2, 0.8]], vec![0.5, 0.5]).unwrap();
        let analysis = enumerate_components(&m).unwrap();
        assert_eq!(analysis.len(), 1);
        assert_eq!(analysis.components[0].hull_vertices.len(), 2);
    }

    #[test]
    fn berk_points() {
        assert_eq!(berk_point(&two_state(0.1)), vec![1]);
        assert_eq!(berk_point(&two_state(0.9)), vec![0]);
        let correct = Model::from_rows(vec![vec![0.3, 0.7], vec![0.6, 0.4]], vec![0.6, 0.4]).unwrap();
        assert_eq!(berk_point(&correct), vec![1]);
    }
}
