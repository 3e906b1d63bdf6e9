//! Total-variation distance from a point to the convex hull of finitely many
//! simplex points.

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::model::Belief;

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// `min_{t ∈ [0,1]} TV(q, a + t(b − a))`. The objective is convex and
/// piecewise linear in `t`, so the minimum sits at a breakpoint or an end.
fn tv_to_segment(q: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let at = |t: f64| -> f64 {
        0.5 * q
            .iter()
            .zip(a.iter().zip(b))
            .map(|(qi, (ai, bi))| (qi - ai - t * (bi - ai)).abs())
            .sum::<f64>()
    };
    let mut best = at(0.0).min(at(1.0));
    for i in 0..q.len() {
        let d = b[i] - a[i];
        if d != 0.0 {
            let t = (q[i] - a[i]) / d;
            if (0.0..=1.0).contains(&t) {
                best = best.min(at(t));
            }
        }
    }
    best
}

/// Linear program over barycentric weights `w` and slacks `s`:
/// minimize `½ Σ s` subject to `|q − V w| ≤ s`, `Σ w = 1`, `w ≥ 0`.
fn tv_by_lp(q: &[f64], vertices: &[Belief]) -> f64 {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let w: Vec<_> = vertices.iter().map(|_| problem.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let s: Vec<_> = q.iter().map(|_| problem.add_var(0.5, (0.0, f64::INFINITY))).collect();
    for (i, qi) in q.iter().enumerate() {
        let mut upper: Vec<_> = w.iter().zip(vertices).map(|(v, p)| (*v, p.get(i))).collect();
        upper.push((s[i], 1.0));
        problem.add_constraint(upper.as_slice(), ComparisonOp::Ge, *qi);
        let mut lower: Vec<_> = w.iter().zip(vertices).map(|(v, p)| (*v, -p.get(i))).collect();
        lower.push((s[i], 1.0));
        problem.add_constraint(lower.as_slice(), ComparisonOp::Ge, -qi);
    }
    let ones: Vec<_> = w.iter().map(|v| (*v, 1.0)).collect();
    problem.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
    match problem.solve() {
        Ok(solution) => solution.objective().max(0.0),
        // the problem is always feasible and bounded; fall back to the
        // nearest vertex if the solver reports otherwise
        Err(_) => vertices.iter().map(|v| tv(q, v.as_slice())).fold(f64::INFINITY, f64::min),
    }
}

/// Total-variation distance from `q` to `co(vertices)`.
///
/// # Panics
///
/// If `vertices` is empty.
pub fn tv_distance_to_hull(q: &[f64], vertices: &[Belief]) -> f64 {
    match vertices {
        [] => panic!("hull of an empty vertex set"),
        [v] => tv(q, v.as_slice()),
        [a, b] => tv_to_segment(q, a.as_slice(), b.as_slice()),
        _ => tv_by_lp(q, vertices),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: &[f64]) -> Belief {
        Belief::new(v.to_vec()).unwrap()
    }

    #[test]
    fn point_and_segment() {
        let q = [0.5, 0.5, 0.0];
        assert!((tv_distance_to_hull(&q, &[b(&[1.0, 0.0, 0.0])]) - 0.5).abs() < 1e-15);
        let seg = [b(&[1.0, 0.0, 0.0]), b(&[0.0, 1.0, 0.0])];
        assert!(tv_distance_to_hull(&q, &seg) < 1e-15);
        let q = [0.4, 0.4, 0.2];
        assert!((tv_distance_to_hull(&q, &seg) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn lp_agrees_with_segment_formula() {
        let seg = [b(&[0.0, 0.5, 0.5, 0.0]), b(&[0.0, 0.0, 0.0, 1.0])];
        let tri = [seg[0].clone(), seg[1].clone(), b(&[0.0, 0.25, 0.25, 0.5])];
        for q in [[0.1, 0.2, 0.3, 0.4], [0.25, 0.25, 0.25, 0.25], [0.0, 0.5, 0.1, 0.4]] {
            let exact = tv_distance_to_hull(&q, &seg);
            assert!((tv_by_lp(&q, &tri) - exact).abs() < 1e-9, "{q:?}");
        }
    }

    #[test]
    fn inside_the_hull() {
        let tri = [b(&[1.0, 0.0, 0.0]), b(&[0.0, 1.0, 0.0]), b(&[0.0, 0.0, 1.0])];
        assert!(tv_distance_to_hull(&[0.2, 0.3, 0.5], &tri) < 1e-12);
    }
}
