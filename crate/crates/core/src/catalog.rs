//! Reference models used throughout the documentation, the tests and the
//! `reproduce` command.

use crate::model::{Model, RawModel};

fn build(theta: &[&str], x: &[&str], rows: Vec<Vec<f64>>, dgp: Vec<f64>) -> Model {
    let raw = RawModel {
        theta_labels: theta.iter().map(|s| s.to_string()).collect(),
        x_labels: x.iter().map(|s| s.to_string()).collect(),
        likelihoods: rows,
        true_dgp: dgp,
    };
    Model::new(&raw).expect("catalog models are valid")
}

/// Three symmetric members around a uniform truth; the truth is the
/// uniform mixture and the zero set consists of seven isolated points.
pub fn example1() -> Model {
    build(
        &["theta1", "theta2", "theta3"],
        &["x1", "x2", "x3"],
        vec![
            vec![1.0 / 5.0, 2.0 / 5.0, 2.0 / 5.0],
            vec![2.0 / 5.0, 1.0 / 5.0, 2.0 / 5.0],
            vec![2.0 / 5.0, 2.0 / 5.0, 1.0 / 5.0],
        ],
        vec![1.0 / 3.0; 3],
    )
}

/// A fourth member equal to the midpoint of two others produces a segment
/// of rest points on the boundary.
pub fn example2() -> Model {
    build(
        &["theta1", "theta2", "theta3", "theta4"],
        &["x1", "x2", "x3"],
        vec![
            vec![1.0 / 2.0, 1.0 / 4.0, 1.0 / 4.0],
            vec![1.0 / 4.0, 1.0 / 2.0, 1.0 / 4.0],
            vec![1.0 / 4.0, 1.0 / 4.0, 1.0 / 2.0],
            vec![1.0 / 4.0, 3.0 / 8.0, 3.0 / 8.0],
        ],
        vec![3.0 / 4.0, 1.0 / 8.0, 1.0 / 8.0],
    )
}

/// Full but not tight: the truth is reproduced by a segment of mixtures.
pub fn example3() -> Model {
    build(
        &["theta1", "theta2", "theta3"],
        &["x1", "x2"],
        vec![
            vec![1.0 / 4.0, 3.0 / 4.0],
            vec![1.0 / 3.0, 2.0 / 3.0],
            vec![3.0 / 4.0, 1.0 / 4.0],
        ],
        vec![1.0 / 2.0, 1.0 / 2.0],
    )
}

/// Two states, outcomes `h` and `t`, truth `p*(h) = 2/3`. The first state
/// has `p(h) = p_h`, the second `p(h) = 1 − p_h`.
pub fn two_state(p_h: f64) -> Model {
    build(
        &["theta_star", "theta"],
        &["h", "t"],
        vec![vec![p_h, 1.0 - p_h], vec![1.0 - p_h, p_h]],
        vec![2.0 / 3.0, 1.0 / 3.0],
    )
}

/// States `A`, `B` with `p_A(a) = p_B(b) = 3/4` and truth `p*(a) = 2/3`.
pub fn prior_bias() -> Model {
    build(
        &["A", "B"],
        &["a", "b"],
        vec![vec![3.0 / 4.0, 1.0 / 4.0], vec![1.0 / 4.0, 3.0 / 4.0]],
        vec![2.0 / 3.0, 1.0 / 3.0],
    )
}

/// Binary outcomes `0`, `1` with `p*(1) = 2/3` and `p_θ(1) = p_θ'(0) = p`.
pub fn binary(p: f64) -> Model {
    build(
        &["theta", "theta_prime"],
        &["0", "1"],
        vec![vec![1.0 - p, p], vec![p, 1.0 - p]],
        vec![1.0 / 3.0, 2.0 / 3.0],
    )
}

/// The constant-weight oscillation model, `binary(3/4)`.
pub fn constant_weight() -> Model {
    binary(3.0 / 4.0)
}

/// The observation-dependent and overreaction model, `binary(9/10)`.
pub fn overreaction() -> Model {
    binary(9.0 / 10.0)
}
