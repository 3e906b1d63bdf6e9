use super::DynamicsError;
use crate::geometry::{cross_entropy_v, predictive};
use crate::model::{Belief, Model};

/// Coordinates below this after an RK4 step mean the step overshot the
/// simplex boundary.
const NEGATIVE_TOL: f64 = -1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowPath {
    pub times: Vec<f64>,
    pub beliefs: Vec<Belief>,
}

impl FlowPath {
    pub fn terminal(&self) -> &Belief {
        self.beliefs.last().expect("flow paths always contain the start")
    }

    pub fn v_values(&self, model: &Model) -> Vec<f64> {
        self.beliefs.iter().map(|q| cross_entropy_v(model, q)).collect()
    }
}

/// `H(q)` evaluated at a possibly slightly infeasible RK4 stage point.
fn field(model: &Model, q: &[f64], out: &mut [f64], time: f64) -> Result<(), DynamicsError> {
    let pred = predictive(model, q);
    if let Some(bad) = pred.iter().find(|p| **p <= 0.0) {
        return Err(DynamicsError::StepTooLarge { time, value: *bad });
    }
    for (t, o) in out.iter_mut().enumerate() {
        let f: f64 = model
            .true_dgp()
            .iter()
            .zip(model.row(t))
            .zip(&pred)
            .map(|((p, l), r)| p * l / r)
            .sum();
        *o = q[t] * (f - 1.0);
    }
    Ok(())
}

/// Integrates `q̇ = H(q)` from `q0` to `t_end` with classical RK4 and
/// renormalization after every step. The last step is shortened to land
/// exactly on `t_end`.
pub fn ode_flow(model: &Model, q0: &Belief, t_end: f64, dt: f64) -> Result<FlowPath, DynamicsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::InvalidStep(dt));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(DynamicsError::InvalidHorizon(t_end));
    }
    super::check_start(model, q0, true)?;
    let n = q0.len();
    // tolerate t_end/dt landing a rounding error above an integer
    let full_steps = ((t_end / dt) * (1.0 - 1e-12)).floor() as usize;
    let mut steps: Vec<f64> = vec![dt; full_steps];
    let rest = t_end - full_steps as f64 * dt;
    if rest > 1e-12 * dt.max(1.0) {
        steps.push(rest);
    }

    let mut times = Vec::with_capacity(steps.len() + 1);
    let mut beliefs = Vec::with_capacity(steps.len() + 1);
    let mut q = q0.as_slice().to_vec();
    let mut t = 0.0;
    times.push(t);
    beliefs.push(q0.clone());

    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut stage = vec![0.0; n];
    for (i, h) in steps.iter().enumerate() {
        field(model, &q, &mut k1, t)?;
        for j in 0..n {
            stage[j] = q[j] + 0.5 * h * k1[j];
        }
        field(model, &stage, &mut k2, t)?;
        for j in 0..n {
            stage[j] = q[j] + 0.5 * h * k2[j];
        }
        field(model, &stage, &mut k3, t)?;
        for j in 0..n {
            stage[j] = q[j] + h * k3[j];
        }
        field(model, &stage, &mut k4, t)?;
        for j in 0..n {
            q[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if let Some(bad) = q.iter().copied().find(|v| *v < NEGATIVE_TOL) {
            return Err(DynamicsError::StepTooLarge { time: t, value: bad });
        }
        let belief = Belief::from_nonnegative(std::mem::take(&mut q));
        q = belief.as_slice().to_vec();
        t = if i < full_steps { (i + 1) as f64 * dt } else { t_end };
        times.push(t);
        beliefs.push(belief);
    }
    if let Some(last) = times.last_mut() {
        *last = t_end;
    }
    Ok(FlowPath { times, beliefs })
}
