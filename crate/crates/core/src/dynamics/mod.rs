//! Stochastic simulation of the updating rules, the deterministic mean-field
//! flow, and occupation measures of the constant-weight chain.

mod alpha;
mod flow;
mod occupation;
mod rng;

use rayon::prelude::*;
use thiserror::Error;

pub use alpha::{hat_h, scan_roots, Alpha};
pub use flow::{ode_flow, FlowPath};
pub use occupation::{occupation_experiment, OccupationConfig, OccupationMeasure, DEFAULT_BIN_WIDTH};
pub use rng::ObservationStream;

use crate::components::ComponentError;
use crate::geometry::{cross_entropy_v, predictive};
use crate::model::{Belief, Model};
use crate::schedule::{ScheduleError, WeightSchedule};
use crate::update::{apply_schedule, UpdateError};

/// Stored beliefs per trajectory when no stride is given.
pub const DEFAULT_STORED_POINTS: u64 = 10_000;
/// Environment variable capping the number of worker threads for replicas.
pub const THREADS_ENV: &str = "MISSPEC_LEARN_THREADS";

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("initial belief {0} is on the boundary of the simplex; pass allow_boundary to start there")]
    BoundaryStart(Belief),
    #[error("initial belief has {got} entries, model has {expected} parameters")]
    BeliefLength { got: usize, expected: usize },
    #[error("the number of steps must be at least 1")]
    ZeroSteps,
    #[error("thinning stride must be at least 1")]
    InvalidThin,
    #[error("integration step {0} must be positive and finite")]
    InvalidStep(f64),
    #[error("integration horizon {0} must be non-negative and finite")]
    InvalidHorizon(f64),
    #[error("RK4 step at t = {time} produced coordinate {value}; reduce dt")]
    StepTooLarge { time: f64, value: f64 },
    #[error("constant weight {0} must lie in (0, 1)")]
    InvalidGamma(f64),
    #[error("bin width {0} must lie in (0, 1]")]
    InvalidBinWidth(f64),
    #[error("step {step} is not stored in the trajectory (last step {last})")]
    IndexOutOfRange { step: u64, last: u64 },
    #[error("update at step {step} failed: {source}")]
    Update {
        step: u64,
        #[source]
        source: UpdateError,
    },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Components(#[from] ComponentError),
}

/// A recorded belief path with its predictive process.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Step number of each stored point; step 0 is the prior.
    pub steps: Vec<u64>,
    pub beliefs: Vec<Belief>,
    pub predictives: Vec<Vec<f64>>,
    pub v_values: Vec<f64>,
    pub seed: u64,
    pub replica: u64,
    /// Textual schedule descriptor.
    pub schedule: String,
    pub n_steps: u64,
}

impl Trajectory {
    fn with_capacity(seed: u64, replica: u64, schedule: String, n_steps: u64, cap: usize) -> Self {
        Self {
            steps: Vec::with_capacity(cap),
            beliefs: Vec::with_capacity(cap),
            predictives: Vec::with_capacity(cap),
            v_values: Vec::with_capacity(cap),
            seed,
            replica,
            schedule,
            n_steps,
        }
    }

    fn record(&mut self, model: &Model, step: u64, q: &Belief) {
        self.steps.push(step);
        self.predictives.push(predictive(model, q));
        self.v_values.push(cross_entropy_v(model, q));
        self.beliefs.push(q.clone());
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_belief(&self) -> &Belief {
        self.beliefs.last().expect("trajectories always store the prior")
    }

    pub fn final_predictive(&self) -> &[f64] {
        self.predictives.last().expect("trajectories always store the prior")
    }

    /// Stored belief after `step` updates.
    pub fn belief_at(&self, step: u64) -> Result<&Belief, DynamicsError> {
        self.steps
            .binary_search(&step)
            .map(|i| &self.beliefs[i])
            .map_err(|_| DynamicsError::IndexOutOfRange {
                step,
                last: self.n_steps,
            })
    }
}

/// Minimum over parameters of `TV(q, δ_θ)`, i.e. `1 − max_θ q_θ`.
pub fn misspec_statistic(q: &Belief) -> f64 {
    1.0 - q.as_slice().iter().copied().fold(0.0, f64::max)
}

/// The misspecification-test statistic of the belief stored at `step`.
/// Persistently large values reject a correctly specified model.
pub fn misspec_test_statistic(trajectory: &Trajectory, step: u64) -> Result<f64, DynamicsError> {
    trajectory.belief_at(step).map(misspec_statistic)
}

/// Configuration of one simulated run. `Simulation::new` fills defaults:
/// replica 0, default thinning, interior start required.
#[derive(Debug, Clone)]
pub struct Simulation<'a> {
    pub model: &'a Model,
    pub schedule: &'a WeightSchedule,
    pub q0: &'a Belief,
    pub n_steps: u64,
    pub seed: u64,
    pub replica: u64,
    /// Store every `thin`-th belief; `None` keeps about
    /// [`DEFAULT_STORED_POINTS`] points.
    pub thin: Option<u64>,
    pub allow_boundary: bool,
}

impl<'a> Simulation<'a> {
    pub fn new(model: &'a Model, schedule: &'a WeightSchedule, q0: &'a Belief, n_steps: u64, seed: u64) -> Self {
        Self {
            model,
            schedule,
            q0,
            n_steps,
            seed,
            replica: 0,
            thin: None,
            allow_boundary: false,
        }
    }

    pub fn replica(mut self, replica: u64) -> Self {
        self.replica = replica;
        self
    }

    pub fn thin(mut self, thin: u64) -> Self {
        self.thin = Some(thin);
        self
    }

    pub fn allow_boundary(mut self, allow: bool) -> Self {
        self.allow_boundary = allow;
        self
    }

    fn check(&self) -> Result<u64, DynamicsError> {
        check_start(self.model, self.q0, self.allow_boundary)?;
        if self.n_steps == 0 {
            return Err(DynamicsError::ZeroSteps);
        }
        self.schedule.check_model(self.model)?;
        match self.thin {
            Some(0) => Err(DynamicsError::InvalidThin),
            Some(t) => Ok(t),
            None => Ok(self.n_steps.div_ceil(DEFAULT_STORED_POINTS)),
        }
    }

    /// Runs the recurrence, handing every post-update belief to `visit`
    /// and storing the thinned path.
    pub(crate) fn run_with<F>(&self, mut visit: F) -> Result<Trajectory, DynamicsError>
    where
        F: FnMut(u64, &Belief),
    {
        let stride = self.check()?;
        let cap = (self.n_steps / stride + 2).min(1 << 20) as usize;
        let mut traj = Trajectory::with_capacity(self.seed, self.replica, self.schedule.to_string(), self.n_steps, cap);
        let mut stream = ObservationStream::new(self.model.true_dgp(), self.seed, self.replica);
        let mut q = self.q0.clone();
        traj.record(self.model, 0, &q);
        for step in 1..=self.n_steps {
            let x = stream.next_observation();
            q = apply_schedule(self.model, self.schedule, &q, x, step)
                .map_err(|source| DynamicsError::Update { step, source })?;
            visit(step, &q);
            if step % stride == 0 || step == self.n_steps {
                traj.record(self.model, step, &q);
            }
        }
        Ok(traj)
    }

    pub fn run(&self) -> Result<Trajectory, DynamicsError> {
        self.run_with(|_, _| {})
    }
}

pub(crate) fn check_start(model: &Model, q0: &Belief, allow_boundary: bool) -> Result<(), DynamicsError> {
    if q0.len() != model.n_params() {
        return Err(DynamicsError::BeliefLength {
            got: q0.len(),
            expected: model.n_params(),
        });
    }
    if !allow_boundary && !q0.is_interior() {
        return Err(DynamicsError::BoundaryStart(q0.clone()));
    }
    Ok(())
}

/// Simulates `n_steps` updates from the interior prior `q0` with i.i.d.
/// draws from the true distribution.
pub fn simulate(
    model: &Model,
    schedule: &WeightSchedule,
    q0: &Belief,
    n_steps: u64,
    seed: u64,
    thin: Option<u64>,
) -> Result<Trajectory, DynamicsError> {
    let mut sim = Simulation::new(model, schedule, q0, n_steps, seed);
    sim.thin = thin;
    sim.run()
}

/// [`simulate`] with the tempered-likelihood rule `q' ∝ q p_θ(x)^γ_n`.
pub fn generalized_bayes_run(
    model: &Model,
    base_schedule: &WeightSchedule,
    q0: &Belief,
    n_steps: u64,
    seed: u64,
) -> Result<Trajectory, DynamicsError> {
    let schedule = WeightSchedule::generalized_bayes(base_schedule.clone())?;
    simulate(model, &schedule, q0, n_steps, seed, None)
}

/// Thread cap from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_limit() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
}

/// Evaluates `job` for every index in parallel, respecting the thread cap.
/// Output order follows the input order.
pub fn par_map<T, F>(n: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let run = || (0..n).into_par_iter().map(&job).collect();
    match thread_limit().and_then(|k| rayon::ThreadPoolBuilder::new().num_threads(k).build().ok()) {
        Some(pool) => pool.install(run),
        None => run(),
    }
}

/// Independent replicas of one configuration, replica `r` drawing from
/// stream `r` of `seed`.
pub fn simulate_replicas(sim: &Simulation<'_>, replicas: u64) -> Vec<Result<Trajectory, DynamicsError>> {
    par_map(replicas as usize, |r| sim.clone().replica(r as u64).run())
}
