//! Named scenarios that re-run the worked examples and report each
//! assertion as a machine-readable line:
//!
//! ```text
//! PASS example1 components measured=7 expected=7 tol=0
//! ```

use std::fmt;

use misspec_learn::catalog;
use misspec_learn::components::{berk_point, enumerate_components};
use misspec_learn::dynamics::{hat_h, ode_flow, par_map, scan_roots, Alpha, Simulation, Trajectory};
use misspec_learn::geometry::{as_if_dgp, lambda_set};
use misspec_learn::io::model_hash;
use misspec_learn::linalg::max_abs_diff;
use misspec_learn::model::{Belief, Model};
use misspec_learn::schedule::WeightSchedule;
use misspec_learn::update::bayes_posterior;

use crate::error::CliError;

const SEED: u64 = 2024;
const REPLICAS: usize = 32;
const LONG_RUN: u64 = 1_000_000;

pub struct Check {
    pub scenario: &'static str,
    pub name: &'static str,
    pub measured: f64,
    pub expected: f64,
    pub tol: f64,
    pub pass: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} measured={} expected={} tol={}",
            if self.pass { "PASS" } else { "FAIL" },
            self.scenario,
            self.name,
            self.measured,
            self.expected,
            self.tol
        )
    }
}

/// Collects the checks of one scenario.
struct Report {
    scenario: &'static str,
    checks: Vec<Check>,
}

impl Report {
    fn new(scenario: &'static str) -> Self {
        Self { scenario, checks: Vec::new() }
    }

    /// `|measured − expected| <= tol`.
    fn near(&mut self, name: &'static str, measured: f64, expected: f64, tol: f64) {
        let pass = (measured - expected).abs() <= tol;
        self.push(name, measured, expected, tol, pass);
    }

    /// `measured > bound`; `tol` is reported as 0.
    fn above(&mut self, name: &'static str, measured: f64, bound: f64) {
        self.push(name, measured, bound, 0.0, measured > bound);
    }

    fn push(&mut self, name: &'static str, measured: f64, expected: f64, tol: f64, pass: bool) {
        self.checks.push(Check {
            scenario: self.scenario,
            name,
            measured,
            expected,
            tol,
            pass,
        });
    }
}

type Scenario = fn(&mut Report) -> Result<Vec<Model>, CliError>;

pub const SCENARIOS: [(&str, &str); 11] = [
    ("example1", "three-parameter family with seven components"),
    ("example2", "continuum of limit points on the boundary"),
    ("example3", "truth inside the hull: the mixture segment is the global component"),
    ("two-state-7over24", "two states, p(h) = 1/10: C-Bay limit 7/24 on theta_star"),
    ("two-state-9over10", "two states, p(h) = 9/10: Bayes limit theta_star, C-Bay limit 17/24"),
    ("prior-bias", "observation weights move the as-if truth to 6/7 and 8/11"),
    ("self-confirming", "belief-dependent weights: zeros at 0, 3/10 and 1"),
    ("constant-weights", "constant weights oscillate, decreasing weights reach 2/3, Bayes 3/4"),
    ("contrarian-weights", "Bayesian on contradicting news, conservative otherwise: oscillation"),
    ("overreaction", "overreaction gamma_n = 2 + 1/n: chaotic beliefs"),
    ("all", "every scenario above"),
];

fn lookup(id: &str) -> Option<Scenario> {
    Some(match id {
        "example1" => example1,
        "example2" => example2,
        "example3" => example3,
        "two-state-7over24" => two_state_low,
        "two-state-9over10" => two_state_high,
        "prior-bias" => prior_bias,
        "self-confirming" => self_confirming,
        "constant-weights" => constant_weights,
        "contrarian-weights" => contrarian_weights,
        "overreaction" => overreaction,
        _ => return None,
    })
}

/// Runs one scenario (or `all`), printing a hash line per model and one
/// line per check. Returns the number of failed checks.
pub fn run(id: &str, out: &mut impl std::io::Write) -> Result<usize, CliError> {
    let ids: Vec<&'static str> = if id == "all" {
        SCENARIOS.iter().map(|(s, _)| *s).filter(|s| *s != "all").collect()
    } else {
        let known = SCENARIOS
            .iter()
            .find(|(s, _)| *s == id && *s != "all")
            .ok_or_else(|| CliError::UnknownExample(id.to_string()))?;
        vec![known.0]
    };
    let mut failed = 0;
    for id in ids {
        let scenario = lookup(id).expect("listed scenario");
        let mut report = Report::new(id);
        let models = scenario(&mut report)?;
        let write_err = |source| CliError::Write {
            path: "stdout".into(),
            source,
        };
        for m in &models {
            writeln!(out, "# {id} model_hash: {}", model_hash(m)).map_err(write_err)?;
        }
        for c in &report.checks {
            writeln!(out, "{c}").map_err(write_err)?;
            failed += usize::from(!c.pass);
        }
        out.flush().map_err(write_err)?;
    }
    Ok(failed)
}

fn component_count(r: &mut Report, m: &Model, expected: usize) -> Result<(), CliError> {
    let analysis = enumerate_components(m)?;
    r.near("components", analysis.len() as f64, expected as f64, 0.0);
    Ok(())
}

fn example1(r: &mut Report) -> Result<Vec<Model>, CliError> {
    let m = catalog::example1();
    component_count(r, &m, 7)?;
    let analysis = enumerate_components(&m)?;
    let g = analysis.global_component();
    r.near(
        "global_distance_to_uniform",
        max_abs_diff(g.hull_vertices[0].as_slice(), &[1.0 / 3.0; 3]),
        0.0,
        1e-8,
    );
    r.near("global_V", g.v_value, (1.0f64 / 3.0).ln(), 1e-10);
    Ok(vec![m])
}

fn example2(r: &mut Report) -> Result<Vec<Model>, CliError> {
    let m = catalog::example2();
    component_count(r, &m, 4)?;
    let analysis = enumerate_components(&m)?;
    let segments = analysis.components.iter().filter(|c| !c.is_singleton()).count();
    r.near("continuum_components", segments as f64, 1.0, 0.0);
    let g = analysis.global_component();
    r.near(
        "global_distance_to_delta_theta1",
        max_abs_diff(g.hull_vertices[0].as_slice(), &[1.0, 0.0, 0.0, 0.0]),
        0.0,
        1e-6,
    );
    Ok(vec![m])
}

fn example3(r: &mut Report) -> Result<Vec<Model>, CliError> {
    let m = catalog::example3();
    component_count(r, &m, 4)?;
    let lambda = lambda_set(&m).map_err(|e| CliError::Numerical(e.to_string()))?;
    r.near("mixture_set_dimension", f64::from(lambda.dimension), 1.0, 0.0);
    let analysis = enumerate_components(&m)?;
    let g = analysis.global_component();
    let ends = [[0.0, 0.6, 0.4], [0.5, 0.0, 0.5]];
    let worst = ends
        .iter()
        .map(|e| {
            g.hull_vertices
                .iter()
                .map(|v| max_abs_diff(v.as_slice(), e))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    r.near("global_segment_endpoint_error", worst, 0.0, 1e-9);
    r.near("global_predictive_error", max_abs_diff(&g.predictive_dist, m.true_dgp()), 0.0, 1e-9);
    Ok(vec![m])
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn replica_median(m: &Model, schedule: &WeightSchedule, steps: u64, theta: usize) -> Result<f64, CliError> {
    let q0 = Belief::uniform(m.n_params());
    let sim = Simulation::new(m, schedule, &q0, steps, SEED).thin(steps);
    let finals = par_map(REPLICAS, |i| sim.clone().replica(i as u64).run());
    let finals = finals
        .into_iter()
        .map(|t| t.map(|t| t.final_belief().get(theta)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(median(finals))
}

fn two_state(r: &mut Report, p_h: f64, limit: f64, with_bayes: bool) -> Result<Vec<Model>, CliError> {
    let m = catalog::two_state(p_h);
    let flow = ode_flow(&m, &Belief::uniform(2), 200.0, 0.01)?;
    r.near("flow_limit_theta_star", flow.terminal().get(0), limit, 1e-6);
    let med = replica_median(&m, &WeightSchedule::harmonic(), LONG_RUN, 0)?;
    r.near("cbay_median_theta_star", med, limit, 0.05);
    if with_bayes {
        let bayes = replica_median(&m, &WeightSchedule::PureBayes, 10_000, 0)?;
        r.above("bayes_median_theta_star", bayes, 0.99);
    }
    Ok(vec![m])
}

fn two_state_low(r: &mut Report) -> Result<Vec<Model>, CliError> {
    two_state(r, 0.1, 7.0 / 24.0, false)
}

fn two_state_high(r: &mut Report) -> Result<Vec<Model>, CliError> {
    two_state(r, 0.9, 17.0 / 24.0, true)
}

fn prior_bias(r: &mut Report) -> Result<Vec<Model>, CliError> {
    let m = catalog::prior_bias();
    let numerical = |e: misspec_learn::geometry::GeometryError| CliError::Numerical(e.to_string());
    r.near("as_if_truth_3_4_1_4", as_if_dgp(&m, &[0.75, 0.25]).map_err(numerical)?[0], 6.0 / 7.0, 1e-12);
    r.near("as_if_truth_2_3_1_2", as_if_dgp(&m, &[2.0 / 3.0, 0.5]).map_err(numerical)?[0], 8.0 / 11.0, 1e-12);
    let base = WeightSchedule::power(0.5).map_err(|e| CliError::Config(e.to_string()))?;
    let schedule = WeightSchedule::observation_dependent(base, vec![2.0 / 3.0, 0.5])
        .map_err(|e| CliError::Config(e.to_string()))?;
    let q0 = Belief::new(vec![0.6, 0.4])?;
    let t = Simulation::new(&m, &schedule, &q0, LONG_RUN, SEED).run()?;
    r.near("simulated_predictive_a", t.final_predictive()[0], 8.0 / 11.0, 0.02);
    Ok(vec![m])
}

fn self_confirming(r: &mut Report) -> Result<Vec<Model>, CliError> {
    let m = catalog::prior_bias();
    let alpha = Alpha::self_confirming(0.75, 0.25, 0.5);
    let h = |q: f64| hat_h(&m, &[q, 1.0 - q], &alpha).map(|v| v[0]).unwrap_or(f64::NAN);
    let roots = scan_roots(h, 0.0, 1.0, 10_000, 1e-12);
    r.near("zero_count", roots.len() as f64, 3.0, 0.0);
    let names = ["zero_0", "zero_3_10", "zero_1"];
    for ((name, expected), found) in names.into_iter().zip([0.0, 0.3, 1.0]).zip(roots.iter().chain([&f64::NAN; 3])) {
        r.near(name, *found, expected, 1e-6);
    }
    Ok(vec![m])
}

/// Sample variance of `q(θ)` over the last `window` stored beliefs.
fn tail_variance(t: &Trajectory, window: usize) -> f64 {
    let tail: Vec<f64> = t.beliefs[t.beliefs.len().saturating_sub(window)..]
        .iter()
        .map(|q| q.get(0))
        .collect();
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    tail.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (tail.len() - 1) as f64
}

/// Standard deviation of predictive(1) over the last `window` stored steps.
fn tail_predictive_sd(t: &Trajectory, window: usize) -> f64 {
    let tail: Vec<f64> = t.predictives[t.predictives.len().saturating_sub(window)..]
        .iter()
        .map(|p| p[1])
        .collect();
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    (tail.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (tail.len() - 1) as f64).sqrt()
}

fn constant_weights(r: &mut Report) -> Result<Vec<Model>, CliError> {
    let m = catalog::constant_weight();
    let q0 = Belief::uniform(2);
    let constant = WeightSchedule::constant(0.2).map_err(|e| CliError::Config(e.to_string()))?;
    let runs = par_map(3, |i| {
        let schedule = match i {
            0 => constant.clone(),
            1 => WeightSchedule::harmonic(),
            _ => WeightSchedule::PureBayes,
        };
        let thin = if i == 0 { 1 } else { LONG_RUN };
        let steps = if i == 0 { 100_000 } else { LONG_RUN };
        Simulation::new(&m, &schedule, &q0, steps, SEED).thin(thin).run()
    });
    let mut runs = runs.into_iter();
    let constant = runs.next().unwrap()?;
    r.above("constant_predictive_sd_last_10000", tail_predictive_sd(&constant, 10_000), 0.01);
    let decreasing = runs.next().unwrap()?;
    r.near("decreasing_predictive_1", decreasing.final_predictive()[1], 2.0 / 3.0, 0.02);
    let bayes = runs.next().unwrap()?;
    r.near("bayes_predictive_1", bayes.final_predictive()[1], 0.75, 1e-3);
    r.near("berk_parameter", berk_point(&m)[0] as f64, 0.0, 0.0);
    Ok(vec![m])
}

fn contrarian_weights(r: &mut Report) -> Result<Vec<Model>, CliError> {
    let m = catalog::binary(0.9);
    let inner = m.clone();
    // Bayesian when the news contradicts the current belief (the posterior
    // moves q(θ) across towards 1/2), conservative otherwise
    let schedule = WeightSchedule::custom("contrarian-bayes", move |ctx| {
        let q = ctx.belief.get(0);
        let b = bayes_posterior(&inner, ctx.belief, ctx.observation).map_or(q, |p| p.get(0));
        if (b - q) * (0.5 - q) > 0.0 {
            1.0
        } else {
            1.0 / ctx.step as f64
        }
    });
    let q0 = Belief::uniform(2);
    let t = Simulation::new(&m, &schedule, &q0, 100_000, SEED).thin(1).run()?;
    r.above("belief_variance_last_1000", tail_variance(&t, 1000), 0.01);
    Ok(vec![m])
}

fn overreaction(r: &mut Report) -> Result<Vec<Model>, CliError> {
    let m = catalog::overreaction();
    let schedule = WeightSchedule::overreacting(2.0, 0.01).map_err(|e| CliError::Config(e.to_string()))?;
    let q0 = Belief::uniform(2);
    let t = Simulation::new(&m, &schedule, &q0, 100_000, SEED).thin(1).run()?;
    r.above("belief_variance_last_1000", tail_variance(&t, 1000), 0.01);
    Ok(vec![m])
}
