use std::collections::BTreeMap;

use super::{par_map, DynamicsError, Simulation};
use crate::components::enumerate_components;
use crate::model::{Belief, Model};
use crate::schedule::WeightSchedule;

/// Default histogram bin width per free coordinate.
pub const DEFAULT_BIN_WIDTH: f64 = 1e-2;

/// Empirical measure `(1/n) Σ_{m=1}^n δ_{q_m}` of a constant-weight chain.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationMeasure {
    pub gamma: f64,
    pub n: u64,
    pub bin_width: f64,
    /// Visit counts keyed by bin index of the first `|Θ| − 1` coordinates.
    pub counts: BTreeMap<Vec<u32>, u64>,
    /// `(δ, Π(N^δ(C_{k*})))` for each requested radius, measured on the
    /// exact samples rather than the histogram.
    pub neighborhood_mass: Vec<(f64, f64)>,
}

impl OccupationMeasure {
    /// Lower bin corners with their masses, in bin order.
    pub fn histogram(&self) -> Vec<(Vec<f64>, f64)> {
        self.counts
            .iter()
            .map(|(k, c)| {
                let corner = k.iter().map(|i| *i as f64 * self.bin_width).collect();
                (corner, *c as f64 / self.n as f64)
            })
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.counts.values().sum::<u64>() as f64 / self.n as f64
    }

    pub fn mass_within(&self, delta: f64) -> Option<f64> {
        self.neighborhood_mass.iter().find(|(d, _)| *d == delta).map(|(_, m)| *m)
    }
}

fn bin_of(q: &Belief, width: f64, last: u32) -> Vec<u32> {
    let free = q.len().saturating_sub(1);
    q.as_slice()[..free]
        .iter()
        .map(|v| ((v / width).floor() as u32).min(last))
        .collect()
}

#[derive(Debug, Clone)]
pub struct OccupationConfig {
    pub n_steps: u64,
    pub seed: u64,
    pub bin_width: f64,
    /// Radii of the total-variation neighbourhoods of the global component.
    pub deltas: Vec<f64>,
}

impl OccupationConfig {
    pub fn new(n_steps: u64, seed: u64) -> Self {
        Self {
            n_steps,
            seed,
            bin_width: DEFAULT_BIN_WIDTH,
            deltas: Vec::new(),
        }
    }
}

/// Occupation measures of the chain `q_{n+1} = (1−γ)q_n + γB(q_n, x)` for
/// each constant weight in `gammas`, with the neighbourhood masses of the
/// cross-entropy-maximal component. Weight number `i` draws from stream `i`
/// of the seed.
pub fn occupation_experiment(
    model: &Model,
    gammas: &[f64],
    q0: &Belief,
    config: &OccupationConfig,
) -> Result<Vec<OccupationMeasure>, DynamicsError> {
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
        return Err(DynamicsError::InvalidGamma(*g));
    }
    let w = config.bin_width;
    if !(w > 0.0 && w <= 1.0) {
        return Err(DynamicsError::InvalidBinWidth(w));
    }
    let needs_component = !config.deltas.is_empty();
    let global = if needs_component {
        Some(enumerate_components(model)?.global_component().clone())
    } else {
        None
    };
    let last_bin = ((1.0 / w).ceil() as u32).saturating_sub(1);
    let runs = par_map(gammas.len(), |i| -> Result<OccupationMeasure, DynamicsError> {
        let gamma = gammas[i];
        let schedule = WeightSchedule::constant(gamma)?;
        let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        let mut inside = vec![0u64; config.deltas.len()];
        let sim = Simulation::new(model, &schedule, q0, config.n_steps, config.seed)
            .replica(i as u64)
            .thin(config.n_steps)
            .allow_boundary(true);
        sim.run_with(|_, q| {
            *counts.entry(bin_of(q, w, last_bin)).or_insert(0) += 1;
            if let Some(c) = &global {
                let d = c.tv_distance(q);
                for (k, delta) in config.deltas.iter().enumerate() {
                    if d <= *delta {
                        inside[k] += 1;
                    }
                }
            }
        })?;
        let n = config.n_steps;
        Ok(OccupationMeasure {
            gamma,
            n,
            bin_width: w,
            counts,
            neighborhood_mass: config
                .deltas
                .iter()
                .zip(inside)
                .map(|(d, c)| (*d, c as f64 / n as f64))
                .collect(),
        })
    });
    runs.into_iter().collect()
}
