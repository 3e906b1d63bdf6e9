use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use misspec_learn::components::enumerate_components;
use misspec_learn::dynamics::{
    misspec_statistic, occupation_experiment, ode_flow, par_map, OccupationConfig, Simulation, Trajectory,
};
use misspec_learn::geometry::{is_convex_independent, is_full, is_tight, lambda_set, MixtureSet};
use misspec_learn::io::{
    component_report, model_hash, read_model, write_flow_csv, write_occupation_csv, write_trajectory_csv,
    OutputHeader,
};
use misspec_learn::linalg::max_abs_diff;
use misspec_learn::model::{Belief, Model};

use crate::config::Settings;
use crate::error::CliError;

/// Tolerance for the singleton mixture point of a tight family agreeing
/// with the global component.
const TIGHT_AGREEMENT_TOL: f64 = 1e-8;

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.display().to_string(),
        source,
    })
}

/// Creates `dir/name` and hands a buffered writer to `body`.
fn write_file<F>(dir: &Path, name: &str, body: F) -> Result<PathBuf, CliError>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
{
    let path = dir.join(name);
    let wrap = |source| CliError::Write {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::create(&path).map_err(wrap)?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(wrap)?;
    w.flush().map_err(wrap)?;
    Ok(path)
}

fn initial_belief(model: &Model, settings: &Settings) -> Result<Belief, CliError> {
    match settings.q0()? {
        Some(v) => Belief::for_model(model, v).map_err(|e| CliError::Config(format!("field `q0`: {e}"))),
        None => Ok(Belief::uniform(model.n_params())),
    }
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' })
        .collect()
}

fn fmt_point(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.10}")).collect();
    format!("({})", parts.join(", "))
}

fn describe_lambda(set: &MixtureSet) -> String {
    if set.is_empty() {
        return "empty (the truth is outside the convex hull of the family)".into();
    }
    let mut s = format!("dimension {}", set.dimension);
    if set.vertices.is_empty() {
        if let Some(b) = &set.basis {
            let _ = write!(s, ", centre {}", fmt_point(&b.origin));
        }
    } else {
        for v in &set.vertices {
            let _ = write!(s, "\n  vertex {}", fmt_point(v.as_slice()));
        }
    }
    s
}

pub fn analyze(settings: &Settings) -> Result<(), CliError> {
    let model = read_model(&settings.model()?)?;
    let analysis = enumerate_components(&model)?;
    let lambda = lambda_set(&model).map_err(|e| CliError::Config(e.to_string()))?;
    let full = is_full(&model);
    let independent = is_convex_independent(&model).map_err(|e| CliError::Config(e.to_string()))?;
    let tight = is_tight(&model).map_err(|e| CliError::Config(e.to_string()))?;

    let mut report = String::new();
    let _ = writeln!(report, "# model_hash: {}", model_hash(&model));
    let _ = writeln!(report, "full: {full}");
    let _ = writeln!(report, "convex_independent: {independent}");
    let _ = writeln!(report, "tight: {tight}");
    let _ = writeln!(report, "mixture_set: {}", describe_lambda(&lambda));
    let _ = writeln!(report);
    report.push_str(&component_report(&model, &analysis));

    // a tight family has at most one mixture reproducing the truth, and it
    // is then the whole global component
    let mut violation = None;
    if tight && !lambda.is_empty() {
        let g = analysis.global_component();
        let agrees = lambda.is_singleton()
            && g.is_singleton()
            && max_abs_diff(lambda.vertices[0].as_slice(), g.hull_vertices[0].as_slice()) < TIGHT_AGREEMENT_TOL;
        let _ = writeln!(report);
        let _ = writeln!(report, "tight_mixture_point_is_global: {agrees}");
        if !agrees {
            violation = Some("tight family: mixture set is not the global singleton".to_string());
        }
    }

    let out = settings.out();
    create_dir(&out)?;
    write_file(&out, "report.txt", |w| w.write_all(report.as_bytes()))?;
    print!("{report}");
    match violation {
        Some(v) => Err(CliError::Assertion(v)),
        None => Ok(()),
    }
}

fn run_header(model: &Model, traj: &Trajectory) -> OutputHeader {
    OutputHeader::for_model(model)
        .with("seed", traj.seed)
        .with("schedule", &traj.schedule)
        .with("steps", traj.n_steps)
}

pub fn simulate(settings: &Settings, allow_boundary: bool) -> Result<(), CliError> {
    let model = read_model(&settings.model()?)?;
    let schedules = settings.schedules()?;
    let seeds = settings.seeds()?;
    let steps = settings.steps(None)?;
    let thin = settings.thin()?;
    let q0 = initial_belief(&model, settings)?;
    for s in &schedules {
        s.check_model(&model).map_err(|e| CliError::Config(format!("field `schedule`: {e}")))?;
    }

    let jobs: Vec<(usize, u64)> = (0..schedules.len())
        .flat_map(|i| seeds.iter().map(move |s| (i, *s)))
        .collect();
    let runs = par_map(jobs.len(), |j| {
        let (i, seed) = jobs[j];
        let mut sim = Simulation::new(&model, &schedules[i], &q0, steps, seed).allow_boundary(allow_boundary);
        if let Some(t) = thin {
            sim = sim.thin(t);
        }
        sim.run()
    });

    let out = settings.out();
    create_dir(&out)?;
    let mut summary = String::from("schedule,seed");
    for l in model.theta_labels() {
        let _ = write!(summary, ",q_{l}");
    }
    for l in model.x_labels() {
        let _ = write!(summary, ",predictive_{l}");
    }
    summary.push_str(",V,misspec_statistic\n");
    for ((i, seed), run) in jobs.iter().zip(runs) {
        let traj = run?;
        let name = format!("trajectory_{}_{}_seed{seed}.csv", i + 1, slug(&traj.schedule));
        write_file(&out, &name, |w| write_trajectory_csv(w, &model, &traj, &run_header(&model, &traj)))?;
        let q = traj.final_belief();
        let _ = write!(summary, "{},{seed}", traj.schedule);
        for v in q.as_slice().iter().chain(traj.final_predictive()) {
            let _ = write!(summary, ",{v}");
        }
        let _ = writeln!(summary, ",{},{}", traj.v_values.last().unwrap(), misspec_statistic(q));
        println!(
            "{} seed {seed}: final belief {} predictive {} statistic {:.6}",
            traj.schedule,
            fmt_point(q.as_slice()),
            fmt_point(traj.final_predictive()),
            misspec_statistic(q)
        );
    }
    let header = OutputHeader::for_model(&model).with("steps", steps);
    write_file(&out, "summary.csv", |w| {
        header.write_to(w)?;
        w.write_all(summary.as_bytes())
    })?;
    Ok(())
}

pub fn flow(settings: &Settings) -> Result<(), CliError> {
    let model = read_model(&settings.model()?)?;
    let q0 = initial_belief(&model, settings)?;
    let t_end = settings.t_end()?;
    let dt = settings.dt()?;
    let thin = settings.thin()?.unwrap_or(1);
    let path = ode_flow(&model, &q0, t_end, dt)?;
    let out = settings.out();
    create_dir(&out)?;
    let header = OutputHeader::for_model(&model)
        .with("q0", fmt_point(q0.as_slice()))
        .with("t_end", t_end)
        .with("dt", dt);
    write_file(&out, "flow.csv", |w| write_flow_csv(w, &model, &path, thin as usize, &header))?;
    println!("terminal belief at t = {t_end}: {}", fmt_point(path.terminal().as_slice()));
    Ok(())
}

pub fn occupation(settings: &Settings) -> Result<(), CliError> {
    let model = read_model(&settings.model()?)?;
    let gammas = settings.gammas()?;
    let q0 = initial_belief(&model, settings)?;
    let seed = settings.seeds()?[0];
    let mut cfg = OccupationConfig::new(settings.steps(Some(1_000_000))?, seed);
    cfg.bin_width = settings.bin_width()?;
    cfg.deltas = settings.deltas()?;
    let measures = occupation_experiment(&model, &gammas, &q0, &cfg)?;

    let out = settings.out();
    create_dir(&out)?;
    let mut summary = String::from("gamma,delta,mass\n");
    for m in &measures {
        let header = OutputHeader::for_model(&model)
            .with("seed", seed)
            .with("schedule", format!("constant:{}", m.gamma))
            .with("steps", m.n);
        write_file(&out, &format!("occupation_gamma{}.csv", slug(&m.gamma.to_string())), |w| {
            write_occupation_csv(w, &model, m, &header)
        })?;
        for (d, mass) in &m.neighborhood_mass {
            let _ = writeln!(summary, "{},{d},{mass}", m.gamma);
            println!("gamma {}: mass within TV {d} of the global component = {mass:.6}", m.gamma);
        }
    }
    let header = OutputHeader::for_model(&model).with("seed", seed).with("steps", cfg.n_steps);
    write_file(&out, "concentration.csv", |w| {
        header.write_to(w)?;
        w.write_all(summary.as_bytes())
    })?;
    Ok(())
}
