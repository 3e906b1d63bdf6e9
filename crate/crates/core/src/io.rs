//! Model files, CSV outputs and the component report.
//!
//! A model file is TOML:
//!
//! ```toml
//! theta_labels = ["A", "B"]          # optional, defaults to theta1, theta2, ...
//! x_labels = ["a", "b"]              # optional, defaults to x1, x2, ...
//! likelihoods = [["3/4", "1/4"],     # one row per parameter
//!                [0.25, 0.75]]
//! true_dgp = ["2/3", "1/3"]
//! ```
//!
//! Probabilities are TOML numbers or strings holding a decimal or an exact
//! rational `p/q`.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::components::ComponentAnalysis;
use crate::dynamics::{FlowPath, OccupationMeasure, Trajectory};
use crate::geometry::{cross_entropy_v, predictive};
use crate::literal::{parse_number, LiteralError};
use crate::model::{Model, ModelError, RawModel};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("model file is not valid TOML: {0}")]
    Syntax(String),
    #[error("bad literal in {field}: {source}")]
    Literal {
        field: String,
        #[source]
        source: LiteralError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Literal {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    theta_labels: Option<Vec<String>>,
    x_labels: Option<Vec<String>>,
    likelihoods: Vec<Vec<Literal>>,
    true_dgp: Vec<Literal>,
}

fn literal(value: &Literal, field: impl FnOnce() -> String) -> Result<f64, IoError> {
    match value {
        Literal::Number(v) => Ok(*v),
        Literal::Text(s) => parse_number(s).map_err(|source| IoError::Literal { field: field(), source }),
    }
}

/// Parses and validates a model document.
pub fn parse_model(text: &str) -> Result<Model, IoError> {
    let file: ModelFile = toml::from_str(text).map_err(|e| IoError::Syntax(e.to_string()))?;
    let likelihoods = file
        .likelihoods
        .iter()
        .enumerate()
        .map(|(r, row)| {
            row.iter()
                .enumerate()
                .map(|(c, v)| literal(v, || format!("likelihoods[{r}][{c}]")))
                .collect::<Result<Vec<f64>, IoError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let true_dgp = file
        .true_dgp
        .iter()
        .enumerate()
        .map(|(i, v)| literal(v, || format!("true_dgp[{i}]")))
        .collect::<Result<Vec<f64>, IoError>>()?;
    let mut raw = RawModel::unlabeled(likelihoods, true_dgp);
    if let Some(labels) = file.theta_labels {
        raw.theta_labels = labels;
    }
    if let Some(labels) = file.x_labels {
        raw.x_labels = labels;
    }
    Ok(Model::new(&raw)?)
}

pub fn read_model(path: &Path) -> Result<Model, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_model(&text)
}

/// Serializes a model as a model document. Floats are written in shortest
/// round-trip form, so parsing the output reproduces the model bit-for-bit.
pub fn model_to_toml(model: &Model) -> String {
    let raw = model.to_raw();
    toml::to_string(&raw).expect("models always serialize")
}

/// SHA-256 over the labels and the exact bit patterns of all
/// probabilities, as lowercase hex.
pub fn model_hash(model: &Model) -> String {
    let mut h = Sha256::new();
    for labels in [model.theta_labels(), model.x_labels()] {
        h.update((labels.len() as u64).to_le_bytes());
        for l in labels {
            h.update((l.len() as u64).to_le_bytes());
            h.update(l.as_bytes());
        }
    }
    for row in model.rows() {
        for v in row {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    for v in model.true_dgp() {
        h.update(v.to_bits().to_le_bytes());
    }
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Provenance written as `#` comment lines at the top of every output.
#[derive(Debug, Clone, Default)]
pub struct OutputHeader {
    pub entries: Vec<(String, String)>,
}

impl OutputHeader {
    pub fn for_model(model: &Model) -> Self {
        Self {
            entries: vec![("model_hash".into(), model_hash(model))],
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "# {k}: {v}")?;
        }
        Ok(())
    }
}

fn belief_columns(model: &Model, first: &str) -> String {
    let mut cols = vec![first.to_string()];
    cols.extend(model.theta_labels().iter().map(|l| format!("q_{l}")));
    cols.extend(model.x_labels().iter().map(|l| format!("predictive_{l}")));
    cols.push("V".into());
    cols.join(",")
}

fn write_row<W: Write>(w: &mut W, lead: &str, q: &[f64], pred: &[f64], v: f64) -> io::Result<()> {
    write!(w, "{lead}")?;
    for x in q.iter().chain(pred) {
        write!(w, ",{x}")?;
    }
    writeln!(w, ",{v}")
}

/// Columns `step, q_<theta>..., predictive_<x>..., V`.
pub fn write_trajectory_csv<W: Write>(
    w: &mut W,
    model: &Model,
    traj: &Trajectory,
    header: &OutputHeader,
) -> io::Result<()> {
    header.write_to(w)?;
    writeln!(w, "{}", belief_columns(model, "step"))?;
    for i in 0..traj.len() {
        write_row(
            w,
            &traj.steps[i].to_string(),
            traj.beliefs[i].as_slice(),
            &traj.predictives[i],
            traj.v_values[i],
        )?;
    }
    Ok(())
}

/// Columns `t, q_<theta>..., predictive_<x>..., V`, every `thin`-th point
/// plus the last one.
pub fn write_flow_csv<W: Write>(
    w: &mut W,
    model: &Model,
    path: &FlowPath,
    thin: usize,
    header: &OutputHeader,
) -> io::Result<()> {
    header.write_to(w)?;
    writeln!(w, "{}", belief_columns(model, "t"))?;
    let last = path.beliefs.len() - 1;
    for (i, (t, q)) in path.times.iter().zip(&path.beliefs).enumerate() {
        if i % thin.max(1) == 0 || i == last {
            write_row(w, &t.to_string(), q.as_slice(), &predictive(model, q), cross_entropy_v(model, q))?;
        }
    }
    Ok(())
}

/// Columns `bin_<theta>...` (lower bin corners of all but the last
/// parameter) and `mass`.
pub fn write_occupation_csv<W: Write>(
    w: &mut W,
    model: &Model,
    measure: &OccupationMeasure,
    header: &OutputHeader,
) -> io::Result<()> {
    header.write_to(w)?;
    let free = model.n_params().saturating_sub(1);
    let mut cols: Vec<String> = model.theta_labels()[..free].iter().map(|l| format!("bin_{l}")).collect();
    cols.push("mass".into());
    writeln!(w, "{}", cols.join(","))?;
    for (corner, mass) in measure.histogram() {
        for c in &corner {
            write!(w, "{c},")?;
        }
        writeln!(w, "{mass}")?;
    }
    Ok(())
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.10}")).collect();
    format!("({})", parts.join(", "))
}

/// Human-readable table of the components of the zero set.
pub fn component_report(model: &Model, analysis: &ComponentAnalysis) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "components: {}", analysis.len());
    let _ = writeln!(out, "global: {}", analysis.global + 1);
    for (i, c) in analysis.components.iter().enumerate() {
        let labels: Vec<&str> = c.support.iter().map(|t| model.theta_labels()[*t].as_str()).collect();
        let _ = writeln!(out);
        let _ = writeln!(out, "[component {}]", i + 1);
        let _ = writeln!(out, "support: {{{}}}", labels.join(", "));
        let _ = writeln!(out, "global: {}", c.is_global);
        let _ = writeln!(out, "V: {:.12}", c.v_value);
        let _ = writeln!(out, "predictive: {}", fmt_vec(&c.predictive_dist));
        let _ = writeln!(out, "vertices: {}", c.hull_vertices.len());
        for v in &c.hull_vertices {
            let _ = writeln!(out, "  {}", fmt_vec(v.as_slice()));
        }
    }
    out
}
