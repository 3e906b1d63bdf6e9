//! Experiment configuration: a TOML file whose keys mirror the long flags,
//! merged with the command line (flags win).

use std::path::{Path, PathBuf};

use misspec_learn::literal::{parse_list, parse_number};
use misspec_learn::schedule::WeightSchedule;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

/// A list given either as a TOML array or as one comma-separated string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ListValue {
    One(f64),
    Many(Vec<Scalar>),
    Text(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            Self::One(v) => vec![v],
            Self::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<PathBuf>,
    pub schedule: Option<OneOrMany<String>>,
    pub q0: Option<ListValue>,
    pub steps: Option<u64>,
    pub seeds: Option<OneOrMany<u64>>,
    pub gamma: Option<ListValue>,
    pub delta: Option<ListValue>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub thin: Option<u64>,
    pub bin_width: Option<f64>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    /// Reads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        for p in [&mut cfg.model, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{field}`: {msg}"))
}

fn list_from_flag(field: &str, text: &str) -> Result<Vec<f64>, CliError> {
    parse_list(text).map_err(|e| field_error(field, e))
}

fn list_from_config(field: &str, value: &ListValue) -> Result<Vec<f64>, CliError> {
    match value {
        ListValue::One(v) => Ok(vec![*v]),
        ListValue::Text(s) => list_from_flag(field, s),
        ListValue::Many(items) => items
            .iter()
            .map(|s| match s {
                Scalar::Number(v) => Ok(*v),
                Scalar::Text(t) => parse_number(t).map_err(|e| field_error(field, e)),
            })
            .collect(),
    }
}

/// Values from the command line; `None` defers to the config file.
#[derive(Debug, Clone, Default)]
pub struct FlagValues {
    pub model: Option<PathBuf>,
    pub schedule: Vec<String>,
    pub q0: Option<String>,
    pub steps: Option<u64>,
    pub seeds: Option<String>,
    pub gamma: Option<String>,
    pub delta: Option<String>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub thin: Option<u64>,
    pub bin_width: Option<f64>,
    pub out: Option<PathBuf>,
}

/// Merged settings with typed accessors.
#[derive(Debug, Clone)]
pub struct Settings {
    flags: FlagValues,
    file: FileConfig,
}

impl Settings {
    pub fn new(flags: FlagValues, file: Option<FileConfig>) -> Self {
        Self {
            flags,
            file: file.unwrap_or_default(),
        }
    }

    pub fn model(&self) -> Result<PathBuf, CliError> {
        self.flags
            .model
            .clone()
            .or_else(|| self.file.model.clone())
            .ok_or_else(|| field_error("model", "a model file is required"))
    }

    pub fn schedules(&self) -> Result<Vec<WeightSchedule>, CliError> {
        let texts: Vec<String> = if !self.flags.schedule.is_empty() {
            self.flags.schedule.clone()
        } else {
            self.file.schedule.clone().map(OneOrMany::into_vec).unwrap_or_default()
        };
        if texts.is_empty() {
            return Err(field_error("schedule", "at least one schedule is required"));
        }
        texts
            .iter()
            .map(|t| t.parse::<WeightSchedule>().map_err(|e| field_error("schedule", e)))
            .collect()
    }

    pub fn q0(&self) -> Result<Option<Vec<f64>>, CliError> {
        match (&self.flags.q0, &self.file.q0) {
            (Some(t), _) => list_from_flag("q0", t).map(Some),
            (None, Some(v)) => list_from_config("q0", v).map(Some),
            (None, None) => Ok(None),
        }
    }

    pub fn steps(&self, default: Option<u64>) -> Result<u64, CliError> {
        let steps = self
            .flags
            .steps
            .or(self.file.steps)
            .or(default)
            .ok_or_else(|| field_error("steps", "the number of steps is required"))?;
        if steps == 0 {
            return Err(field_error("steps", "must be at least 1"));
        }
        Ok(steps)
    }

    pub fn seeds(&self) -> Result<Vec<u64>, CliError> {
        let seeds = match (&self.flags.seeds, &self.file.seeds) {
            (Some(t), _) => t
                .split(',')
                .map(|s| s.trim().parse::<u64>().map_err(|e| field_error("seeds", format!("`{s}`: {e}"))))
                .collect::<Result<Vec<_>, _>>()?,
            (None, Some(v)) => v.clone().into_vec(),
            (None, None) => vec![0],
        };
        if seeds.is_empty() {
            return Err(field_error("seeds", "empty seed list"));
        }
        Ok(seeds)
    }

    pub fn gammas(&self) -> Result<Vec<f64>, CliError> {
        let gammas = match (&self.flags.gamma, &self.file.gamma) {
            (Some(t), _) => list_from_flag("gamma", t)?,
            (None, Some(v)) => list_from_config("gamma", v)?,
            (None, None) => return Err(field_error("gamma", "at least one constant weight is required")),
        };
        if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
            return Err(field_error("gamma", format!("{g} is outside (0, 1)")));
        }
        Ok(gammas)
    }

    pub fn deltas(&self) -> Result<Vec<f64>, CliError> {
        let deltas = match (&self.flags.delta, &self.file.delta) {
            (Some(t), _) => list_from_flag("delta", t)?,
            (None, Some(v)) => list_from_config("delta", v)?,
            (None, None) => vec![0.05],
        };
        if let Some(d) = deltas.iter().find(|d| !(**d >= 0.0 && **d <= 1.0)) {
            return Err(field_error("delta", format!("{d} is outside [0, 1]")));
        }
        Ok(deltas)
    }

    fn positive(field: &str, v: f64) -> Result<f64, CliError> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(field_error(field, format!("{v} must be positive")))
        }
    }

    pub fn dt(&self) -> Result<f64, CliError> {
        Self::positive("dt", self.flags.dt.or(self.file.dt).unwrap_or(0.01))
    }

    pub fn t_end(&self) -> Result<f64, CliError> {
        let t = self
            .flags
            .t_end
            .or(self.file.t_end)
            .ok_or_else(|| field_error("t_end", "an integration horizon is required"))?;
        Self::positive("t_end", t)
    }

    pub fn thin(&self) -> Result<Option<u64>, CliError> {
        match self.flags.thin.or(self.file.thin) {
            Some(0) => Err(field_error("thin", "must be at least 1")),
            other => Ok(other),
        }
    }

    pub fn bin_width(&self) -> Result<f64, CliError> {
        let w = self
            .flags
            .bin_width
            .or(self.file.bin_width)
            .unwrap_or(misspec_learn::dynamics::DEFAULT_BIN_WIDTH);
        if w > 0.0 && w <= 1.0 {
            Ok(w)
        } else {
            Err(field_error("bin_width", format!("{w} is outside (0, 1]")))
        }
    }

    pub fn out(&self) -> PathBuf {
        self.flags
            .out
            .clone()
            .or_else(|| self.file.out.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}
