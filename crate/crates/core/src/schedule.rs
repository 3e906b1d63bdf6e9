//! Weight schedules: the rule that produces `γ_n` for the `n`-th update.
//!
//! Steps are 1-based: the update that produces `q_n` from `q_{n-1}` and
//! `x_n` uses the weight of step `n`.
//!
//! Text form (used by the CLI and in output headers):
//!
//! ```text
//! bayes                       γ_n = 1
//! power:<a>                   γ_n = n^(-a),               0 < a <= 1
//! log:<a>                     γ_n = min(1, ln(n+1)^(-a)), a > 1
//! constant:<g>                γ_n = g,                    0 < g < 1
//! obsdep:<a_1,..,a_X>:<base>  γ_n(x) = base_n * a_x,      0 < a_x <= 1
//! generalized:<base>          tempered posterior q·p^γ with γ from base
//! overreact:<b>:<eps>         γ_n = b + 1/n,              b > 1, clamp eps
//! ```

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::literal::{parse_list, parse_number};
use crate::model::{Belief, Model};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("constant weight must lie in (0, 1), got {0}")]
    InvalidConstant(f64),
    #[error("{0}")]
    UncertifiedFamily(String),
    #[error("observation weights must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("observation weights have {got} entries, model has {expected} observations")]
    AlphaLength { got: usize, expected: usize },
    #[error("overreaction needs base > 1 and clamp in (0, 1/|Θ|); got base {base}, clamp {clamp}")]
    InvalidOverreaction { base: f64, clamp: f64 },
    #[error("{0} cannot be used as a base schedule")]
    InvalidBase(String),
    #[error("cannot parse schedule `{0}`")]
    Parse(String),
}

/// Decreasing weight families satisfying `Σγ_n = ∞` and
/// `Σ exp(-c/γ_n) < ∞` for every `c > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecreasingFamily {
    /// `n^(-exponent)` with exponent in (0, 1].
    Power { exponent: f64 },
    /// `ln(n+1)^(-exponent)` with exponent > 1, capped at 1.
    LogPower { exponent: f64 },
}

impl DecreasingFamily {
    pub fn weight(&self, step: u64) -> f64 {
        let n = step.max(1) as f64;
        match *self {
            DecreasingFamily::Power { exponent } => n.powf(-exponent),
            DecreasingFamily::LogPower { exponent } => (n + 1.0).ln().powf(-exponent).min(1.0),
        }
    }
}

/// Information available to a custom weight supplier.
#[derive(Debug, Clone, Copy)]
pub struct WeightContext<'a> {
    pub step: u64,
    /// Belief before the update.
    pub belief: &'a Belief,
    pub observation: usize,
}

type Supplier = dyn Fn(&WeightContext<'_>) -> f64 + Send + Sync;

/// User-supplied weights, possibly random or belief-dependent. The
/// convergence conditions are not checked, so these are always flagged as
/// unvalidated.
#[derive(Clone)]
pub struct CustomSchedule {
    name: String,
    supplier: Arc<Supplier>,
}

impl CustomSchedule {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn weight(&self, ctx: &WeightContext<'_>) -> f64 {
        (self.supplier)(ctx)
    }

    pub fn validated(&self) -> bool {
        false
    }
}

impl fmt::Debug for CustomSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomSchedule")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum WeightSchedule {
    PureBayes,
    Decreasing(DecreasingFamily),
    Constant(f64),
    ObservationDependent {
        base: Box<WeightSchedule>,
        alpha: Vec<f64>,
    },
    GeneralizedBayes(Box<WeightSchedule>),
    Overreacting {
        base: f64,
        clamp: f64,
    },
    Custom(CustomSchedule),
}

impl WeightSchedule {
    /// `γ_n = n^(-exponent)`.
    pub fn power(exponent: f64) -> Result<Self, ScheduleError> {
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(ScheduleError::UncertifiedFamily(format!(
                "power family needs exponent in (0, 1], got {exponent}"
            )));
        }
        Ok(Self::Decreasing(DecreasingFamily::Power { exponent }))
    }

    /// `γ_n = ln(n+1)^(-exponent)`, capped at 1.
    pub fn log_power(exponent: f64) -> Result<Self, ScheduleError> {
        if !(exponent > 1.0 && exponent.is_finite()) {
            return Err(ScheduleError::UncertifiedFamily(format!(
                "log family needs exponent > 1, got {exponent}"
            )));
        }
        Ok(Self::Decreasing(DecreasingFamily::LogPower { exponent }))
    }

    pub fn harmonic() -> Self {
        Self::Decreasing(DecreasingFamily::Power { exponent: 1.0 })
    }

    pub fn constant(gamma: f64) -> Result<Self, ScheduleError> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(ScheduleError::InvalidConstant(gamma));
        }
        Ok(Self::Constant(gamma))
    }

    pub fn observation_dependent(base: WeightSchedule, alpha: Vec<f64>) -> Result<Self, ScheduleError> {
        base.check_base()?;
        if let Some(&a) = alpha.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return Err(ScheduleError::InvalidAlpha(a));
        }
        Ok(Self::ObservationDependent {
            base: Box::new(base),
            alpha,
        })
    }

    pub fn generalized_bayes(base: WeightSchedule) -> Result<Self, ScheduleError> {
        base.check_base()?;
        Ok(Self::GeneralizedBayes(Box::new(base)))
    }

    /// `γ_n = base + 1/n`. The clamp bound is checked against the model
    /// size in [`WeightSchedule::check_model`].
    pub fn overreacting(base: f64, clamp: f64) -> Result<Self, ScheduleError> {
        if !(base > 1.0 && base.is_finite() && clamp > 0.0 && clamp < 0.5) {
            return Err(ScheduleError::InvalidOverreaction { base, clamp });
        }
        Ok(Self::Overreacting { base, clamp })
    }

    pub fn custom<F>(name: impl Into<String>, supplier: F) -> Self
    where
        F: Fn(&WeightContext<'_>) -> f64 + Send + Sync + 'static,
    {
        Self::Custom(CustomSchedule {
            name: name.into(),
            supplier: Arc::new(supplier),
        })
    }

    fn check_base(&self) -> Result<(), ScheduleError> {
        match self {
            Self::PureBayes | Self::Decreasing(_) | Self::Constant(_) => Ok(()),
            other => Err(ScheduleError::InvalidBase(other.to_string())),
        }
    }

    /// Checks the parts of the schedule that depend on the model's size.
    pub fn check_model(&self, model: &Model) -> Result<(), ScheduleError> {
        match self {
            Self::ObservationDependent { alpha, .. } if alpha.len() != model.n_obs() => {
                Err(ScheduleError::AlphaLength {
                    got: alpha.len(),
                    expected: model.n_obs(),
                })
            }
            Self::Overreacting { base, clamp } if *clamp >= 1.0 / model.n_params() as f64 => {
                Err(ScheduleError::InvalidOverreaction {
                    base: *base,
                    clamp: *clamp,
                })
            }
            _ => Ok(()),
        }
    }

    /// The belief- and observation-independent weight of `step`, if the
    /// schedule has one. For observation-dependent schedules this is the
    /// base weight `γ_n`.
    pub fn base_weight(&self, step: u64) -> Option<f64> {
        match self {
            Self::PureBayes => Some(1.0),
            Self::Decreasing(family) => Some(family.weight(step)),
            Self::Constant(g) => Some(*g),
            Self::ObservationDependent { base, .. } | Self::GeneralizedBayes(base) => {
                base.base_weight(step)
            }
            Self::Overreacting { base, .. } => Some(base + 1.0 / step.max(1) as f64),
            Self::Custom(_) => None,
        }
    }

    /// Whether the schedule is one of the certified families (or built from
    /// them). Custom suppliers are never validated.
    pub fn is_validated(&self) -> bool {
        !matches!(self, Self::Custom(_))
    }
}

impl fmt::Display for WeightSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PureBayes => write!(f, "bayes"),
            Self::Decreasing(DecreasingFamily::Power { exponent }) => write!(f, "power:{exponent}"),
            Self::Decreasing(DecreasingFamily::LogPower { exponent }) => write!(f, "log:{exponent}"),
            Self::Constant(g) => write!(f, "constant:{g}"),
            Self::ObservationDependent { base, alpha } => {
                write!(f, "obsdep:")?;
                for (i, a) in alpha.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ":{base}")
            }
            Self::GeneralizedBayes(base) => write!(f, "generalized:{base}"),
            Self::Overreacting { base, clamp } => write!(f, "overreact:{base}:{clamp}"),
            Self::Custom(c) => write!(f, "custom:{}", c.name),
        }
    }
}

impl FromStr for WeightSchedule {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let perr = || ScheduleError::Parse(s.to_string());
        let num = |t: &str| parse_number(t).map_err(|_| perr());
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        match (head, rest) {
            ("bayes", None) => Ok(Self::PureBayes),
            ("power", Some(a)) => Self::power(num(a)?),
            ("log", Some(a)) => Self::log_power(num(a)?),
            ("constant", Some(g)) => Self::constant(num(g)?),
            ("obsdep", Some(r)) => {
                let (alpha, base) = r.split_once(':').ok_or_else(perr)?;
                let alpha = parse_list(alpha).map_err(|_| perr())?;
                Self::observation_dependent(base.parse()?, alpha)
            }
            ("generalized", Some(base)) => Self::generalized_bayes(base.parse()?),
            ("overreact", Some(r)) => {
                let (b, eps) = r.split_once(':').ok_or_else(perr)?;
                Self::overreacting(num(b)?, num(eps)?)
            }
            _ => Err(perr()),
        }
    }
}
