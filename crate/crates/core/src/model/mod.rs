//! The shelter capacity-expansion program: variables, constraints and the
//! benefit and cost forms built from an [`Instance`].

mod build;
mod decode;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fractional::FractionalModel;
use crate::instance::{Instance, InstanceError};
use crate::mip::MixedIntegerProgram;

pub use build::build_model;
pub use decode::{decode, encode, Assignment, AssignmentPlan, Expansion, ProviderShare};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveMode {
    BenefitMax,
    CostMin,
    ProfitMax,
    RatioMax,
}

impl ObjectiveMode {
    pub const ALL: [ObjectiveMode; 4] = [
        ObjectiveMode::BenefitMax,
        ObjectiveMode::CostMin,
        ObjectiveMode::ProfitMax,
        ObjectiveMode::RatioMax,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ObjectiveMode::BenefitMax => "benefit_max",
            ObjectiveMode::CostMin => "cost_min",
            ObjectiveMode::ProfitMax => "profit_max",
            ObjectiveMode::RatioMax => "ratio_max",
        }
    }
}

impl std::fmt::Display for ObjectiveMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the per-borough minimum opening counts are applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaScope {
    /// Each borough's minimum bounds the number of candidates opened anywhere.
    #[default]
    Citywide,
    /// Each borough's minimum bounds the candidates opened inside it.
    PerBorough,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOptions {
    pub mode: ObjectiveMode,
    /// Minimum openings, one entry per borough.
    pub lambda: Vec<u32>,
    #[serde(default)]
    pub scope: LambdaScope,
    /// Forbid openings and expansions.
    #[serde(default)]
    pub status_quo_only: bool,
}

impl ModelOptions {
    pub fn new(mode: ObjectiveMode, lambda: Vec<u32>) -> Self {
        Self {
            mode,
            lambda,
            scope: LambdaScope::Citywide,
            status_quo_only: false,
        }
    }

    /// The same minimum for every borough.
    pub fn uniform(instance: &Instance, mode: ObjectiveMode, lambda: u32) -> Self {
        Self::new(mode, vec![lambda; instance.boroughs.len()])
    }

    pub fn status_quo(instance: &Instance, mode: ObjectiveMode) -> Self {
        Self {
            status_quo_only: true,
            ..Self::uniform(instance, mode, 0)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    /// Assignment of a youth to a shelter for a service in one period.
    X,
    /// Opening of a candidate shelter.
    Nu,
    /// Youth ever placed at a candidate shelter.
    Pi,
    /// Share of a youth's service provided by a shelter.
    U,
    /// Expansion units of a service at a shelter in one period.
    E,
}

/// Column key. Indices refer to positions in the instance vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VariableKey {
    pub kind: VariableKind,
    pub youth: Option<usize>,
    pub shelter: Option<usize>,
    pub service: Option<usize>,
    pub time: Option<usize>,
}

impl VariableKey {
    pub fn x(y: usize, s: usize, i: usize, t: usize) -> Self {
        Self {
            kind: VariableKind::X,
            youth: Some(y),
            shelter: Some(s),
            service: Some(i),
            time: Some(t),
        }
    }

    pub fn nu(s: usize) -> Self {
        Self {
            kind: VariableKind::Nu,
            youth: None,
            shelter: Some(s),
            service: None,
            time: None,
        }
    }

    pub fn pi(y: usize, s: usize) -> Self {
        Self {
            kind: VariableKind::Pi,
            youth: Some(y),
            shelter: Some(s),
            service: None,
            time: None,
        }
    }

    pub fn u(y: usize, s: usize, i: usize) -> Self {
        Self {
            kind: VariableKind::U,
            youth: Some(y),
            shelter: Some(s),
            service: Some(i),
            time: None,
        }
    }

    pub fn e(s: usize, i: usize, t: usize) -> Self {
        Self {
            kind: VariableKind::E,
            youth: None,
            shelter: Some(s),
            service: Some(i),
            time: Some(t),
        }
    }
}

/// Bijection between created keys and columns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VariableIndex {
    keys: Vec<VariableKey>,
    lookup: HashMap<VariableKey, usize>,
}

impl VariableIndex {
    pub(crate) fn push(&mut self, key: VariableKey) -> usize {
        let col = self.keys.len();
        let prev = self.lookup.insert(key, col);
        debug_assert!(prev.is_none(), "duplicate column {key:?}");
        self.keys.push(key);
        col
    }

    pub fn get(&self, key: &VariableKey) -> Option<usize> {
        self.lookup.get(key).copied()
    }

    pub fn key(&self, col: usize) -> &VariableKey {
        &self.keys[col]
    }

    pub fn keys(&self) -> &[VariableKey] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn count(&self, kind: VariableKind) -> usize {
        self.keys.iter().filter(|k| k.kind == kind).count()
    }
}

/// Structural counts plus the size bounds the model must respect.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelCounts {
    pub num_vars: usize,
    pub num_binaries: usize,
    pub num_integers: usize,
    pub num_constraints: usize,
    pub num_action_constraints: usize,
    pub num_x: usize,
    /// `|Y||S||I||T|`: assignment columns without pruning.
    pub unpruned_x: usize,
    pub max_vars: usize,
    pub max_binaries: usize,
    pub max_action_constraints: usize,
    /// Rows per constraint family, in creation order.
    pub families: Vec<(String, usize)>,
}

impl ModelCounts {
    pub fn within_bounds(&self) -> bool {
        self.num_vars <= self.max_vars
            && self.num_binaries <= self.max_binaries
            && self.num_action_constraints <= self.max_action_constraints
    }

    pub fn family(&self, name: &str) -> usize {
        self.families
            .iter()
            .find(|(n, _)| n == name)
            .map_or(0, |(_, c)| *c)
    }
}

/// One requested service of one youth, with the periods it may occupy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RequestWindow {
    pub youth: usize,
    pub service: usize,
    pub earliest: usize,
    pub latest: usize,
    /// Last usable period after clipping to the horizon.
    pub last: usize,
    pub frequency: usize,
    /// Occurrence windows of a periodic service.
    pub occurrences: Option<Vec<Vec<usize>>>,
}

impl RequestWindow {
    /// Periods in which an assignment column may exist.
    pub fn periods(&self) -> Vec<usize> {
        match &self.occurrences {
            Some(w) => {
                let mut p: Vec<usize> = w.iter().flatten().copied().collect();
                p.sort_unstable();
                p.dedup();
                p
            }
            None => (self.earliest..=self.last).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuiltModel {
    pub options: ModelOptions,
    /// Constraint system with the benefit and cost forms.
    pub fractional: FractionalModel,
    /// Constraint system carrying the objective of the selected mode. For
    /// ratio mode the objective is the benefit form.
    pub mip: MixedIntegerProgram,
    pub index: VariableIndex,
    pub counts: ModelCounts,
    pub requests: Vec<RequestWindow>,
    /// Adjustments made while building, such as windows clipped at the horizon.
    pub notes: Vec<String>,
}

impl BuiltModel {
    pub fn num_vars(&self) -> usize {
        self.index.len()
    }

    pub fn benefit(&self, x: &[f64]) -> f64 {
        self.fractional.benefit.eval(x)
    }

    pub fn cost(&self, x: &[f64]) -> f64 {
        self.fractional.cost.eval(x)
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("youth {youth} service {service}: {reason}")]
    InfeasibleWindow {
        youth: String,
        service: String,
        reason: String,
    },
    #[error("missing parameter: {0}")]
    MissingParameter(String),
    #[error("lambda requires {required} openings for {borough} but only {available} candidates can open")]
    InfeasibleLambda {
        borough: String,
        required: u32,
        available: usize,
    },
    #[error(
        "ratio maximization needs a positive lambda outside the status quo: without a required action the \
         marginal cost of doing nothing is zero and the ratio is degenerate"
    )]
    ZeroAction,
    #[error("expected {expected} values, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("period {period} lies outside the service window of youth {youth} for {service}")]
    OutOfWindow {
        youth: String,
        service: String,
        period: usize,
    },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// Per-provision benefit `(M + P) / ((1 + t - a) f)`.
pub fn youth_benefit(
    instance: &Instance,
    youth: &str,
    period: usize,
    service: &str,
) -> Result<f64, ModelError> {
    let y = instance
        .youth
        .iter()
        .find(|y| y.id == youth)
        .ok_or_else(|| ModelError::MissingParameter(format!("unknown youth {youth}")))?;
    let r = y
        .requests
        .iter()
        .find(|r| r.service == service)
        .ok_or_else(|| {
            ModelError::MissingParameter(format!("youth {youth} does not request {service}"))
        })?;
    if period < r.earliest || period > r.last_period() {
        return Err(ModelError::OutOfWindow {
            youth: youth.to_string(),
            service: service.to_string(),
            period,
        });
    }
    Ok(benefit_value(instance, r.earliest, r.frequency, period))
}

pub(crate) fn benefit_value(
    instance: &Instance,
    earliest: usize,
    frequency: usize,
    period: usize,
) -> f64 {
    instance.benefit.youth_value() / ((1 + period - earliest) as f64 * frequency as f64)
}
