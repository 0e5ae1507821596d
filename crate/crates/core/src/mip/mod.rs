//! Mixed-integer programs solved by LP-based branch-and-bound.

mod branch;
mod brute;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LinearProgram, LpError, Sense};
use crate::tolerance::ToleranceConfig;

pub use branch::{solve_mip, solve_mip_from};
pub use brute::{
    brute_force_solve, brute_force_solve_with_cap, for_each_integer_point, DEFAULT_ENUMERATION_CAP,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedIntegerProgram {
    pub base: LinearProgram,
    pub var_kind: Vec<VarKind>,
}

impl MixedIntegerProgram {
    pub fn new(base: LinearProgram, var_kind: Vec<VarKind>) -> Self {
        Self { base, var_kind }
    }

    /// Every variable binary with bounds `[0, 1]`.
    pub fn all_binary(base: LinearProgram) -> Self {
        let n = base.num_vars;
        Self {
            base,
            var_kind: vec![VarKind::Binary; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.base.num_vars
    }

    pub fn sense(&self) -> Sense {
        self.base.sense
    }

    pub fn validate(&self) -> Result<(), MipError> {
        self.base.validate()?;
        if self.var_kind.len() != self.base.num_vars {
            return Err(MipError::Malformed(format!(
                "{} variable kinds for {} variables",
                self.var_kind.len(),
                self.base.num_vars
            )));
        }
        for (j, kind) in self.var_kind.iter().enumerate() {
            let (l, u) = (self.base.lower[j], self.base.upper[j]);
            match kind {
                VarKind::Continuous => {}
                VarKind::Binary => {
                    // Fixing a binary to 0 or 1 is allowed.
                    if l < 0.0 || u > 1.0 || l.fract() != 0.0 || u.fract() != 0.0 {
                        return Err(MipError::Malformed(format!(
                            "binary variable {j} has bounds [{l}, {u}]"
                        )));
                    }
                }
                VarKind::Integer => {
                    if l.fract() != 0.0 || u.fract() != 0.0 {
                        return Err(MipError::Malformed(format!(
                            "integer variable {j} has non-integral bounds [{l}, {u}]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Largest distance of an integer variable from the nearest integer.
    pub fn max_fractionality(&self, x: &[f64]) -> f64 {
        self.var_kind
            .iter()
            .zip(x)
            .filter(|(k, _)| k.is_integral())
            .map(|(_, v)| (v - v.round()).abs())
            .fold(0.0, f64::max)
    }

    /// Feasible for every row, bound and integrality requirement.
    pub fn is_feasible(&self, x: &[f64], tol: &ToleranceConfig) -> bool {
        x.len() == self.num_vars()
            && self.base.max_violation(x) <= tol.feasibility
            && self.max_fractionality(x) <= tol.integrality
    }

    /// Objective value mapped so that larger is always better.
    pub(crate) fn score(&self, value: f64) -> f64 {
        -self.base.sense.min_sign() * value
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MipStatus {
    /// Search tree exhausted.
    Optimal,
    /// Node limit reached with an incumbent.
    Feasible,
    Infeasible,
    /// Stopped once the relative gap fell to the target.
    GapLimit,
    TimeLimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneReason {
    Infeasible,
    Bound,
    Integral,
}

/// A node closed without branching, kept for audit replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrunedNode {
    pub id: u64,
    /// LP bound of the node (or of its parent when the node was pruned
    /// before its own LP was solved).
    pub bound: f64,
    pub reason: PruneReason,
    /// Bound changes from the root defining the subtree, `(var, lower, upper)`.
    pub changes: Vec<(usize, f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MipSolution {
    pub status: MipStatus,
    pub incumbent: Option<Vec<f64>>,
    /// Objective of the incumbent; NaN without one.
    pub objective_value: f64,
    /// Best proven bound on the optimum.
    pub bound: f64,
    /// `|bound - objective| / max(1, |objective|)`; infinite without an incumbent.
    pub gap: f64,
    pub nodes_explored: u64,
    pub lp_iterations: u64,
    pub warnings: Vec<String>,
    pub audit: Option<Vec<PrunedNode>>,
}

impl MipSolution {
    pub(crate) fn relative_gap(bound: f64, objective: f64) -> f64 {
        (bound - objective).abs() / objective.abs().max(1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MipConfig {
    pub gap_target: f64,
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Threads sharing the node queue; 1 gives bit-reproducible runs.
    pub workers: usize,
    pub tolerances: ToleranceConfig,
    /// Record every pruned node.
    pub audit: bool,
    /// Tighten integer bounds in a subtree using LP reduced costs.
    pub reduced_cost_fixing: bool,
}

impl Default for MipConfig {
    fn default() -> Self {
        Self {
            gap_target: 0.0,
            node_limit: None,
            time_limit: None,
            workers: 1,
            tolerances: ToleranceConfig::default(),
            audit: false,
            reduced_cost_fixing: true,
        }
    }
}

impl MipConfig {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn with_gap(gap_target: f64) -> Self {
        Self {
            gap_target,
            ..Self::default()
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MipError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("malformed mixed-integer program: {0}")]
    Malformed(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("search limit reached ({:?}) with incumbent value {}", .0.status, .0.objective_value)]
    LimitExceeded(Box<MipSolution>),
    #[error("enumeration of {size} integer points exceeds the cap of {cap}")]
    EnumerationTooLarge { size: f64, cap: f64 },
    #[error("relaxation is unbounded")]
    Unbounded,
}
