//! Ratio maximization `max B(x) / C(x)` by Dinkelbach's parametric method.
//!
//! Each iteration solves `F(q) = max { B(x) - q C(x) }` over the mixed-integer
//! feasible set and moves `q` to the ratio of the maximizer. With exact
//! subproblems `q` increases monotonically and the loop stops once
//! `F(q) < epsilon`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::Sense;
use crate::mip::{
    solve_mip_from, MipConfig, MipError, MipSolution, MipStatus, MixedIntegerProgram,
};
use crate::tolerance::ToleranceConfig;

pub const DEFAULT_MAX_ITER: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineForm {
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

impl AffineForm {
    pub fn new(coeffs: Vec<f64>, constant: f64) -> Self {
        Self { coeffs, constant }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0.0; n], 0.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

/// Two affine forms over a shared constraint system. The objective stored in
/// `constraints` is ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalModel {
    pub constraints: MixedIntegerProgram,
    pub benefit: AffineForm,
    pub cost: AffineForm,
}

impl FractionalModel {
    pub fn validate(&self) -> Result<(), FractionalError> {
        self.constraints.validate()?;
        let n = self.constraints.num_vars();
        for (name, form) in [("benefit", &self.benefit), ("cost", &self.cost)] {
            if form.coeffs.len() != n {
                return Err(FractionalError::Malformed(format!(
                    "{name} form has {} coefficients for {n} variables",
                    form.coeffs.len()
                )));
            }
            if !form.constant.is_finite() || form.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(FractionalError::Malformed(format!(
                    "{name} form is not finite"
                )));
            }
        }
        Ok(())
    }

    /// The constraint system with objective `B(x) - q C(x)`, maximized.
    pub fn parametric_program(&self, q: f64) -> MixedIntegerProgram {
        let mut mip = self.constraints.clone();
        mip.base.sense = Sense::Maximize;
        mip.base.objective = self
            .benefit
            .coeffs
            .iter()
            .zip(&self.cost.coeffs)
            .map(|(b, c)| b - q * c)
            .collect();
        mip.base.objective_offset = self.benefit.constant - q * self.cost.constant;
        mip
    }
}

/// `B(x) / C(x)` for a feasible point.
pub fn evaluate_ratio(
    fm: &FractionalModel,
    x: &[f64],
    tol: &ToleranceConfig,
) -> Result<f64, FractionalError> {
    if !fm.constraints.is_feasible(x, tol) {
        return Err(FractionalError::InfeasiblePoint {
            violation: if x.len() == fm.constraints.num_vars() {
                fm.constraints
                    .base
                    .max_violation(x)
                    .max(fm.constraints.max_fractionality(x))
            } else {
                f64::INFINITY
            },
        });
    }
    let c = fm.cost.eval(x);
    if c <= 0.0 {
        return Err(FractionalError::NonpositiveDenominator { value: c });
    }
    Ok(fm.benefit.eval(x) / c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioStatus {
    Converged,
    IterationLimit,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioIteration {
    pub q: f64,
    /// Subproblem value `B(x_k) - q C(x_k)`.
    pub f_value: f64,
    pub benefit: f64,
    pub cost: f64,
    pub ratio: f64,
    pub mip_status: MipStatus,
    pub mip_gap: f64,
    pub nodes: u64,
    pub lp_iterations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSolution {
    pub status: RatioStatus,
    pub x_star: Vec<f64>,
    pub q_star: f64,
    /// Best ratio over all iterates; equals `q_star` under exact subproblems.
    pub best_x: Vec<f64>,
    pub best_ratio: f64,
    pub epsilon: f64,
    pub iterations: Vec<RatioIteration>,
    pub warnings: Vec<String>,
}

impl RatioSolution {
    /// Parameters `q_0, q_1, ...` of the Newton sequence.
    pub fn q_sequence(&self) -> Vec<f64> {
        self.iterations.iter().map(|it| it.q).collect()
    }

    pub fn total_nodes(&self) -> u64 {
        self.iterations.iter().map(|it| it.nodes).sum()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FractionalError {
    #[error("malformed fractional model: {0}")]
    Malformed(String),
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("the constraint system is infeasible")]
    InfeasibleModel,
    #[error("no convergence within {} iterations (best ratio {})", .0.iterations.len(), .0.best_ratio)]
    IterationLimit(Box<RatioSolution>),
    #[error("iteration {iteration} produced a point with cost {value}; the cost form must be positive on the feasible set")]
    DenominatorViolation { iteration: usize, value: f64 },
    #[error("point is not feasible (violation {violation})")]
    InfeasiblePoint { violation: f64 },
    #[error("cost at the point is {value}, not positive")]
    NonpositiveDenominator { value: f64 },
    #[error(transparent)]
    Mip(#[from] MipError),
}

/// Maximize `B(x) / C(x)`. When `epsilon` is `None` it defaults to
/// `1e-6 * max(1, |B(x_0)|)` where `x_0` maximizes `B`.
pub fn maximize_ratio(
    fm: &FractionalModel,
    epsilon: Option<f64>,
    sub_cfg: &MipConfig,
    max_iter: usize,
) -> Result<RatioSolution, FractionalError> {
    fm.validate()?;
    if let Some(e) = epsilon {
        if e.is_nan() || e <= 0.0 {
            return Err(FractionalError::InvalidEpsilon(e));
        }
    }
    let mut q = 0.0;
    let mut eps = epsilon.unwrap_or(f64::NAN);
    let mut iterations = Vec::new();
    let mut warnings = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..max_iter {
        let mip = fm.parametric_program(q);
        let sol: MipSolution = solve_mip_from(&mip, sub_cfg, prev.as_deref())?;
        if sol.status == MipStatus::Infeasible {
            if k == 0 {
                return Err(FractionalError::InfeasibleModel);
            }
            // A feasible warm start was supplied, so this cannot happen.
            return Err(FractionalError::Malformed(
                "subproblem became infeasible after a feasible iterate".into(),
            ));
        }
        warnings.extend(sol.warnings.iter().map(|w| format!("iteration {k}: {w}")));
        let x = sol.incumbent.expect("feasible subproblem has an incumbent");
        let b = fm.benefit.eval(&x);
        let c = fm.cost.eval(&x);
        if c <= 0.0 {
            return Err(FractionalError::DenominatorViolation {
                iteration: k,
                value: c,
            });
        }
        let f_value = b - q * c;
        let ratio = b / c;
        if k == 0 && eps.is_nan() {
            eps = 1e-6 * b.abs().max(1.0);
        }
        iterations.push(RatioIteration {
            q,
            f_value,
            benefit: b,
            cost: c,
            ratio,
            mip_status: sol.status,
            mip_gap: sol.gap,
            nodes: sol.nodes_explored,
            lp_iterations: sol.lp_iterations,
        });
        if best.as_ref().is_none_or(|(r, _)| ratio > *r) {
            best = Some((ratio, x.clone()));
        }
        if f_value < eps {
            // x_k cannot beat q by more than eps / C(x_k); keep whichever of
            // x_k and x_{k-1} has the larger ratio.
            let (q_star, x_star) = match prev {
                Some(p) if ratio < q => (q, p),
                _ => (ratio, x),
            };
            let (best_ratio, best_x) = best.expect("at least one iterate");
            return Ok(RatioSolution {
                status: RatioStatus::Converged,
                x_star,
                q_star,
                best_x,
                best_ratio,
                epsilon: eps,
                iterations,
                warnings,
            });
        }
        if ratio < q {
            warnings.push(format!(
                "iteration {k}: ratio fell from {q} to {ratio}; subproblems are not solved exactly"
            ));
        }
        q = ratio;
        prev = Some(x);
    }
    let (best_ratio, best_x) = best.expect("at least one iterate");
    Err(FractionalError::IterationLimit(Box::new(RatioSolution {
        status: RatioStatus::IterationLimit,
        x_star: prev.unwrap_or_default(),
        q_star: q,
        best_x,
        best_ratio,
        epsilon: eps,
        iterations,
        warnings,
    })))
}

/// `F(q)`: optimal value of the parametric subproblem.
pub fn parametric_value(
    fm: &FractionalModel,
    q: f64,
    cfg: &MipConfig,
) -> Result<Option<f64>, FractionalError> {
    let sol = solve_mip_from(&fm.parametric_program(q), cfg, None)?;
    Ok((sol.status != MipStatus::Infeasible).then_some(sol.objective_value))
}
