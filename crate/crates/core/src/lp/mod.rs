//! Bounded linear programs and a revised dual simplex solver.
//!
//! Every variable carries finite bounds, which lets the solver start from the
//! all-logical basis in a dual feasible state: each structural column is
//! placed at whichever bound agrees with the sign of its cost. No phase one
//! is needed, and a failed dual ratio test is a proof of infeasibility.

mod factor;
mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerance::ToleranceConfig;

pub use simplex::{BasisSnapshot, SimplexEngine};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    /// Multiplier that turns an objective of this sense into a minimization.
    pub(crate) fn min_sign(self) -> f64 {
        match self {
            Sense::Maximize => -1.0,
            Sense::Minimize => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Self {
        Self {
            coeffs,
            relation,
            rhs,
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.relation {
            Relation::Le => (act - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - act).max(0.0),
            Relation::Eq => (act - self.rhs).abs(),
        }
    }

    /// Range `[lo, hi]` allowed for the row activity.
    pub(crate) fn range(&self) -> (f64, f64) {
        match self.relation {
            Relation::Le => (f64::NEG_INFINITY, self.rhs),
            Relation::Ge => (self.rhs, f64::INFINITY),
            Relation::Eq => (self.rhs, self.rhs),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub objective_offset: f64,
    pub sense: Sense,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// A program with zero objective and every variable bounded to `[0, 1]`.
    pub fn new(num_vars: usize, sense: Sense) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            objective_offset: 0.0,
            sense,
            constraints: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![1.0; num_vars],
        }
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints
            .push(Constraint::new(coeffs, relation, rhs));
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset
            + self
                .objective
                .iter()
                .zip(x)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars;
        if self.objective.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::MalformedProgram(format!(
                "dimension mismatch: {} vars, {} costs, {} lower, {} upper bounds",
                n,
                self.objective.len(),
                self.lower.len(),
                self.upper.len()
            )));
        }
        if !self.objective_offset.is_finite() {
            return Err(LpError::MalformedProgram(
                "objective offset is not finite".into(),
            ));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if !l.is_finite() || !u.is_finite() {
                return Err(LpError::MalformedProgram(format!(
                    "variable {j} has a non-finite bound [{l}, {u}]"
                )));
            }
            if l > u {
                return Err(LpError::MalformedProgram(format!(
                    "variable {j} has lower bound {l} above upper bound {u}"
                )));
            }
            if !self.objective[j].is_finite() {
                return Err(LpError::MalformedProgram(format!(
                    "objective coefficient of variable {j} is not finite"
                )));
            }
        }
        for (r, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::MalformedProgram(format!(
                    "row {r} has a non-finite right-hand side"
                )));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::MalformedProgram(format!(
                        "row {r} references variable {j} but the program has {n}"
                    )));
                }
                if !a.is_finite() {
                    return Err(LpError::MalformedProgram(format!(
                        "row {r} has a non-finite coefficient on variable {j}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest violation of any row or variable bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(x))
            .fold(0.0, f64::max);
        let bounds = (0..self.num_vars)
            .map(|j| (self.lower[j] - x[j]).max(x[j] - self.upper[j]).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Objective of the Lagrangian dual at the row multipliers `dual`.
    ///
    /// Multipliers are shadow prices in the program's own sense. The value is
    /// a valid bound on the optimum for any multipliers; it is `-inf`/`+inf`
    /// when a multiplier has the wrong sign for an unbounded side of a row.
    pub fn dual_objective(&self, dual: &[f64]) -> f64 {
        // Work in minimization form: min s*c.x with s = +/-1.
        let s = self.sense.min_sign();
        let mut reduced: Vec<f64> = self.objective.iter().map(|c| s * c).collect();
        let mut value = 0.0;
        for (row, &y) in self.constraints.iter().zip(dual) {
            let y = s * y;
            for &(j, a) in &row.coeffs {
                reduced[j] -= y * a;
            }
            let (lo, hi) = row.range();
            value += if y > 1e-12 {
                y * lo
            } else if y < -1e-12 {
                y * hi
            } else {
                0.0
            };
        }
        for j in 0..self.num_vars {
            let d = reduced[j];
            value += if d > 0.0 {
                d * self.lower[j]
            } else {
                d * self.upper[j]
            };
        }
        if value.is_nan() {
            value = f64::NEG_INFINITY;
        }
        s * value + self.objective_offset
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LpDiagnostics {
    pub iterations: usize,
    pub bland_iterations: usize,
    pub refactorizations: usize,
    /// Row multipliers proving infeasibility: no point inside the variable
    /// bounds can make `sum_i farkas[i] * activity_i` land in the range the
    /// rows allow.
    pub farkas: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective_value: f64,
    pub dual: Option<Vec<f64>>,
    pub diagnostics: LpDiagnostics,
}

impl LpSolution {
    /// Relative primal/dual objective mismatch, `|p - d| / (1 + |p|)`.
    pub fn duality_gap(&self, lp: &LinearProgram) -> f64 {
        match &self.dual {
            Some(y) => {
                let p = lp.objective_value(&self.primal);
                let d = lp.dual_objective(y);
                (p - d).abs() / (1.0 + p.abs())
            }
            None => f64::INFINITY,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed program: {0}")]
    MalformedProgram(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
}

/// Solve `lp` from scratch.
pub fn solve_lp(lp: &LinearProgram, tol: &ToleranceConfig) -> Result<LpSolution, LpError> {
    let mut engine = SimplexEngine::new(lp, *tol)?;
    let status = engine.solve()?;
    Ok(engine.solution(status))
}

/// Check that `farkas` really certifies infeasibility of `lp`: the combined
/// row `sum_i y_i a_i` cannot reach the combined range over the variable box.
pub fn verify_farkas(lp: &LinearProgram, farkas: &[f64], tol: f64) -> bool {
    let mut combined = vec![0.0; lp.num_vars];
    let (mut need_lo, mut need_hi) = (0.0, 0.0);
    for (row, &y) in lp.constraints.iter().zip(farkas) {
        if y == 0.0 {
            continue;
        }
        for &(j, a) in &row.coeffs {
            combined[j] += y * a;
        }
        let (lo, hi) = row.range();
        if y > 0.0 {
            need_lo += y * lo;
            need_hi += y * hi;
        } else {
            need_lo += y * hi;
            need_hi += y * lo;
        }
    }
    let (mut act_lo, mut act_hi) = (0.0, 0.0);
    for j in 0..lp.num_vars {
        let a = combined[j];
        if a >= 0.0 {
            act_lo += a * lp.lower[j];
            act_hi += a * lp.upper[j];
        } else {
            act_lo += a * lp.upper[j];
            act_hi += a * lp.lower[j];
        }
    }
    act_hi < need_lo - tol || act_lo > need_hi + tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_binding_row() {
        let mut lp = LinearProgram::new(1, Sense::Maximize);
        lp.objective[0] = 1.0;
        lp.set_bounds(0, 0.0, 10.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 5.0);
        let sol = solve_lp(&lp, &ToleranceConfig::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.primal[0] - 5.0).abs() < 1e-9);
        assert!((sol.objective_value - 5.0).abs() < 1e-9);
        assert!(sol.duality_gap(&lp) < 1e-9);
    }

    #[test]
    fn symmetric_pair() {
        let mut lp = LinearProgram::new(2, Sense::Maximize);
        lp.objective = vec![1.0, 1.0];
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Le, 1.0);
        lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Le, 0.0);
        let sol = solve_lp(&lp, &ToleranceConfig::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value - 1.0).abs() < 1e-9);
        assert!(lp.max_violation(&sol.primal) < 1e-9);
    }

    #[test]
    fn rejects_bad_index_and_bounds() {
        let mut lp = LinearProgram::new(1, Sense::Minimize);
        lp.add_constraint(vec![(3, 1.0)], Relation::Le, 1.0);
        assert!(matches!(
            solve_lp(&lp, &ToleranceConfig::default()),
            Err(LpError::MalformedProgram(_))
        ));
        let mut lp = LinearProgram::new(1, Sense::Minimize);
        lp.set_bounds(0, 2.0, 1.0);
        assert!(lp.validate().is_err());
        lp.set_bounds(0, 0.0, f64::INFINITY);
        assert!(lp.validate().is_err());
    }

    #[test]
    fn infeasible_has_farkas_proof() {
        let mut lp = LinearProgram::new(2, Sense::Maximize);
        lp.objective = vec![1.0, 2.0];
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 3.0);
        let sol = solve_lp(&lp, &ToleranceConfig::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
        let farkas = sol.diagnostics.farkas.as_ref().unwrap();
        assert!(verify_farkas(&lp, farkas, 1e-9));
    }

    #[test]
    fn equality_rows_and_negative_lower_bounds() {
        // min x0 - x1 with x0 + x1 = 1, x0 in [-2, 2], x1 in [-1, 3]
        let mut lp = LinearProgram::new(2, Sense::Minimize);
        lp.objective = vec![1.0, -1.0];
        lp.set_bounds(0, -2.0, 2.0);
        lp.set_bounds(1, -1.0, 3.0);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        let sol = solve_lp(&lp, &ToleranceConfig::default()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value - (-5.0)).abs() < 1e-9);
        assert!(sol.duality_gap(&lp) < 1e-9);
    }
}
