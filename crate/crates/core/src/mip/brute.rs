use super::{MipError, MipSolution, MipStatus, MixedIntegerProgram};
use crate::lp::{solve_lp, LpStatus, Relation};
use crate::tolerance::ToleranceConfig;

/// Largest number of integer assignments `brute_force_solve` will consider.
pub const DEFAULT_ENUMERATION_CAP: f64 = (1u64 << 20) as f64;

const ROW_TOL: f64 = 1e-9;

struct Enumerator<'a> {
    mip: &'a MixedIntegerProgram,
    ints: Vec<usize>,
    col_rows: Vec<Vec<(usize, f64)>>,
    min_act: Vec<f64>,
    max_act: Vec<f64>,
    x: Vec<f64>,
}

impl<'a> Enumerator<'a> {
    fn new(mip: &'a MixedIntegerProgram) -> Self {
        let lp = &mip.base;
        let n = lp.num_vars;
        let mut col_rows = vec![Vec::new(); n];
        let mut min_act = vec![0.0; lp.constraints.len()];
        let mut max_act = vec![0.0; lp.constraints.len()];
        for (r, row) in lp.constraints.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                col_rows[j].push((r, a));
                let (lo, hi) = (a * lp.lower[j], a * lp.upper[j]);
                min_act[r] += lo.min(hi);
                max_act[r] += lo.max(hi);
            }
        }
        Self {
            mip,
            ints: (0..n).filter(|&j| mip.var_kind[j].is_integral()).collect(),
            col_rows,
            min_act,
            max_act,
            x: lp.lower.clone(),
        }
    }

    fn rows_possible(&self, rows: &[(usize, f64)]) -> bool {
        rows.iter().all(|&(r, _)| {
            let row = &self.mip.base.constraints[r];
            let tol = ROW_TOL * (1.0 + row.rhs.abs());
            match row.relation {
                Relation::Le => self.min_act[r] <= row.rhs + tol,
                Relation::Ge => self.max_act[r] >= row.rhs - tol,
                Relation::Eq => {
                    self.min_act[r] <= row.rhs + tol && self.max_act[r] >= row.rhs - tol
                }
            }
        })
    }

    fn fix(&mut self, j: usize, v: f64, sign: f64) {
        let lp = &self.mip.base;
        for k in 0..self.col_rows[j].len() {
            let (r, a) = self.col_rows[j][k];
            let (lo, hi) = (a * lp.lower[j], a * lp.upper[j]);
            self.min_act[r] += sign * (a * v - lo.min(hi));
            self.max_act[r] += sign * (a * v - lo.max(hi));
        }
    }

    fn run<F: FnMut(&[f64])>(&mut self, depth: usize, leaf: &mut F) {
        if depth == self.ints.len() {
            leaf(&self.x);
            return;
        }
        let j = self.ints[depth];
        let (lo, hi) = (self.mip.base.lower[j], self.mip.base.upper[j]);
        let mut v = lo;
        while v <= hi {
            self.fix(j, v, 1.0);
            if self.rows_possible(&self.col_rows[j]) {
                self.x[j] = v;
                self.run(depth + 1, leaf);
            }
            self.fix(j, v, -1.0);
            v += 1.0;
        }
        self.x[j] = lo;
    }
}

fn domain_size(mip: &MixedIntegerProgram) -> f64 {
    mip.var_kind
        .iter()
        .enumerate()
        .filter(|(_, k)| k.is_integral())
        .map(|(j, _)| mip.base.upper[j] - mip.base.lower[j] + 1.0)
        .product()
}

/// Visit every integer assignment that no row rules out by interval
/// reasoning. For pure integer programs the visited points are exactly the
/// feasible ones. Continuous variables are left at their lower bounds.
pub fn for_each_integer_point<F: FnMut(&[f64])>(
    mip: &MixedIntegerProgram,
    cap: f64,
    mut visit: F,
) -> Result<(), MipError> {
    mip.validate()?;
    let size = domain_size(mip);
    if size > cap {
        return Err(MipError::EnumerationTooLarge { size, cap });
    }
    let mut e = Enumerator::new(mip);
    e.run(0, &mut visit);
    Ok(())
}

/// Exact optimum by exhaustive enumeration of the integer variables.
pub fn brute_force_solve(mip: &MixedIntegerProgram) -> Result<MipSolution, MipError> {
    brute_force_solve_with_cap(mip, DEFAULT_ENUMERATION_CAP, &ToleranceConfig::default())
}

pub fn brute_force_solve_with_cap(
    mip: &MixedIntegerProgram,
    cap: f64,
    tol: &ToleranceConfig,
) -> Result<MipSolution, MipError> {
    let has_continuous = mip.var_kind.iter().any(|k| !k.is_integral());
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut leaves = 0u64;
    let mut lp_iterations = 0u64;
    let mut failure = None;
    for_each_integer_point(mip, cap, |x| {
        if failure.is_some() {
            return;
        }
        leaves += 1;
        let point = if has_continuous {
            let mut lp = mip.base.clone();
            for (j, k) in mip.var_kind.iter().enumerate() {
                if k.is_integral() {
                    lp.set_bounds(j, x[j], x[j]);
                }
            }
            match solve_lp(&lp, tol) {
                Ok(sol) => {
                    lp_iterations += sol.diagnostics.iterations as u64;
                    (sol.status == LpStatus::Optimal).then_some(sol.primal)
                }
                Err(e) => {
                    failure = Some(e);
                    None
                }
            }
        } else if mip.base.max_violation(x) <= tol.feasibility {
            Some(x.to_vec())
        } else {
            None
        };
        if let Some(p) = point {
            let score = mip.score(mip.base.objective_value(&p));
            if best.as_ref().is_none_or(|(b, _)| score > *b) {
                best = Some((score, p));
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let sign = mip.score(1.0);
    Ok(match best {
        Some((score, x)) => MipSolution {
            status: MipStatus::Optimal,
            incumbent: Some(x),
            objective_value: sign * score,
            bound: sign * score,
            gap: 0.0,
            nodes_explored: leaves,
            lp_iterations,
            warnings: Vec::new(),
            audit: None,
        },
        None => MipSolution {
            status: MipStatus::Infeasible,
            incumbent: None,
            objective_value: f64::NAN,
            bound: sign * f64::NEG_INFINITY,
            gap: f64::INFINITY,
            nodes_explored: leaves,
            lp_iterations,
            warnings: Vec::new(),
            audit: None,
        },
    })
}
