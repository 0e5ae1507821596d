use super::factor::Factor;
use super::{LinearProgram, LpDiagnostics, LpError, LpSolution, LpStatus};
use crate::tolerance::ToleranceConfig;

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
}

/// Basis description that can be restored into an engine for the same
/// program (possibly with different variable bounds).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisSnapshot {
    head: Vec<usize>,
    at_upper: Vec<bool>,
}

/// Revised bounded simplex over the row-activity form `A x - r = 0`,
/// where each row activity `r_i` is a logical variable bounded by the
/// row's relation.
///
/// The engine keeps its basis between calls so callers can change bounds
/// or costs and resolve warm.
#[derive(Clone, Debug)]
pub struct SimplexEngine {
    n: usize,
    m: usize,
    // Column-wise structural matrix followed by one unit column per row.
    col_start: Vec<usize>,
    col_entries: Vec<(usize, f64)>,
    logical_entries: Vec<(usize, f64)>,
    // Row-wise structural matrix for pricing.
    row_start: Vec<usize>,
    row_entries: Vec<(usize, f64)>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    shifted: Vec<f64>,
    has_shift: bool,
    user_cost: Vec<f64>,
    cost_scale: f64,
    sense_sign: f64,
    offset: f64,
    status: Vec<VarStatus>,
    head: Vec<usize>,
    pos: Vec<usize>,
    x: Vec<f64>,
    d: Vec<f64>,
    factor: Factor,
    factor_valid: bool,
    dirty_primal: bool,
    dirty_dual: bool,
    tol: ToleranceConfig,
    iterations: usize,
    bland_iterations: usize,
    refactorizations: usize,
    farkas: Option<Vec<f64>>,
    // Scratch buffers.
    rho: Vec<f64>,
    alpha: Vec<f64>,
    touched: Vec<usize>,
    work_rows: Vec<f64>,
    work_pos: Vec<f64>,
}

impl SimplexEngine {
    pub fn new(lp: &LinearProgram, tol: ToleranceConfig) -> Result<Self, LpError> {
        lp.validate()?;
        let n = lp.num_vars;
        let m = lp.constraints.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        for (i, row) in lp.constraints.iter().enumerate() {
            // Merge duplicate entries.
            let mut entries = row.coeffs.clone();
            entries.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
            for (j, a) in entries {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += a,
                    _ => merged.push((j, a)),
                }
            }
            for (j, a) in merged {
                if a != 0.0 {
                    cols[j].push((i, a));
                    rows[i].push((j, a));
                }
            }
        }
        let mut col_start = Vec::with_capacity(n + 1);
        let mut col_entries = Vec::new();
        col_start.push(0);
        for c in cols {
            col_entries.extend(c);
            col_start.push(col_entries.len());
        }
        let mut row_start = Vec::with_capacity(m + 1);
        let mut row_entries = Vec::new();
        row_start.push(0);
        for r in rows {
            row_entries.extend(r);
            row_start.push(row_entries.len());
        }
        let logical_entries = (0..m).map(|i| (i, -1.0)).collect();

        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        for row in &lp.constraints {
            let (lo, hi) = row.range();
            lower.push(lo);
            upper.push(hi);
        }
        let mut engine = SimplexEngine {
            n,
            m,
            col_start,
            col_entries,
            logical_entries,
            row_start,
            row_entries,
            lower,
            upper,
            cost: vec![0.0; n + m],
            shifted: vec![0.0; n + m],
            has_shift: false,
            user_cost: lp.objective.clone(),
            cost_scale: 1.0,
            sense_sign: lp.sense.min_sign(),
            offset: lp.objective_offset,
            status: vec![VarStatus::AtLower; n + m],
            head: (n..n + m).collect(),
            pos: vec![usize::MAX; n + m],
            x: vec![0.0; n + m],
            d: vec![0.0; n + m],
            factor: Factor::default(),
            factor_valid: false,
            dirty_primal: true,
            dirty_dual: true,
            tol,
            iterations: 0,
            bland_iterations: 0,
            refactorizations: 0,
            farkas: None,
            rho: vec![0.0; m],
            alpha: vec![0.0; n + m],
            touched: Vec::new(),
            work_rows: vec![0.0; m],
            work_pos: vec![0.0; m],
        };
        for (p, &j) in engine.head.iter().enumerate() {
            engine.pos[j] = p;
            engine.status[j] = VarStatus::Basic;
        }
        engine.install_costs();
        // Place structurals at the bound favoured by their cost.
        for j in 0..n {
            engine.status[j] = if engine.cost[j] >= 0.0 {
                VarStatus::AtLower
            } else {
                VarStatus::AtUpper
            };
        }
        Ok(engine)
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    fn install_costs(&mut self) {
        let scale = self
            .user_cost
            .iter()
            .fold(0.0f64, |acc, c| acc.max(c.abs()));
        self.cost_scale = if scale > 0.0 { scale } else { 1.0 };
        for j in 0..self.n {
            self.cost[j] = self.sense_sign * self.user_cost[j] / self.cost_scale;
        }
        for j in self.n..self.n + self.m {
            self.cost[j] = 0.0;
        }
        self.shifted.iter_mut().for_each(|s| *s = 0.0);
        self.has_shift = false;
        self.dirty_dual = true;
    }

    /// Replace the objective coefficients (same sense as the original program).
    pub fn set_objective(&mut self, objective: &[f64], offset: f64) {
        assert_eq!(objective.len(), self.n);
        self.user_cost = objective.to_vec();
        self.offset = offset;
        self.install_costs();
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    /// Change the bounds of structural variable `j`.
    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        debug_assert!(j < self.n);
        self.lower[j] = lower;
        self.upper[j] = upper;
        // A variable that was fixed may sit at the wrong bound for its
        // reduced cost once it is free again.
        if self.status[j] != VarStatus::Basic && !self.dirty_dual {
            if self.d[j] < -DUAL_TOL {
                self.status[j] = VarStatus::AtUpper;
            } else if self.d[j] > DUAL_TOL {
                self.status[j] = VarStatus::AtLower;
            }
        }
        self.dirty_primal = true;
    }

    pub fn snapshot(&self) -> BasisSnapshot {
        BasisSnapshot {
            head: self.head.clone(),
            at_upper: self
                .status
                .iter()
                .map(|s| *s == VarStatus::AtUpper)
                .collect(),
        }
    }

    pub fn restore(&mut self, snap: &BasisSnapshot) {
        if snap.head == self.head && self.factor_valid {
            for j in 0..self.n + self.m {
                if self.status[j] != VarStatus::Basic {
                    self.status[j] = if snap.at_upper[j] {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                }
            }
        } else {
            self.head.clone_from(&snap.head);
            self.pos.iter_mut().for_each(|p| *p = usize::MAX);
            for j in 0..self.n + self.m {
                self.status[j] = if snap.at_upper[j] {
                    VarStatus::AtUpper
                } else {
                    VarStatus::AtLower
                };
            }
            for (p, &j) in self.head.iter().enumerate() {
                self.pos[j] = p;
                self.status[j] = VarStatus::Basic;
            }
            self.factor_valid = false;
        }
        self.dirty_primal = true;
        self.dirty_dual = true;
    }

    fn column(&self, j: usize) -> &[(usize, f64)] {
        if j < self.n {
            &self.col_entries[self.col_start[j]..self.col_start[j + 1]]
        } else {
            let i = j - self.n;
            &self.logical_entries[i..i + 1]
        }
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        for _attempt in 0..=self.m {
            let result = {
                let head = &self.head;
                let this = &*self;
                Factor::new(self.m, |p| this.column(head[p]))
            };
            self.refactorizations += 1;
            match result {
                Ok(f) => {
                    self.factor = f;
                    self.factor_valid = true;
                    return Ok(());
                }
                Err(sing) => {
                    // Swap the logicals of uncovered rows into the failed slots.
                    for (&p, &r) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.head[p];
                        let logical = self.n + r;
                        if self.status[logical] == VarStatus::Basic {
                            return Err(LpError::NumericalBreakdown(
                                "basis repair found a logical already basic".into(),
                            ));
                        }
                        self.status[out] = self.nearest_bound_status(out);
                        self.pos[out] = usize::MAX;
                        self.head[p] = logical;
                        self.pos[logical] = p;
                        self.status[logical] = VarStatus::Basic;
                    }
                    self.dirty_primal = true;
                    self.dirty_dual = true;
                }
            }
        }
        Err(LpError::NumericalBreakdown(
            "basis could not be repaired".into(),
        ))
    }

    fn nearest_bound_status(&self, j: usize) -> VarStatus {
        let (l, u) = (self.lower[j], self.upper[j]);
        if !l.is_finite() {
            VarStatus::AtUpper
        } else if !u.is_finite() || (self.x[j] - l).abs() <= (u - self.x[j]).abs() {
            VarStatus::AtLower
        } else {
            VarStatus::AtUpper
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.status[j] {
            VarStatus::AtUpper => self.upper[j],
            _ => self.lower[j],
        }
    }

    fn recompute_primal(&mut self) {
        let mut rhs = std::mem::take(&mut self.work_rows);
        rhs.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n + self.m {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let v = self.nonbasic_value(j);
            self.x[j] = v;
            if v != 0.0 {
                for &(i, a) in self.column(j) {
                    rhs[i] -= a * v;
                }
            }
        }
        let mut out = std::mem::take(&mut self.work_pos);
        self.factor.ftran(&mut rhs, &mut out);
        for p in 0..self.m {
            self.x[self.head[p]] = out[p];
        }
        self.work_rows = rhs;
        self.work_pos = out;
        self.dirty_primal = false;
    }

    fn effective_cost(&self, j: usize) -> f64 {
        self.cost[j] + self.shifted[j]
    }

    fn recompute_dual(&mut self) {
        let mut cb = std::mem::take(&mut self.work_pos);
        for p in 0..self.m {
            cb[p] = self.effective_cost(self.head[p]);
        }
        let mut y = std::mem::take(&mut self.rho);
        self.factor.btran(&mut cb, &mut y);
        for j in 0..self.n + self.m {
            if self.status[j] == VarStatus::Basic {
                self.d[j] = 0.0;
                continue;
            }
            let mut dj = self.effective_cost(j);
            for &(i, a) in self.column(j) {
                dj -= y[i] * a;
            }
            self.d[j] = dj;
        }
        self.rho = y;
        self.work_pos = cb;
        self.dirty_dual = false;
    }

    /// Flip boxed nonbasics to their dual feasible bound; shift the cost of
    /// any other dual infeasible nonbasic.
    fn make_dual_feasible(&mut self) {
        for j in 0..self.n + self.m {
            let dj = self.d[j];
            match self.status[j] {
                VarStatus::Basic => {}
                VarStatus::AtLower if dj < -DUAL_TOL => {
                    if self.upper[j].is_finite() {
                        self.status[j] = VarStatus::AtUpper;
                        self.dirty_primal = true;
                    } else {
                        self.shifted[j] -= dj;
                        self.d[j] = 0.0;
                        self.has_shift = true;
                    }
                }
                VarStatus::AtUpper if dj > DUAL_TOL => {
                    if self.lower[j].is_finite() {
                        self.status[j] = VarStatus::AtLower;
                        self.dirty_primal = true;
                    } else {
                        self.shifted[j] -= dj;
                        self.d[j] = 0.0;
                        self.has_shift = true;
                    }
                }
                _ => {}
            }
        }
    }

    fn refresh(&mut self) -> Result<(), LpError> {
        self.refactor()?;
        self.recompute_dual();
        self.make_dual_feasible();
        self.recompute_primal();
        Ok(())
    }

    /// Row `p` of `B^-1 [A | -I]` for all nonbasic columns, into `alpha`.
    fn compute_pivot_row(&mut self, p: usize) {
        let mut e = std::mem::take(&mut self.work_pos);
        e.iter_mut().for_each(|v| *v = 0.0);
        e[p] = 1.0;
        let mut rho = std::mem::take(&mut self.rho);
        self.factor.btran(&mut e, &mut rho);
        self.work_pos = e;
        for &j in &self.touched {
            self.alpha[j] = 0.0;
        }
        self.touched.clear();
        for i in 0..self.m {
            let r = rho[i];
            if r == 0.0 || r.abs() < 1e-14 {
                continue;
            }
            for &(j, a) in &self.row_entries[self.row_start[i]..self.row_start[i + 1]] {
                if self.alpha[j] == 0.0 {
                    self.touched.push(j);
                }
                self.alpha[j] += r * a;
                if self.alpha[j] == 0.0 {
                    // keep it touched; a later zero test is harmless
                    self.alpha[j] = f64::MIN_POSITIVE;
                }
            }
            let lj = self.n + i;
            self.alpha[lj] = -r;
            self.touched.push(lj);
        }
        self.rho = rho;
    }

    fn ftran_column(&mut self, j: usize, out: &mut Vec<f64>) {
        let mut rhs = std::mem::take(&mut self.work_rows);
        rhs.iter_mut().for_each(|v| *v = 0.0);
        for &(i, a) in self.column(j) {
            rhs[i] = a;
        }
        out.resize(self.m, 0.0);
        self.factor.ftran(&mut rhs, out);
        self.work_rows = rhs;
    }

    fn basis_change(&mut self, p: usize, entering: usize, leaving_status: VarStatus, w: &[f64]) {
        let leaving = self.head[p];
        self.status[leaving] = leaving_status;
        self.pos[leaving] = usize::MAX;
        self.head[p] = entering;
        self.pos[entering] = p;
        self.status[entering] = VarStatus::Basic;
        self.d[entering] = 0.0;
        self.factor.update(p, w);
    }

    /// Solve from the current basis.
    pub fn solve(&mut self) -> Result<LpStatus, LpError> {
        self.farkas = None;
        if !self.factor_valid {
            self.refactor()?;
            self.dirty_dual = true;
            self.dirty_primal = true;
        }
        if self.dirty_dual {
            self.recompute_dual();
            self.make_dual_feasible();
        }
        if self.dirty_primal {
            self.recompute_primal();
        }
        let status = self.dual_phase()?;
        if status != LpStatus::Optimal {
            return Ok(status);
        }
        if self.has_shift {
            self.shifted.iter_mut().for_each(|s| *s = 0.0);
            self.has_shift = false;
            self.recompute_dual();
            return self.primal_phase();
        }
        Ok(status)
    }

    fn dual_phase(&mut self) -> Result<LpStatus, LpError> {
        let mut degenerate_run = 0usize;
        let mut fresh = false;
        let mut w = vec![0.0; self.m];
        loop {
            if self.iterations >= self.tol.max_iterations {
                return Err(LpError::NumericalBreakdown(
                    "simplex iteration limit reached".into(),
                ));
            }
            let bland = degenerate_run >= self.tol.bland_after;
            // Leaving variable.
            let mut leave: Option<(usize, f64)> = None;
            for p in 0..self.m {
                let j = self.head[p];
                let v = self.x[j];
                let infeas = if v < self.lower[j] - PRIMAL_TOL {
                    self.lower[j] - v
                } else if v > self.upper[j] + PRIMAL_TOL {
                    v - self.upper[j]
                } else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some((bp, bi)) => {
                        if bland {
                            j < self.head[bp]
                        } else {
                            infeas > bi
                        }
                    }
                };
                if better {
                    leave = Some((p, infeas));
                }
            }
            let Some((p, _)) = leave else {
                if fresh {
                    return Ok(LpStatus::Optimal);
                }
                self.refresh()?;
                fresh = true;
                continue;
            };
            let leaving = self.head[p];
            let xp = self.x[leaving];
            let (target, dir, to_status) = if xp < self.lower[leaving] {
                (self.lower[leaving], 1.0, VarStatus::AtLower)
            } else {
                (self.upper[leaving], -1.0, VarStatus::AtUpper)
            };
            self.compute_pivot_row(p);

            // Dual ratio test (Harris two-pass, Bland's rule when cycling).
            let piv_tol = self.tol.pivot;
            let mut theta_max = f64::INFINITY;
            for &j in &self.touched {
                let a = self.alpha[j];
                if self.status[j] == VarStatus::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let s = if self.status[j] == VarStatus::AtLower {
                    1.0
                } else {
                    -1.0
                };
                if a * s * dir < -piv_tol {
                    let dj = (self.d[j] * s).max(0.0);
                    let bound = if bland {
                        dj / a.abs()
                    } else {
                        (dj + DUAL_TOL) / a.abs()
                    };
                    theta_max = theta_max.min(bound);
                }
            }
            if theta_max == f64::INFINITY {
                if !fresh {
                    self.refresh()?;
                    fresh = true;
                    continue;
                }
                let mut y = std::mem::take(&mut self.work_pos);
                y.iter_mut().for_each(|v| *v = 0.0);
                y[p] = 1.0;
                let mut rho = vec![0.0; self.m];
                self.factor.btran(&mut y, &mut rho);
                self.work_pos = y;
                self.farkas = Some(rho);
                return Ok(LpStatus::Infeasible);
            }
            let mut enter: Option<(usize, f64)> = None;
            for &j in &self.touched {
                let a = self.alpha[j];
                if self.status[j] == VarStatus::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let s = if self.status[j] == VarStatus::AtLower {
                    1.0
                } else {
                    -1.0
                };
                if a * s * dir < -piv_tol {
                    let ratio = (self.d[j] * s).max(0.0) / a.abs();
                    if ratio <= theta_max {
                        let better = match enter {
                            None => true,
                            Some((bj, ba)) => {
                                if bland {
                                    j < bj
                                } else {
                                    a.abs() > ba || (a.abs() == ba && j < bj)
                                }
                            }
                        };
                        if better {
                            enter = Some((j, a.abs()));
                        }
                    }
                }
            }
            let (q, _) = enter.expect("ratio test candidate");
            let alpha_q = self.alpha[q];
            self.ftran_column(q, &mut w);
            if (w[p] - alpha_q).abs() > 1e-7 * (1.0 + alpha_q.abs()) {
                if fresh {
                    return Err(LpError::NumericalBreakdown(format!(
                        "pivot mismatch after refactorization ({} vs {})",
                        w[p], alpha_q
                    )));
                }
                self.refresh()?;
                fresh = true;
                continue;
            }
            fresh = false;
            self.iterations += 1;
            if bland {
                self.bland_iterations += 1;
            }
            let theta_d = self.d[q] / alpha_q;
            if theta_d.abs() <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            for &j in &self.touched {
                if self.status[j] != VarStatus::Basic {
                    self.d[j] -= theta_d * self.alpha[j];
                }
            }
            let delta = (xp - target) / alpha_q;
            for i in 0..self.m {
                if w[i] != 0.0 {
                    let b = self.head[i];
                    self.x[b] -= delta * w[i];
                }
            }
            self.x[q] += delta;
            self.x[leaving] = target;
            self.basis_change(p, q, to_status, &w);
            self.d[leaving] = -theta_d;
            if self.factor.num_updates() >= self.tol.refactor_interval {
                self.refresh()?;
            }
        }
    }

    /// Primal simplex from a primal feasible basis; used after cost shifts
    /// are removed.
    fn primal_phase(&mut self) -> Result<LpStatus, LpError> {
        let mut degenerate_run = 0usize;
        let mut fresh = false;
        let mut w = vec![0.0; self.m];
        loop {
            if self.iterations >= self.tol.max_iterations {
                return Err(LpError::NumericalBreakdown(
                    "simplex iteration limit reached".into(),
                ));
            }
            let bland = degenerate_run >= self.tol.bland_after;
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.n + self.m {
                let dj = self.d[j];
                let score = match self.status[j] {
                    VarStatus::Basic => continue,
                    _ if self.lower[j] == self.upper[j] => continue,
                    VarStatus::AtLower if dj < -DUAL_TOL => -dj,
                    VarStatus::AtUpper if dj > DUAL_TOL => dj,
                    _ => continue,
                };
                let better = match enter {
                    None => true,
                    Some((_, bs)) => !bland && score > bs,
                };
                if better {
                    enter = Some((j, score));
                }
            }
            let Some((q, _)) = enter else {
                if fresh {
                    // Drift can leave the basis slightly infeasible; let the
                    // dual phase clean it up.
                    return self.dual_phase();
                }
                self.refactor()?;
                self.recompute_dual();
                self.recompute_primal();
                fresh = true;
                continue;
            };
            let s = if self.status[q] == VarStatus::AtLower {
                1.0
            } else {
                -1.0
            };
            self.ftran_column(q, &mut w);
            // Ratio test: basic x_b moves at rate -s*w_i per unit step.
            let mut t_best = self.upper[q] - self.lower[q];
            let mut leave: Option<(usize, VarStatus, f64)> = None;
            for i in 0..self.m {
                let wi = w[i];
                if wi.abs() <= self.tol.pivot {
                    continue;
                }
                let b = self.head[i];
                let rate = -s * wi;
                let (t, st) = if rate < 0.0 {
                    if !self.lower[b].is_finite() {
                        continue;
                    }
                    (
                        ((self.x[b] - self.lower[b]).max(0.0)) / -rate,
                        VarStatus::AtLower,
                    )
                } else {
                    if !self.upper[b].is_finite() {
                        continue;
                    }
                    (
                        ((self.upper[b] - self.x[b]).max(0.0)) / rate,
                        VarStatus::AtUpper,
                    )
                };
                let better = t < t_best
                    || (t == t_best
                        && leave.is_some_and(|(bp, _, ba)| {
                            if bland {
                                b < self.head[bp]
                            } else {
                                wi.abs() > ba
                            }
                        }));
                if better {
                    t_best = t;
                    leave = Some((i, st, wi.abs()));
                }
            }
            if !t_best.is_finite() {
                return Ok(LpStatus::Unbounded);
            }
            self.iterations += 1;
            if bland {
                self.bland_iterations += 1;
            }
            if t_best <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            for i in 0..self.m {
                if w[i] != 0.0 {
                    let b = self.head[i];
                    self.x[b] -= t_best * s * w[i];
                }
            }
            self.x[q] += t_best * s;
            match leave {
                None => {
                    self.status[q] = if s > 0.0 {
                        VarStatus::AtUpper
                    } else {
                        VarStatus::AtLower
                    };
                    self.x[q] = self.nonbasic_value(q);
                }
                Some((p, st, _)) => {
                    let leaving = self.head[p];
                    self.compute_pivot_row(p);
                    let alpha_q = w[p];
                    let theta_d = self.d[q] / alpha_q;
                    for &j in &self.touched {
                        if self.status[j] != VarStatus::Basic {
                            self.d[j] -= theta_d * self.alpha[j];
                        }
                    }
                    self.x[leaving] = if st == VarStatus::AtLower {
                        self.lower[leaving]
                    } else {
                        self.upper[leaving]
                    };
                    self.basis_change(p, q, st, &w);
                    self.d[leaving] = -theta_d;
                    fresh = false;
                    if self.factor.num_updates() >= self.tol.refactor_interval {
                        self.refactor()?;
                        self.recompute_dual();
                        self.recompute_primal();
                    }
                }
            }
        }
    }

    /// Structural variable values.
    pub fn primal(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn objective_value(&self) -> f64 {
        self.offset
            + self
                .user_cost
                .iter()
                .zip(&self.x[..self.n])
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }

    /// Reduced cost of structural `j` in the program's own sense and units.
    pub fn reduced_cost(&self, j: usize) -> f64 {
        self.sense_sign * self.d[j] * self.cost_scale
    }

    pub fn is_basic(&self, j: usize) -> bool {
        self.status[j] == VarStatus::Basic
    }

    /// Row multipliers as shadow prices in the program's own sense.
    pub fn duals(&mut self) -> Vec<f64> {
        let mut cb = vec![0.0; self.m];
        for p in 0..self.m {
            cb[p] = self.cost[self.head[p]];
        }
        let mut y = vec![0.0; self.m];
        self.factor.btran(&mut cb, &mut y);
        y.iter()
            .map(|v| v * self.cost_scale * self.sense_sign)
            .collect()
    }

    pub fn diagnostics(&self) -> LpDiagnostics {
        LpDiagnostics {
            iterations: self.iterations,
            bland_iterations: self.bland_iterations,
            refactorizations: self.refactorizations,
            farkas: self.farkas.clone(),
        }
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn solution(&mut self, status: LpStatus) -> LpSolution {
        let primal = self.primal().to_vec();
        let objective_value = self.objective_value();
        let dual = (status == LpStatus::Optimal).then(|| self.duals());
        LpSolution {
            status,
            primal,
            objective_value,
            dual,
            diagnostics: self.diagnostics(),
        }
    }
}
