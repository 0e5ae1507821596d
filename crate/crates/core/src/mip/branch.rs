use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Instant;

use super::{
    MipConfig, MipError, MipSolution, MipStatus, MixedIntegerProgram, PruneReason, PrunedNode,
};
use crate::lp::{solve_lp, BasisSnapshot, LpStatus, Relation, SimplexEngine};

#[derive(Clone, Debug)]
struct Node {
    id: u64,
    /// Parent LP bound (larger is better).
    bound: f64,
    changes: Vec<(usize, f64, f64)>,
    basis: Option<Arc<BasisSnapshot>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Best bound first, then the oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Shared {
    heap: BinaryHeap<Node>,
    next_id: u64,
    active: usize,
    incumbent: Option<(f64, Vec<f64>)>,
    nodes: u64,
    lp_iterations: u64,
    /// Largest bound among subtrees discarded only because of the gap target.
    gap_pruned: f64,
    stop: Option<MipStatus>,
    audit: Option<Vec<PrunedNode>>,
    warnings: Vec<String>,
    error: Option<MipError>,
}

struct Search<'a> {
    mip: &'a MixedIntegerProgram,
    cfg: &'a MipConfig,
    /// Direction in which each integer variable can be rounded without
    /// breaking a row or worsening the objective.
    roundable: Vec<Option<Round>>,
    root_lower: Vec<f64>,
    root_upper: Vec<f64>,
    start: Instant,
    shared: Mutex<Shared>,
    wake: Condvar,
}

/// Solve by best-bound branch-and-bound.
pub fn solve_mip(mip: &MixedIntegerProgram, cfg: &MipConfig) -> Result<MipSolution, MipError> {
    solve_mip_from(mip, cfg, None)
}

/// Branch-and-bound seeded with a known feasible point. An infeasible seed
/// is ignored with a warning.
pub fn solve_mip_from(
    mip: &MixedIntegerProgram,
    cfg: &MipConfig,
    initial: Option<&[f64]>,
) -> Result<MipSolution, MipError> {
    mip.validate()?;
    if !(0.0..1.0).contains(&cfg.gap_target) {
        return Err(MipError::InvalidConfig(format!(
            "gap target {} outside [0, 1)",
            cfg.gap_target
        )));
    }
    if cfg.workers == 0 {
        return Err(MipError::InvalidConfig(
            "at least one worker is required".into(),
        ));
    }
    let tol = &cfg.tolerances;
    let mut warnings = Vec::new();
    let mut incumbent = None;
    if let Some(x) = initial {
        if mip.is_feasible(x, tol) {
            let x = round_integers(mip, x);
            incumbent = Some((mip.score(mip.base.objective_value(&x)), x));
        } else {
            warnings.push("initial incumbent rejected: not feasible".into());
        }
    }

    let mut root_engine = SimplexEngine::new(&mip.base, *tol)?;
    let search = Search {
        mip,
        cfg,
        roundable: roundable(mip),
        root_lower: mip.base.lower.clone(),
        root_upper: mip.base.upper.clone(),
        start: Instant::now(),
        shared: Mutex::new(Shared {
            heap: BinaryHeap::new(),
            next_id: 1,
            active: 0,
            incumbent,
            nodes: 0,
            lp_iterations: 0,
            gap_pruned: f64::NEG_INFINITY,
            stop: None,
            audit: cfg.audit.then(Vec::new),
            warnings,
            error: None,
        }),
        wake: Condvar::new(),
    };
    let root = Node {
        id: 0,
        bound: f64::INFINITY,
        changes: Vec::new(),
        basis: None,
    };
    if cfg.workers == 1 {
        search.worker(&mut root_engine, Some(root));
    } else {
        search.shared.lock().unwrap().heap.push(root);
        std::thread::scope(|scope| {
            for _ in 0..cfg.workers {
                let mut engine = root_engine.clone();
                let search = &search;
                scope.spawn(move || search.worker(&mut engine, None));
            }
        });
    }
    search.finish()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Round {
    Up,
    Down,
}

fn roundable(mip: &MixedIntegerProgram) -> Vec<Option<Round>> {
    let n = mip.num_vars();
    let mut up_locks = vec![0usize; n];
    let mut down_locks = vec![0usize; n];
    for row in &mip.base.constraints {
        for &(j, a) in &row.coeffs {
            if a == 0.0 {
                continue;
            }
            let (up, down) = match row.relation {
                Relation::Le => (a > 0.0, a < 0.0),
                Relation::Ge => (a < 0.0, a > 0.0),
                Relation::Eq => (true, true),
            };
            up_locks[j] += up as usize;
            down_locks[j] += down as usize;
        }
    }
    (0..n)
        .map(|j| {
            if !mip.var_kind[j].is_integral() {
                return None;
            }
            let gain = mip.score(mip.base.objective[j]);
            if up_locks[j] == 0 && gain >= 0.0 {
                Some(Round::Up)
            } else if down_locks[j] == 0 && gain <= 0.0 {
                Some(Round::Down)
            } else {
                None
            }
        })
        .collect()
}

fn round_integers(mip: &MixedIntegerProgram, x: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(&mip.var_kind)
        .map(|(&v, k)| if k.is_integral() { v.round() } else { v })
        .collect()
}

enum Outcome {
    /// Children to explore; the first is plunged into.
    Branch(Node, Node),
    Closed,
}

impl Search<'_> {
    fn margin(&self, incumbent: f64) -> f64 {
        // Node bounds within this distance of the incumbent cannot improve it
        // enough to matter.
        let scale = incumbent.abs().max(1.0);
        (self.cfg.gap_target * scale).max(1e-9 * scale)
    }

    fn worker(&self, engine: &mut SimplexEngine, first: Option<Node>) {
        let mut applied: Vec<usize> = Vec::new();
        let mut current = first;
        loop {
            let mut node = match current.take() {
                Some(n) => {
                    let mut s = self.shared.lock().unwrap();
                    s.active += 1;
                    n
                }
                None => {
                    let mut s = self.shared.lock().unwrap();
                    loop {
                        if s.stop.is_some() {
                            return;
                        }
                        if let Some(n) = s.heap.pop() {
                            s.active += 1;
                            break n;
                        }
                        if s.active == 0 {
                            return;
                        }
                        s = self.wake.wait(s).unwrap();
                    }
                }
            };
            // Plunge until the dive closes.
            loop {
                match self.process(engine, &mut applied, node) {
                    Ok(Outcome::Branch(dive, other)) => {
                        let mut s = self.shared.lock().unwrap();
                        s.heap.push(other);
                        self.wake.notify_one();
                        if s.stop.is_some() {
                            s.heap.push(dive);
                            break;
                        }
                        drop(s);
                        node = dive;
                    }
                    Ok(Outcome::Closed) => break,
                    Err(e) => {
                        let mut s = self.shared.lock().unwrap();
                        s.error.get_or_insert(e);
                        s.stop = Some(MipStatus::Infeasible);
                        break;
                    }
                }
            }
            let mut s = self.shared.lock().unwrap();
            s.active -= 1;
            self.wake.notify_all();
        }
    }

    fn apply_bounds(
        &self,
        engine: &mut SimplexEngine,
        applied: &mut Vec<usize>,
        changes: &[(usize, f64, f64)],
    ) {
        for &j in applied.iter() {
            engine.set_bounds(j, self.root_lower[j], self.root_upper[j]);
        }
        applied.clear();
        for &(j, l, u) in changes {
            engine.set_bounds(j, l, u);
            applied.push(j);
        }
    }

    fn record_prune(&self, s: &mut Shared, node: &Node, bound: f64, reason: PruneReason) {
        if let Some(audit) = s.audit.as_mut() {
            audit.push(PrunedNode {
                id: node.id,
                bound,
                reason,
                changes: node.changes.clone(),
            });
        }
    }

    /// True when a subtree with this bound is discarded; tracks bounds
    /// discarded only because of a positive gap target.
    fn prune_by_bound(&self, s: &mut Shared, bound: f64) -> bool {
        match &s.incumbent {
            Some((inc, _)) => {
                if bound <= *inc + 1e-9 * inc.abs().max(1.0) {
                    true
                } else if bound <= *inc + self.margin(*inc) {
                    s.gap_pruned = s.gap_pruned.max(bound);
                    true
                } else {
                    false
                }
            }
            None => false,
        }
    }

    fn process(
        &self,
        engine: &mut SimplexEngine,
        applied: &mut Vec<usize>,
        mut node: Node,
    ) -> Result<Outcome, MipError> {
        {
            let mut s = self.shared.lock().unwrap();
            if s.stop.is_some() {
                s.heap.push(node);
                return Ok(Outcome::Closed);
            }
            if let Some(limit) = self.cfg.node_limit {
                if s.nodes >= limit {
                    s.stop = Some(MipStatus::Feasible);
                    s.heap.push(node);
                    return Ok(Outcome::Closed);
                }
            }
            if let Some(limit) = self.cfg.time_limit {
                if self.start.elapsed() >= limit {
                    s.stop = Some(MipStatus::TimeLimit);
                    s.heap.push(node);
                    return Ok(Outcome::Closed);
                }
            }
            if self.prune_by_bound(&mut s, node.bound) {
                self.record_prune(&mut s, &node, node.bound, PruneReason::Bound);
                return Ok(Outcome::Closed);
            }
            s.nodes += 1;
        }

        self.apply_bounds(engine, applied, &node.changes);
        if let Some(basis) = &node.basis {
            engine.restore(basis);
        }
        let before = engine.iterations();
        let status = engine.solve()?;
        let iters = (engine.iterations() - before) as u64;
        let mip = self.mip;
        let tol = &self.cfg.tolerances;
        match status {
            LpStatus::Infeasible => {
                let mut s = self.shared.lock().unwrap();
                s.lp_iterations += iters;
                self.record_prune(&mut s, &node, node.bound, PruneReason::Infeasible);
                return Ok(Outcome::Closed);
            }
            LpStatus::Unbounded => return Err(MipError::Unbounded),
            LpStatus::Optimal => {}
        }
        let z = mip.score(engine.objective_value()).min(node.bound);
        let x = engine.primal();

        // Most fractional integer variable, lowest index on ties. Variables
        // that round safely are settled without branching.
        let mut branch: Option<(usize, f64)> = None;
        let mut settled = Vec::new();
        for (j, kind) in mip.var_kind.iter().enumerate() {
            if !kind.is_integral() {
                continue;
            }
            let f = x[j] - x[j].floor();
            let dist = f.min(1.0 - f);
            if dist <= tol.integrality {
                continue;
            }
            if let Some(dir) = self.roundable[j] {
                settled.push((j, dir));
            } else if branch.is_none_or(|(_, b)| dist > b) {
                branch = Some((j, dist));
            }
        }

        let Some((bj, _)) = branch else {
            let mut candidate = round_integers(mip, x);
            for (j, dir) in settled {
                candidate[j] = match dir {
                    Round::Up => x[j].ceil(),
                    Round::Down => x[j].floor(),
                };
            }
            let point = if mip.base.max_violation(&candidate) <= tol.feasibility {
                Some(candidate)
            } else {
                self.repair_rounding(&candidate)?
            };
            let mut s = self.shared.lock().unwrap();
            s.lp_iterations += iters;
            match point {
                Some(p) => {
                    let value = mip.score(mip.base.objective_value(&p));
                    if s.incumbent.as_ref().is_none_or(|(v, _)| value > *v) {
                        s.incumbent = Some((value, p));
                    }
                    self.record_prune(&mut s, &node, z, PruneReason::Integral);
                }
                None => {
                    s.warnings.push(format!(
                        "node {}: rounded relaxation point violates constraints and no continuous repair exists; subtree dropped",
                        node.id
                    ));
                    self.record_prune(&mut s, &node, z, PruneReason::Infeasible);
                }
            }
            return Ok(Outcome::Closed);
        };

        let (id_down, id_up, incumbent) = {
            let mut s = self.shared.lock().unwrap();
            s.lp_iterations += iters;
            if self.prune_by_bound(&mut s, z) {
                self.record_prune(&mut s, &node, z, PruneReason::Bound);
                return Ok(Outcome::Closed);
            }
            let id = s.next_id;
            s.next_id += 2;
            (id, id + 1, s.incumbent.as_ref().map(|(v, _)| *v))
        };

        if self.cfg.reduced_cost_fixing {
            if let Some(inc) = incumbent {
                self.fix_by_reduced_cost(
                    engine,
                    &mut node.changes,
                    z,
                    inc + 1e-9 * inc.abs().max(1.0),
                );
            }
        }

        let v = x[bj];
        let (lo, hi) = engine.bounds(bj);
        let mut down = node.changes.clone();
        down.push((bj, lo, v.floor()));
        let mut up = node.changes;
        up.push((bj, v.ceil(), hi));
        let snapshot = Arc::new(engine.snapshot());
        let down = Node {
            id: id_down,
            bound: z,
            changes: down,
            basis: Some(snapshot.clone()),
        };
        let up = Node {
            id: id_up,
            bound: z,
            changes: up,
            basis: Some(snapshot),
        };
        // Dive in the rounding direction.
        if v - v.floor() >= 0.5 {
            Ok(Outcome::Branch(up, down))
        } else {
            Ok(Outcome::Branch(down, up))
        }
    }

    /// Fix nonbasic integer variables whose reduced cost shows that moving
    /// them off their bound cannot beat `threshold`.
    fn fix_by_reduced_cost(
        &self,
        engine: &SimplexEngine,
        changes: &mut Vec<(usize, f64, f64)>,
        z: f64,
        threshold: f64,
    ) {
        let mip = self.mip;
        let sign = mip.score(1.0);
        let x = engine.primal();
        for (j, kind) in mip.var_kind.iter().enumerate() {
            if !kind.is_integral() || engine.is_basic(j) {
                continue;
            }
            let (lo, hi) = engine.bounds(j);
            if lo == hi {
                continue;
            }
            let rc = sign * engine.reduced_cost(j);
            if x[j] == lo && rc < 0.0 && z + rc <= threshold {
                changes.push((j, lo, lo));
            } else if x[j] == hi && rc > 0.0 && z - rc <= threshold {
                changes.push((j, hi, hi));
            }
        }
    }

    /// Re-solve the continuous part with integers fixed at their rounded values.
    fn repair_rounding(&self, candidate: &[f64]) -> Result<Option<Vec<f64>>, MipError> {
        let mut lp = self.mip.base.clone();
        for (j, kind) in self.mip.var_kind.iter().enumerate() {
            if kind.is_integral() {
                lp.set_bounds(j, candidate[j], candidate[j]);
            }
        }
        if self.mip.var_kind.iter().all(|k| k.is_integral()) {
            return Ok(None);
        }
        let sol = solve_lp(&lp, &self.cfg.tolerances)?;
        if sol.status == LpStatus::Optimal
            && self.mip.base.max_violation(&sol.primal) <= self.cfg.tolerances.feasibility
        {
            Ok(Some(sol.primal))
        } else {
            Ok(None)
        }
    }

    fn finish(self) -> Result<MipSolution, MipError> {
        let s = self.shared.into_inner().unwrap();
        if let Some(e) = s.error {
            return Err(e);
        }
        let mip = self.mip;
        let open_bound = s
            .heap
            .iter()
            .map(|n| n.bound)
            .fold(f64::NEG_INFINITY, f64::max);
        let (status, score, incumbent) = match s.incumbent {
            None => {
                let status = s.stop.unwrap_or(MipStatus::Infeasible);
                (status, f64::NAN, None)
            }
            Some((v, x)) => {
                let status = match s.stop {
                    Some(st) => st,
                    None if s.gap_pruned > v + 1e-9 * v.abs().max(1.0) => MipStatus::GapLimit,
                    None => MipStatus::Optimal,
                };
                (status, v, Some(x))
            }
        };
        let mut bound = open_bound.max(s.gap_pruned);
        if !score.is_nan() {
            bound = bound.max(score);
        }
        let sign = mip.score(1.0);
        let objective_value = if score.is_nan() {
            f64::NAN
        } else {
            sign * score
        };
        let gap = if score.is_nan() {
            f64::INFINITY
        } else {
            MipSolution::relative_gap(bound, score)
        };
        let bound_user = if bound == f64::NEG_INFINITY {
            // Exhausted tree without an incumbent: nothing attainable.
            sign * f64::NEG_INFINITY
        } else {
            sign * bound
        };
        let sol = MipSolution {
            status,
            incumbent,
            objective_value,
            bound: bound_user,
            gap,
            nodes_explored: s.nodes,
            lp_iterations: s.lp_iterations,
            warnings: s.warnings,
            audit: s.audit,
        };
        match status {
            MipStatus::Feasible | MipStatus::TimeLimit => {
                Err(MipError::LimitExceeded(Box::new(sol)))
            }
            _ => Ok(sol),
        }
    }
}
