//! Exhaustive reference solver for small instances.
//!
//! Works from the instance rules directly rather than from the built program:
//! every way of delivering each request is listed, combined under capacity
//! limits, and paired with every admissible set of openings. Expansion is
//! taken at the minimum the load requires and every possible placement
//! indicator is set, which never hurts any objective.

use std::collections::HashMap;

use thiserror::Error;

use crate::instance::{Instance, ShelterKind};
use crate::model::{LambdaScope, ModelOptions, ObjectiveMode};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("enumeration would visit more than {cap} combinations")]
    TooLarge { cap: u64 },
    #[error("youth {0} requests a service the instance does not define")]
    UnknownService(String),
}

/// One complete plan found by enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct OraclePlan {
    pub benefit: f64,
    pub cost: f64,
    /// Candidate shelter indices opened.
    pub opened: Vec<usize>,
    pub referrals: usize,
    pub in_house: usize,
    pub expansion_units: u32,
    /// `(youth, shelter, service, period)` for every provision.
    pub provisions: Vec<(usize, usize, usize, usize)>,
}

impl OraclePlan {
    pub fn ratio(&self) -> f64 {
        self.benefit / self.cost
    }

    pub fn score(&self, mode: ObjectiveMode) -> f64 {
        match mode {
            ObjectiveMode::BenefitMax => self.benefit,
            ObjectiveMode::CostMin => -self.cost,
            ObjectiveMode::ProfitMax => self.benefit - self.cost,
            ObjectiveMode::RatioMax => self.ratio(),
        }
    }
}

struct Req {
    youth: usize,
    service: usize,
    earliest: usize,
    frequency: usize,
    patterns: Vec<Vec<(usize, usize)>>,
}

fn subsets<T: Copy>(items: &[T], k: usize, out: &mut Vec<Vec<T>>) {
    fn rec<T: Copy>(items: &[T], k: usize, start: usize, cur: &mut Vec<T>, out: &mut Vec<Vec<T>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut Vec::new(), out);
}

fn can_host(instance: &Instance, s: usize, service: &str) -> bool {
    let sh = &instance.shelters[s];
    match sh.offers(service) {
        Some(o) => {
            sh.kind == ShelterKind::Referral
                || o.max_capacity > 0
                || o.capacity.iter().any(|&c| c > 0)
        }
        None => false,
    }
}

fn requests(instance: &Instance) -> Result<Vec<Req>, OracleError> {
    let end = instance.horizon - 1;
    let mut out = Vec::new();
    for (y, youth) in instance.youth.iter().enumerate() {
        for r in &youth.requests {
            let i = instance
                .service_index(&r.service)
                .ok_or_else(|| OracleError::UnknownService(youth.id.clone()))?;
            let svc = &instance.services[i];
            let last = (r.latest + r.duration).min(end);
            let start_end = r.latest.min(last);
            let hosts: Vec<usize> = (0..instance.shelters.len())
                .filter(|&s| {
                    can_host(instance, s, &svc.name) && instance.shelters[s].accepts(youth)
                })
                .collect();
            // Window label of each usable period.
            let label: Vec<(usize, usize)> = if svc.periodic {
                let gap = r.gap.unwrap_or(1);
                let k = svc.flexibility as i64;
                let mut v = Vec::new();
                for j in 0..r.frequency {
                    let c = (r.earliest + j * gap) as i64;
                    for t in (c - k)..=(c + k) {
                        if t >= r.earliest as i64 && t <= last as i64 {
                            v.push((t as usize, j));
                        }
                    }
                }
                v
            } else {
                (r.earliest..=last).map(|t| (t, 0)).collect()
            };
            let pairs: Vec<(usize, usize, usize)> = hosts
                .iter()
                .flat_map(|&s| label.iter().map(move |&(t, j)| (s, t, j)))
                .collect();
            let mut subs = Vec::new();
            subsets(&pairs, r.frequency, &mut subs);
            let patterns = subs
                .into_iter()
                .filter(|p| {
                    let starts = p.iter().any(|&(_, t, _)| t >= r.earliest && t <= start_end);
                    let once = !svc.periodic || {
                        let mut seen: Vec<(usize, usize)> =
                            p.iter().map(|&(s, _, j)| (s, j)).collect();
                        seen.sort_unstable();
                        seen.windows(2).all(|w| w[0] != w[1])
                    };
                    starts && once && p.len() <= instance.horizon
                })
                .map(|p| p.into_iter().map(|(s, t, _)| (s, t)).collect())
                .collect();
            out.push(Req {
                youth: y,
                service: i,
                earliest: r.earliest,
                frequency: r.frequency,
                patterns,
            });
        }
    }
    Ok(out)
}

struct Walker<'a, F> {
    instance: &'a Instance,
    opts: &'a ModelOptions,
    reqs: Vec<Req>,
    load: HashMap<(usize, usize, usize), u32>,
    chosen: Vec<usize>,
    potential: Vec<usize>,
    visited: u64,
    cap: u64,
    visit: F,
}

impl<F: FnMut(&OraclePlan)> Walker<'_, F> {
    fn limit(&self, s: usize, i: usize, t: usize) -> u32 {
        let sh = &self.instance.shelters[s];
        let o = sh
            .offers(&self.instance.services[i].name)
            .expect("host offers service");
        if sh.kind == ShelterKind::Referral {
            return u32::MAX;
        }
        if self.opts.status_quo_only {
            o.capacity[t]
        } else {
            o.capacity[t].max(o.max_capacity)
        }
    }

    fn dfs(&mut self, k: usize) -> Result<(), OracleError> {
        if k == self.reqs.len() {
            return self.leaf();
        }
        for p in 0..self.reqs[k].patterns.len() {
            let i = self.reqs[k].service;
            let fits = self.reqs[k].patterns[p].iter().all(|&(s, t)| {
                self.load.get(&(s, i, t)).copied().unwrap_or(0) < self.limit(s, i, t)
            });
            if !fits {
                continue;
            }
            for &(s, t) in &self.reqs[k].patterns[p] {
                *self.load.entry((s, i, t)).or_default() += 1;
            }
            self.chosen.push(p);
            self.dfs(k + 1)?;
            self.chosen.pop();
            for &(s, t) in &self.reqs[k].patterns[p] {
                *self.load.get_mut(&(s, i, t)).expect("loaded") -= 1;
            }
        }
        Ok(())
    }

    fn leaf(&mut self) -> Result<(), OracleError> {
        let inst = self.instance;
        let mut benefit = 0.0;
        let mut cost = 0.0;
        let mut referrals = 0;
        let mut provisions = Vec::new();
        let mut used = vec![false; inst.shelters.len()];
        for (req, &p) in self.reqs.iter().zip(&self.chosen) {
            for &(s, t) in &req.patterns[p] {
                provisions.push((req.youth, s, req.service, t));
                used[s] = true;
                if inst.shelters[s].kind == ShelterKind::Referral {
                    referrals += 1;
                    cost += inst.cost.assignment_referral;
                } else {
                    cost += inst.cost.assignment_in_house;
                    benefit += inst.benefit.youth_value()
                        / ((1 + t - req.earliest) as f64 * req.frequency as f64);
                }
            }
        }
        let mut expansion_units = 0;
        let mut keys: Vec<_> = self.load.iter().filter(|(_, &n)| n > 0).collect();
        keys.sort_unstable();
        for (&(s, i, t), &n) in keys {
            let sh = &inst.shelters[s];
            if sh.kind == ShelterKind::Referral {
                continue;
            }
            let o = sh
                .offers(&inst.services[i].name)
                .expect("host offers service");
            if n > o.capacity[t] {
                let units = n - o.capacity[t];
                expansion_units += units;
                cost += units as f64 * o.expansion_cost[t];
            }
        }
        let candidates: Vec<usize> = inst.candidates().map(|(s, _)| s).collect();
        let forced: Vec<bool> = candidates.iter().map(|&s| used[s]).collect();
        if self.opts.status_quo_only && forced.iter().any(|&f| f) {
            return Ok(());
        }
        let free: Vec<usize> = (0..candidates.len()).filter(|&c| !forced[c]).collect();
        let combos: u64 = if self.opts.status_quo_only {
            1
        } else {
            1 << free.len()
        };
        for mask in 0..combos {
            self.visited += 1;
            if self.visited > self.cap {
                return Err(OracleError::TooLarge { cap: self.cap });
            }
            let mut open: Vec<usize> = candidates
                .iter()
                .zip(&forced)
                .filter(|(_, &f)| f)
                .map(|(&s, _)| s)
                .collect();
            for (b, &c) in free.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    open.push(candidates[c]);
                }
            }
            open.sort_unstable();
            if !self.admissible(&open) {
                continue;
            }
            let mut b = benefit;
            let mut c = cost;
            for &s in &open {
                let oc = inst.opening_cost(&inst.shelters[s]).expect("candidate");
                c += oc;
                b += inst.benefit.returns_multiplier * oc;
            }
            let plan = OraclePlan {
                benefit: b,
                cost: c,
                opened: open,
                referrals,
                in_house: provisions.len() - referrals,
                expansion_units,
                provisions: provisions.clone(),
            };
            (self.visit)(&plan);
        }
        Ok(())
    }

    fn admissible(&self, open: &[usize]) -> bool {
        let inst = self.instance;
        for &s in open {
            if self.potential[s] < inst.shelters[s].critical_mass as usize {
                return false;
            }
        }
        match self.opts.scope {
            LambdaScope::Citywide => {
                let need = self.opts.lambda.iter().copied().max().unwrap_or(0) as usize;
                open.len() >= need
            }
            LambdaScope::PerBorough => {
                inst.boroughs
                    .iter()
                    .zip(&self.opts.lambda)
                    .all(|(b, &need)| {
                        open.iter()
                            .filter(|&&s| inst.shelters[s].borough == b.name)
                            .count()
                            >= need as usize
                    })
            }
        }
    }
}

/// Visit every feasible plan. Fails once more than `cap` plans are visited.
pub fn enumerate_plans<F: FnMut(&OraclePlan)>(
    instance: &Instance,
    opts: &ModelOptions,
    cap: u64,
    visit: F,
) -> Result<u64, OracleError> {
    let reqs = requests(instance)?;
    let potential = (0..instance.shelters.len())
        .map(|s| {
            instance
                .youth
                .iter()
                .filter(|y| {
                    instance.shelters[s].accepts(y)
                        && y.requests.iter().any(|r| can_host(instance, s, &r.service))
                })
                .count()
        })
        .collect();
    let mut w = Walker {
        instance,
        opts,
        reqs,
        load: HashMap::new(),
        chosen: Vec::new(),
        potential,
        visited: 0,
        cap,
        visit,
    };
    w.dfs(0)?;
    Ok(w.visited)
}

/// Best plan for the mode in `opts`, or `None` when nothing is feasible.
pub fn best_plan(
    instance: &Instance,
    opts: &ModelOptions,
    cap: u64,
) -> Result<Option<OraclePlan>, OracleError> {
    let mut best: Option<OraclePlan> = None;
    enumerate_plans(instance, opts, cap, |p| {
        if best
            .as_ref()
            .is_none_or(|b| p.score(opts.mode) > b.score(opts.mode))
        {
            best = Some(p.clone());
        }
    })?;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_combinations() {
        let mut out = Vec::new();
        subsets(&[1, 2, 3, 4], 2, &mut out);
        assert_eq!(out.len(), 6);
        assert_eq!(out[0], vec![1, 2]);
        assert_eq!(out[5], vec![3, 4]);
    }
}
