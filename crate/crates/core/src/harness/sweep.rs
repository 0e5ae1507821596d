use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_scenario, HarnessError, Scenario, ScenarioResult, SolveSettings, SweepAxis};
use crate::instance::{generate_instance, GeneratorConfig, Instance};
use crate::model::ObjectiveMode;

/// Relative slack for comparing recomputed floating-point metrics.
const ROUNDOFF: f64 = 1e-9;

pub(crate) fn le(a: f64, b: f64) -> bool {
    a <= b + ROUNDOFF * a.abs().max(b.abs()).max(1.0)
}

/// Solve independent scenarios on `settings.scenario_workers` threads.
/// Results come back in input order.
pub fn run_all(
    instance: &Instance,
    scenarios: &[Scenario],
    settings: &SolveSettings,
) -> Result<Vec<Result<ScenarioResult, HarnessError>>, HarnessError> {
    if settings.scenario_workers <= 1 {
        return Ok(scenarios
            .iter()
            .map(|s| run_scenario(instance, s, settings))
            .collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.scenario_workers)
        .build()
        .map_err(|e| HarnessError::InvalidSetting(e.to_string()))?;
    Ok(pool.install(|| {
        scenarios
            .par_iter()
            .map(|s| run_scenario(instance, s, settings))
            .collect()
    }))
}

fn collect(
    results: Vec<Result<ScenarioResult, HarnessError>>,
) -> Result<Vec<ScenarioResult>, HarnessError> {
    results.into_iter().collect()
}

pub fn sweep_lambda(
    instance: &Instance,
    mode: ObjectiveMode,
    lambdas: &[u32],
    settings: &SolveSettings,
) -> Result<Vec<ScenarioResult>, HarnessError> {
    let scenarios: Vec<Scenario> = lambdas
        .iter()
        .map(|&l| Scenario {
            sweep: Some((SweepAxis::Lambda, l as f64)),
            ..Scenario::new(instance, mode, l)
        })
        .collect();
    collect(run_all(instance, &scenarios, settings)?)
}

pub fn sweep_rho(
    instance: &Instance,
    mode: ObjectiveMode,
    lambda: u32,
    rhos: &[f64],
    settings: &SolveSettings,
) -> Result<Vec<ScenarioResult>, HarnessError> {
    let scenarios: Vec<Scenario> = rhos
        .iter()
        .map(|&r| Scenario {
            rho: Some(r),
            sweep: Some((SweepAxis::Rho, r)),
            ..Scenario::new(instance, mode, lambda)
        })
        .collect();
    collect(run_all(instance, &scenarios, settings)?)
}

/// Each replication places the candidates in randomly drawn boroughs, which
/// changes their opening costs through the borough multipliers.
pub fn sweep_cost_replications(
    instance: &Instance,
    mode: ObjectiveMode,
    lambdas: &[u32],
    replications: &[u64],
    settings: &SolveSettings,
) -> Result<Vec<ScenarioResult>, HarnessError> {
    let scenarios: Vec<Scenario> = lambdas
        .iter()
        .flat_map(|&l| {
            replications.iter().map(move |&b| Scenario {
                borough_seed: Some(b),
                sweep: Some((SweepAxis::CostReplication, b as f64)),
                ..Scenario::new(instance, mode, l)
            })
        })
        .collect();
    collect(run_all(instance, &scenarios, settings)?)
}

/// Generate one instance per youth count from `config` and `seed`.
pub fn sweep_scale(
    config: &GeneratorConfig,
    seed: u64,
    sizes: &[usize],
    mode: ObjectiveMode,
    lambda: u32,
    settings: &SolveSettings,
) -> Result<Vec<ScenarioResult>, HarnessError> {
    let mut out = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let cfg = GeneratorConfig {
            num_youth: n,
            ..config.clone()
        };
        let inst = generate_instance(&cfg, seed)?;
        let scenario = Scenario {
            sweep: Some((SweepAxis::Scale, n as f64)),
            ..Scenario::new(&inst, mode, lambda)
        };
        out.push(run_scenario(&inst, &scenario, settings)?);
    }
    Ok(out)
}

/// Order used for every emitted table.
pub(crate) fn sort_results(results: &mut [ScenarioResult]) {
    results.sort_by(|a, b| {
        let key = |r: &ScenarioResult| (r.scenario.sweep.map(|(axis, _)| axis), r.scenario.mode);
        key(a)
            .cmp(&key(b))
            .then_with(|| {
                let v = |r: &ScenarioResult| r.scenario.sweep.map_or(0.0, |(_, v)| v);
                v(a).partial_cmp(&v(b)).unwrap_or(Ordering::Equal)
            })
            .then_with(|| a.scenario.lambda.cmp(&b.scenario.lambda))
            .then_with(|| a.scenario.id.cmp(&b.scenario.id))
    });
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Nonincreasing,
    Nondecreasing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub at: f64,
    pub previous: f64,
    pub value: f64,
}

/// Monotonicity of one metric along a sweep. Hard checks fail a run; soft
/// ones are reported as warnings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneCheck {
    pub metric: String,
    pub direction: Direction,
    pub hard: bool,
    pub violations: Vec<Violation>,
}

impl MonotoneCheck {
    /// `results` must already be in sweep order.
    pub fn new(
        results: &[ScenarioResult],
        metric: &str,
        value: impl Fn(&ScenarioResult) -> f64,
        direction: Direction,
        hard: bool,
    ) -> Self {
        let violations = results
            .windows(2)
            .filter_map(|w| {
                let (p, v) = (value(&w[0]), value(&w[1]));
                let ok = match direction {
                    Direction::Nonincreasing => le(v, p),
                    Direction::Nondecreasing => le(p, v),
                };
                (!ok).then(|| Violation {
                    at: w[1].scenario.sweep.map_or(f64::NAN, |(_, x)| x),
                    previous: p,
                    value: v,
                })
            })
            .collect();
        Self {
            metric: metric.into(),
            direction,
            hard,
            violations,
        }
    }

    /// BCR along a λ sweep; hard only for exact ratio solves.
    pub fn lambda_bcr(results: &[ScenarioResult], settings: &SolveSettings) -> Self {
        let hard = settings.gap == 0.0
            && results
                .iter()
                .all(|r| r.scenario.mode == ObjectiveMode::RatioMax);
        Self::new(
            results,
            "bcr",
            |r| r.metrics.bcr,
            Direction::Nonincreasing,
            hard,
        )
    }

    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn max_violation(&self) -> f64 {
        self.violations
            .iter()
            .map(|v| (v.value - v.previous).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub mode: ObjectiveMode,
    pub result: Option<ScenarioResult>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub name: String,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub lambda: u32,
    pub rows: Vec<ComparisonRow>,
    pub checks: Vec<OrderingCheck>,
}

impl Comparison {
    pub fn get(&self, mode: ObjectiveMode) -> Option<&ScenarioResult> {
        self.rows
            .iter()
            .find(|r| r.mode == mode)
            .and_then(|r| r.result.as_ref())
    }

    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.result.is_some()) && self.checks.iter().all(|c| c.holds)
    }

    /// Fixed-width text table, one column per mode.
    pub fn table(&self) -> String {
        let mut out = format!("{:<18}", "metric");
        for r in &self.rows {
            out.push_str(&format!("{:>16}", r.mode.as_str()));
        }
        out.push('\n');
        type Cell = fn(&ScenarioResult) -> String;
        let lines: [(&str, Cell); 5] = [
            ("total cost", |r| format!("{:.0}", r.metrics.total_cost)),
            ("bcr", |r| format!("{:.2}", r.metrics.bcr)),
            ("referrals", |r| r.metrics.referrals.to_string()),
            ("utilization", |r| {
                format!("{:.1}%", 100.0 * r.metrics.utilization)
            }),
            ("shelters opened", |r| r.metrics.shelters_opened.to_string()),
        ];
        for (name, cell) in lines {
            out.push_str(&format!("{name:<18}"));
            for r in &self.rows {
                let v = r.result.as_ref().map_or_else(|| "failed".to_string(), cell);
                out.push_str(&format!("{v:>16}"));
            }
            out.push('\n');
        }
        for r in &self.rows {
            if let Some(f) = &r.failure {
                out.push_str(&format!("{}: {f}\n", r.mode));
            }
        }
        for c in &self.checks {
            out.push_str(&format!(
                "[{}] {}\n",
                if c.holds { "ok" } else { "FAIL" },
                c.name
            ));
        }
        out
    }
}

/// Solve every mode at one citywide λ and check the expected orderings.
pub fn compare_objectives(
    instance: &Instance,
    lambda: u32,
    settings: &SolveSettings,
) -> Result<Comparison, HarnessError> {
    let scenarios: Vec<Scenario> = ObjectiveMode::ALL
        .iter()
        .map(|&m| Scenario::new(instance, m, lambda))
        .collect();
    let rows: Vec<ComparisonRow> = run_all(instance, &scenarios, settings)?
        .into_iter()
        .zip(ObjectiveMode::ALL)
        .map(|(r, mode)| match r {
            Ok(r) => ComparisonRow {
                mode,
                result: Some(r),
                failure: None,
            },
            Err(e) => ComparisonRow {
                mode,
                result: None,
                failure: Some(e.to_string()),
            },
        })
        .collect();
    let mut cmp = Comparison {
        lambda,
        rows,
        checks: Vec::new(),
    };
    let (cost, ratio, profit) = (
        cmp.get(ObjectiveMode::CostMin).map(|r| &r.metrics),
        cmp.get(ObjectiveMode::RatioMax).map(|r| &r.metrics),
        cmp.get(ObjectiveMode::ProfitMax).map(|r| &r.metrics),
    );
    let mut checks = Vec::new();
    if let (Some(c), Some(q), Some(p)) = (cost, ratio, profit) {
        checks.push(OrderingCheck {
            name: "cost: cost_min <= ratio_max <= profit_max".into(),
            holds: le(c.total_cost, q.total_cost) && le(q.total_cost, p.total_cost),
        });
        checks.push(OrderingCheck {
            name: "utilization: cost_min <= ratio_max <= profit_max".into(),
            holds: le(c.utilization, q.utilization) && le(q.utilization, p.utilization),
        });
    }
    if let Some(q) = ratio {
        let best = cmp
            .rows
            .iter()
            .filter_map(|r| r.result.as_ref())
            .all(|r| le(r.metrics.bcr, q.bcr));
        checks.push(OrderingCheck {
            name: "bcr: ratio_max is the largest".into(),
            holds: best,
        });
    }
    if let Some(p) = profit {
        checks.push(OrderingCheck {
            name: "profit_max opens every candidate".into(),
            holds: p.shelters_opened == instance.num_candidates(),
        });
    }
    cmp.checks = checks;
    Ok(cmp)
}
