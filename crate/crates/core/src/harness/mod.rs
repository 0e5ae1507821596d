//! Scenario runs, metrics, sweeps and reports.

pub mod fixtures;
mod report;
mod sweep;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fractional::{maximize_ratio, FractionalError, DEFAULT_MAX_ITER};
use crate::instance::{Instance, InstanceError, ShelterKind};
use crate::mip::{solve_mip, MipConfig, MipError, MipStatus};
use crate::model::{
    build_model, decode, AssignmentPlan, LambdaScope, ModelError, ModelOptions, ObjectiveMode,
};
use crate::tolerance::ToleranceConfig;

pub use report::{emit_report, CsvRow, SeriesRow};
pub use sweep::{
    compare_objectives, run_all, sweep_cost_replications, sweep_lambda, sweep_rho, sweep_scale,
    Comparison, ComparisonRow, Direction, MonotoneCheck, OrderingCheck, Violation,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Lambda,
    Rho,
    CostReplication,
    Scale,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::Rho => "rho",
            SweepAxis::CostReplication => "cost_replication",
            SweepAxis::Scale => "scale",
        }
    }
}

/// What to solve. `None` overrides keep the instance values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub mode: ObjectiveMode,
    pub lambda: Vec<u32>,
    #[serde(default)]
    pub scope: LambdaScope,
    #[serde(default)]
    pub status_quo_only: bool,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Reassign candidate boroughs with this seed.
    #[serde(default)]
    pub borough_seed: Option<u64>,
    #[serde(default)]
    pub sweep: Option<(SweepAxis, f64)>,
}

impl Scenario {
    pub fn new(instance: &Instance, mode: ObjectiveMode, lambda: u32) -> Self {
        Self {
            mode,
            lambda: vec![lambda; instance.boroughs.len()],
            scope: LambdaScope::Citywide,
            status_quo_only: false,
            rho: None,
            delta: None,
            borough_seed: None,
            sweep: None,
        }
    }

    pub fn status_quo(instance: &Instance, mode: ObjectiveMode) -> Self {
        Self {
            status_quo_only: true,
            ..Self::new(instance, mode, 0)
        }
    }

    /// The instance with this scenario's overrides applied.
    pub fn apply(&self, instance: &Instance) -> Instance {
        let mut inst = instance.clone();
        if let Some(rho) = self.rho {
            inst.benefit.returns_multiplier = rho;
        }
        if let Some(delta) = self.delta {
            inst.rescale_status_quo(delta);
        }
        if let Some(seed) = self.borough_seed {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let names: Vec<String> = inst.boroughs.iter().map(|b| b.name.clone()).collect();
            for s in inst
                .shelters
                .iter_mut()
                .filter(|s| s.kind == ShelterKind::Candidate)
            {
                s.borough = names[rng.gen_range(0..names.len())].clone();
            }
        }
        inst
    }

    pub fn model_options(&self) -> ModelOptions {
        ModelOptions {
            mode: self.mode,
            lambda: self.lambda.clone(),
            scope: self.scope,
            status_quo_only: self.status_quo_only,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSettings {
    /// Relative gap for every mixed-integer solve.
    pub gap: f64,
    pub epsilon: Option<f64>,
    pub max_iter: usize,
    /// Branch-and-bound workers per solve.
    pub mip_workers: usize,
    /// Scenarios solved concurrently in sweeps.
    pub scenario_workers: usize,
    pub node_limit: Option<u64>,
    pub time_limit_secs: Option<f64>,
    pub tolerances: ToleranceConfig,
    /// Record wall-clock times; off keeps outputs byte-identical across runs.
    pub timings: bool,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            gap: 0.05,
            epsilon: None,
            max_iter: DEFAULT_MAX_ITER,
            mip_workers: 1,
            scenario_workers: 1,
            node_limit: None,
            time_limit_secs: None,
            tolerances: ToleranceConfig::default(),
            timings: false,
        }
    }
}

impl SolveSettings {
    pub fn exact() -> Self {
        Self {
            gap: 0.0,
            ..Self::default()
        }
    }

    pub fn mip_config(&self) -> MipConfig {
        MipConfig {
            gap_target: self.gap,
            node_limit: self.node_limit,
            time_limit: self.time_limit_secs.map(Duration::from_secs_f64),
            workers: self.mip_workers,
            tolerances: self.tolerances,
            ..MipConfig::exact()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub bcr: f64,
    pub total_cost: f64,
    pub total_benefit: f64,
    pub referrals: usize,
    pub in_house: usize,
    pub utilization: f64,
    pub shelters_opened: usize,
    pub expansion_units: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub status: String,
    /// Parametric iterations for ratio mode, 1 otherwise.
    pub iterations: usize,
    pub nodes: u64,
    pub lp_iterations: u64,
    /// Largest final gap over the mixed-integer solves.
    pub gap: Option<f64>,
    pub objective: f64,
    pub q_sequence: Vec<f64>,
    pub best_ratio: Option<f64>,
    pub warnings: Vec<String>,
    pub wall_time_secs: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDescriptor {
    pub id: String,
    pub mode: ObjectiveMode,
    pub lambda: Vec<u32>,
    pub scope: LambdaScope,
    pub status_quo_only: bool,
    pub rho: f64,
    pub delta: f64,
    pub seed: u64,
    pub num_youth: usize,
    pub borough_seed: Option<u64>,
    pub sweep: Option<(SweepAxis, f64)>,
}

impl ScenarioDescriptor {
    fn new(scenario: &Scenario, inst: &Instance) -> Self {
        let lambda_tag = if scenario.lambda.windows(2).all(|w| w[0] == w[1]) {
            scenario.lambda.first().copied().unwrap_or(0).to_string()
        } else {
            scenario
                .lambda
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(".")
        };
        let mut id = format!(
            "{}-l{}-r{}-d{}-y{}-s{}",
            scenario.mode,
            lambda_tag,
            inst.benefit.returns_multiplier,
            inst.delta,
            inst.youth.len(),
            inst.seed
        );
        if scenario.scope == LambdaScope::PerBorough {
            id.push_str("-pb");
        }
        if scenario.status_quo_only {
            id.push_str("-sq");
        }
        if let Some(b) = scenario.borough_seed {
            id.push_str(&format!("-b{b}"));
        }
        Self {
            id,
            mode: scenario.mode,
            lambda: scenario.lambda.clone(),
            scope: scenario.scope,
            status_quo_only: scenario.status_quo_only,
            rho: inst.benefit.returns_multiplier,
            delta: inst.delta,
            seed: inst.seed,
            num_youth: inst.youth.len(),
            borough_seed: scenario.borough_seed,
            sweep: scenario.sweep,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanDigest {
    pub opened: Vec<String>,
    pub youth_per_shelter: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: ScenarioDescriptor,
    pub metrics: Metrics,
    pub stats: SolverStats,
    pub digest: PlanDigest,
    pub plan: AssignmentPlan,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("scenario {scenario}: build failed: {source}")]
    Build {
        scenario: String,
        #[source]
        source: ModelError,
    },
    #[error("scenario {scenario}: solve failed: {message}")]
    Solve { scenario: String, message: String },
    #[error("scenario {scenario}: decode failed: {source}")]
    Decode {
        scenario: String,
        #[source]
        source: ModelError,
    },
    #[error(
        "scenario {scenario}: solver objective {reported} differs from plan value {recomputed}"
    )]
    Inconsistent {
        scenario: String,
        reported: f64,
        recomputed: f64,
    },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
    #[error("no results to report")]
    EmptyResults,
    #[error("invalid setting: {0}")]
    InvalidSetting(String),
}

/// Metrics computed from the plan and instance data alone.
pub fn compute_metrics(instance: &Instance, plan: &AssignmentPlan) -> Metrics {
    let shelter = |id: &str| {
        instance
            .shelters
            .iter()
            .find(|s| s.id == id)
            .expect("plan shelter exists")
    };
    let mut benefit = 0.0;
    let mut cost = 0.0;
    for a in &plan.assignments {
        if a.referral {
            cost += instance.cost.assignment_referral;
            continue;
        }
        cost += instance.cost.assignment_in_house;
        let youth = instance
            .youth
            .iter()
            .find(|y| y.id == a.youth)
            .expect("plan youth exists");
        let req = youth
            .requests
            .iter()
            .find(|r| r.service == a.service)
            .expect("plan request exists");
        benefit += instance.benefit.youth_value()
            / ((1 + a.period - req.earliest) as f64 * req.frequency as f64);
    }
    for id in &plan.opened {
        let c = instance
            .opening_cost(shelter(id))
            .expect("opened shelter is a candidate");
        cost += c;
        benefit += instance.benefit.returns_multiplier * c;
    }
    for e in &plan.expansions {
        let offer = shelter(&e.shelter)
            .offers(&e.service)
            .expect("expanded service is offered");
        cost += e.units as f64 * offer.expansion_cost[e.period];
    }
    let referrals = plan.referrals();
    let in_house = plan.in_house();
    let total = referrals + in_house;
    Metrics {
        bcr: benefit / cost,
        total_cost: cost,
        total_benefit: benefit,
        referrals,
        in_house,
        utilization: if total == 0 {
            0.0
        } else {
            in_house as f64 / total as f64
        },
        shelters_opened: plan.opened.len(),
        expansion_units: plan.expansion_units(),
    }
}

fn status_name(s: MipStatus) -> &'static str {
    match s {
        MipStatus::Optimal => "optimal",
        MipStatus::Feasible => "feasible",
        MipStatus::Infeasible => "infeasible",
        MipStatus::GapLimit => "gap_limit",
        MipStatus::TimeLimit => "time_limit",
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Build, solve and evaluate one scenario.
pub fn run_scenario(
    instance: &Instance,
    scenario: &Scenario,
    settings: &SolveSettings,
) -> Result<ScenarioResult, HarnessError> {
    let inst = scenario.apply(instance);
    let descriptor = ScenarioDescriptor::new(scenario, &inst);
    let id = descriptor.id.clone();
    let built =
        build_model(&inst, &scenario.model_options()).map_err(|source| HarnessError::Build {
            scenario: id.clone(),
            source,
        })?;
    let solve_err = |message: String| HarnessError::Solve {
        scenario: id.clone(),
        message,
    };
    let start = Instant::now();
    let cfg = settings.mip_config();
    let (x, stats) = if scenario.mode == ObjectiveMode::RatioMax {
        let sol = match maximize_ratio(&built.fractional, settings.epsilon, &cfg, settings.max_iter)
        {
            Ok(s) => s,
            Err(FractionalError::Mip(MipError::LimitExceeded(s))) => {
                return Err(solve_err(format!(
                    "subproblem stopped early with status {}",
                    status_name(s.status)
                )))
            }
            Err(e) => return Err(solve_err(e.to_string())),
        };
        let gap = sol
            .iterations
            .iter()
            .map(|it| it.mip_gap)
            .fold(0.0, f64::max);
        let stats = SolverStats {
            status: "converged".into(),
            iterations: sol.iterations.len(),
            nodes: sol.total_nodes(),
            lp_iterations: sol.iterations.iter().map(|it| it.lp_iterations).sum(),
            gap: finite(gap),
            objective: sol.q_star,
            q_sequence: sol.q_sequence(),
            best_ratio: Some(sol.best_ratio),
            warnings: sol.warnings.clone(),
            wall_time_secs: None,
        };
        (sol.x_star, stats)
    } else {
        let sol = match solve_mip(&built.mip, &cfg) {
            Ok(s) => s,
            Err(MipError::LimitExceeded(s)) if s.incumbent.is_some() => *s,
            Err(e) => return Err(solve_err(e.to_string())),
        };
        let Some(x) = sol.incumbent.clone() else {
            return Err(solve_err(format!(
                "no feasible plan ({})",
                status_name(sol.status)
            )));
        };
        let stats = SolverStats {
            status: status_name(sol.status).into(),
            iterations: 1,
            nodes: sol.nodes_explored,
            lp_iterations: sol.lp_iterations,
            gap: finite(sol.gap),
            objective: sol.objective_value,
            q_sequence: Vec::new(),
            best_ratio: None,
            warnings: sol.warnings.clone(),
            wall_time_secs: None,
        };
        (x, stats)
    };
    let mut stats = stats;
    if settings.timings {
        stats.wall_time_secs = Some(start.elapsed().as_secs_f64());
    }
    let plan = decode(&inst, &built, &x).map_err(|source| HarnessError::Decode {
        scenario: id.clone(),
        source,
    })?;
    let metrics = compute_metrics(&inst, &plan);
    let recomputed = match scenario.mode {
        ObjectiveMode::BenefitMax => metrics.total_benefit,
        ObjectiveMode::CostMin => metrics.total_cost,
        ObjectiveMode::ProfitMax => metrics.total_benefit - metrics.total_cost,
        ObjectiveMode::RatioMax => metrics.bcr,
    };
    if (stats.objective - recomputed).abs()
        > settings.tolerances.duality_gap * (1.0 + stats.objective.abs())
    {
        return Err(HarnessError::Inconsistent {
            scenario: id,
            reported: stats.objective,
            recomputed,
        });
    }
    Ok(ScenarioResult {
        digest: PlanDigest {
            opened: plan.opened.clone(),
            youth_per_shelter: plan.youth_per_shelter(),
        },
        scenario: descriptor,
        metrics,
        stats,
        plan,
    })
}
