//! `bcr` command-line driver: generate instances, solve scenarios, run
//! sweeps and comparisons, and replay earlier runs from their manifests.

mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use bcr_core::harness::{
    compare_objectives, emit_report, run_all, run_scenario, Direction, HarnessError, MonotoneCheck,
    Scenario, ScenarioResult, SolveSettings, SweepAxis,
};
use bcr_core::instance::{
    generate_instance, load_instance, save_instance, GeneratorConfig, Instance, InstanceError,
};
use bcr_core::model::{LambdaScope, ModelError, ObjectiveMode};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use manifest::{RunManifest, MANIFEST_FILE};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// 2 for usage and configuration problems, 1 for solver and assertion
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Instance(_) => 2,
            CliError::Harness(HarnessError::Build { source, .. }) => match source {
                ModelError::ZeroAction | ModelError::InfeasibleLambda { .. } => 2,
                _ => 1,
            },
            CliError::Harness(HarnessError::Instance(_) | HarnessError::InvalidSetting(_)) => 2,
            CliError::Harness(_) | CliError::Assertion(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "bcr",
    version,
    about = "Benefit-to-cost ratio shelter planning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Generate a random instance from a TOML generator config.
    Generate(GenerateArgs),
    /// Solve one scenario.
    Solve(SolveArgs),
    /// Solve a family of scenarios along one parameter.
    Sweep(SweepArgs),
    /// Solve every objective mode at one λ and check the orderings.
    Compare(CompareArgs),
    /// Rerun a command from its manifest.
    Replay(ReplayArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Solve(_) => "solve",
            Command::Sweep(_) => "sweep",
            Command::Compare(_) => "compare",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateArgs {
    /// Generator settings; defaults apply to omitted keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Benefit,
    Cost,
    Profit,
    Ratio,
}

impl From<Objective> for ObjectiveMode {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Benefit => ObjectiveMode::BenefitMax,
            Objective::Cost => ObjectiveMode::CostMin,
            Objective::Profit => ObjectiveMode::ProfitMax,
            Objective::Ratio => ObjectiveMode::RatioMax,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Citywide,
    PerBorough,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFlags {
    #[arg(long, value_enum)]
    pub objective: Objective,
    /// Minimum openings: one number for every borough or a comma list in
    /// instance borough order.
    #[arg(long, default_value = "1")]
    pub lambda: String,
    #[arg(long, value_enum, default_value_t = Scope::Citywide)]
    pub scope: Scope,
    /// Keep current capacity: no openings and no expansion.
    #[arg(long)]
    pub status_quo: bool,
    /// Partial-return multiplier ρ.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Free fraction δ of status-quo capacity.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverFlags {
    /// Relative gap target for every mixed-integer solve.
    #[arg(long, default_value_t = 0.05)]
    pub gap: f64,
    /// Ratio-mode stopping tolerance ε.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Scenarios solved concurrently.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Branch-and-bound threads per solve; 1 is bit-reproducible.
    #[arg(long, default_value_t = 1)]
    pub mip_workers: usize,
    #[arg(long)]
    pub node_limit: Option<u64>,
    /// Seconds per mixed-integer solve.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Record wall-clock times in the outputs.
    #[arg(long)]
    pub timings: bool,
}

impl SolverFlags {
    fn settings(&self) -> Result<SolveSettings, CliError> {
        if !(self.gap >= 0.0) {
            return Err(CliError::Usage(format!(
                "--gap must be nonnegative, got {}",
                self.gap
            )));
        }
        if self.workers == 0 || self.mip_workers == 0 {
            return Err(CliError::Usage("worker counts must be at least 1".into()));
        }
        Ok(SolveSettings {
            gap: self.gap,
            epsilon: self.epsilon,
            scenario_workers: self.workers,
            mip_workers: self.mip_workers,
            node_limit: self.node_limit,
            time_limit_secs: self.time_limit,
            timings: self.timings,
            ..SolveSettings::default()
        })
    }
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[command(flatten)]
    pub scenario: ScenarioFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vary {
    Lambda,
    Rho,
    /// Replications with candidates placed in random boroughs; values are
    /// replication seeds.
    CostMultiplier,
    /// Youth counts; the instance must record its generator settings.
    Scale,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum)]
    pub vary: Vary,
    /// `a..b` (step 1), `a..b:step`, or a comma list.
    #[arg(long)]
    pub values: String,
    #[command(flatten)]
    pub scenario: ScenarioFlags,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareArgs {
    pub instance: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub lambda: u32,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write to this location instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse `a..b`, `a..b:step` or `x,y,z`.
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("cannot parse value range {text:?}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    if let Some((lo, rest)) = text.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((h, s)) => (num(h)?, num(s)?),
            None => (num(rest)?, 1.0),
        };
        let lo = num(lo)?;
        if !(step > 0.0) || !lo.is_finite() || !hi.is_finite() || hi < lo {
            return Err(bad());
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| lo + k as f64 * step).collect());
    }
    let v: Vec<f64> = text.split(',').map(num).collect::<Result<_, _>>()?;
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(bad());
    }
    Ok(v)
}

fn whole(v: f64, what: &str) -> Result<u64, CliError> {
    if v < 0.0 || v.fract() != 0.0 {
        return Err(CliError::Usage(format!(
            "{what} must be a nonnegative integer, got {v}"
        )));
    }
    Ok(v as u64)
}

fn parse_lambda(text: &str, instance: &Instance) -> Result<Vec<u32>, CliError> {
    let vals: Vec<u32> = text
        .split(',')
        .map(|s| s.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("cannot parse --lambda {text:?}")))?;
    match vals.len() {
        1 => Ok(vec![vals[0]; instance.boroughs.len()]),
        n if n == instance.boroughs.len() => Ok(vals),
        n => Err(CliError::Usage(format!(
            "--lambda lists {n} values but the instance has {} boroughs",
            instance.boroughs.len()
        ))),
    }
}

fn scenario(flags: &ScenarioFlags, instance: &Instance) -> Result<Scenario, CliError> {
    Ok(Scenario {
        mode: flags.objective.into(),
        lambda: parse_lambda(&flags.lambda, instance)?,
        scope: match flags.scope {
            Scope::Citywide => LambdaScope::Citywide,
            Scope::PerBorough => LambdaScope::PerBorough,
        },
        status_quo_only: flags.status_quo,
        rho: flags.rho,
        delta: flags.delta,
        borough_seed: None,
        sweep: None,
    })
}

fn summary(r: &ScenarioResult) -> String {
    format!(
        "{}: bcr {:.4} cost {:.2} referrals {} utilization {:.4} opened {}",
        r.scenario.id,
        r.metrics.bcr,
        r.metrics.total_cost,
        r.metrics.referrals,
        r.metrics.utilization,
        r.metrics.shelters_opened
    )
}

fn report(results: &[ScenarioResult], out: &Path) -> Result<(), CliError> {
    emit_report(results, out)?;
    Ok(())
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

fn absolutize(cmd: Command) -> Command {
    match cmd {
        Command::Generate(mut a) => {
            a.config = a.config.as_deref().map(absolute);
            a.out = absolute(&a.out);
            Command::Generate(a)
        }
        Command::Solve(mut a) => {
            a.instance = absolute(&a.instance);
            a.out = absolute(&a.out);
            Command::Solve(a)
        }
        Command::Sweep(mut a) => {
            a.instance = absolute(&a.instance);
            a.out = absolute(&a.out);
            Command::Sweep(a)
        }
        Command::Compare(mut a) => {
            a.instance = absolute(&a.instance);
            a.out = absolute(&a.out);
            Command::Compare(a)
        }
        Command::Replay(mut a) => {
            a.manifest = absolute(&a.manifest);
            a.out = a.out.as_deref().map(absolute);
            Command::Replay(a)
        }
    }
}

/// Parse arguments, execute, and return the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(absolutize(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: Command) -> Result<(), CliError> {
    let started = manifest::now_ms();
    let record = |output: PathBuf,
                  manifest_path: PathBuf,
                  config: Option<PathBuf>,
                  instance: Option<PathBuf>,
                  seed| {
        RunManifest {
            command: cmd.name().into(),
            invocation: cmd.clone(),
            config_path: config,
            instance_path: instance,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            tolerances: SolveSettings::default().tolerances,
            output,
            started_unix_ms: started,
            finished_unix_ms: manifest::now_ms(),
        }
        .write(&manifest_path)
    };
    match &cmd {
        Command::Generate(a) => {
            let cfg = match &a.config {
                Some(p) => {
                    let text = std::fs::read_to_string(p)
                        .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                    toml::from_str::<GeneratorConfig>(&text)
                        .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
                }
                None => GeneratorConfig::default(),
            };
            let inst = generate_instance(&cfg, a.seed)?;
            if let Some(dir) = a.out.parent() {
                std::fs::create_dir_all(dir)
                    .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            }
            save_instance(&inst, &a.out)?;
            let stem = a
                .out
                .file_stem()
                .map_or("instance".into(), |s| s.to_string_lossy().into_owned());
            let mpath = a.out.with_file_name(format!("{stem}.{MANIFEST_FILE}"));
            record(a.out.clone(), mpath, a.config.clone(), None, Some(a.seed))?;
            println!("wrote {}", a.out.display());
            Ok(())
        }
        Command::Solve(a) => {
            let inst = load_instance(&a.instance)?;
            let settings = a.solver.settings()?;
            let sc = scenario(&a.scenario, &inst)?;
            let result = run_scenario(&inst, &sc, &settings)?;
            for w in &result.stats.warnings {
                eprintln!("warning: {w}");
            }
            report(std::slice::from_ref(&result), &a.out)?;
            record(
                a.out.clone(),
                a.out.join(MANIFEST_FILE),
                None,
                Some(a.instance.clone()),
                Some(inst.seed),
            )?;
            println!("{}", summary(&result));
            Ok(())
        }
        Command::Sweep(a) => {
            let inst = load_instance(&a.instance)?;
            let settings = a.solver.settings()?;
            let base = scenario(&a.scenario, &inst)?;
            let values = parse_values(&a.values)?;
            let results = sweep(&inst, &base, a.vary, &values, &settings)?;
            report(&results, &a.out)?;
            record(
                a.out.clone(),
                a.out.join(MANIFEST_FILE),
                None,
                Some(a.instance.clone()),
                Some(inst.seed),
            )?;
            for r in &results {
                println!("{}", summary(r));
            }
            sweep_checks(&results, a.vary, &settings)
        }
        Command::Compare(a) => {
            let inst = load_instance(&a.instance)?;
            let settings = a.solver.settings()?;
            let cmp = compare_objectives(&inst, a.lambda, &settings)?;
            let solved: Vec<ScenarioResult> =
                cmp.rows.iter().filter_map(|r| r.result.clone()).collect();
            if !solved.is_empty() {
                report(&solved, &a.out)?;
            }
            std::fs::create_dir_all(&a.out)
                .map_err(|e| CliError::Io(format!("{}: {e}", a.out.display())))?;
            let table = cmp.table();
            let tpath = a.out.join("comparison.txt");
            std::fs::write(&tpath, &table)
                .map_err(|e| CliError::Io(format!("{}: {e}", tpath.display())))?;
            record(
                a.out.clone(),
                a.out.join(MANIFEST_FILE),
                None,
                Some(a.instance.clone()),
                Some(inst.seed),
            )?;
            print!("{table}");
            if let Some(f) = cmp.rows.iter().find_map(|r| r.failure.clone()) {
                return Err(CliError::Io(f));
            }
            let failed: Vec<&str> = cmp
                .checks
                .iter()
                .filter(|c| !c.holds)
                .map(|c| c.name.as_str())
                .collect();
            if failed.is_empty() {
                Ok(())
            } else if settings.gap == 0.0 {
                Err(CliError::Assertion(failed.join("; ")))
            } else {
                eprintln!(
                    "warning: orderings not met under gap {}: {}",
                    settings.gap,
                    failed.join("; ")
                );
                Ok(())
            }
        }
        Command::Replay(a) => {
            let m = RunManifest::read(&a.manifest)?;
            let mut inv = m.invocation;
            if let Some(out) = &a.out {
                match &mut inv {
                    Command::Generate(g) => g.out = out.clone(),
                    Command::Solve(s) => s.out = out.clone(),
                    Command::Sweep(s) => s.out = out.clone(),
                    Command::Compare(c) => c.out = out.clone(),
                    Command::Replay(_) => {}
                }
            }
            if matches!(inv, Command::Replay(_)) {
                return Err(CliError::Config("a manifest cannot record a replay".into()));
            }
            execute(inv)
        }
    }
}

fn sweep(
    inst: &Instance,
    base: &Scenario,
    vary: Vary,
    values: &[f64],
    settings: &SolveSettings,
) -> Result<Vec<ScenarioResult>, CliError> {
    let mut scenarios = Vec::with_capacity(values.len());
    match vary {
        Vary::Lambda => {
            for &v in values {
                let l = whole(v, "λ")? as u32;
                scenarios.push(Scenario {
                    lambda: vec![l; inst.boroughs.len()],
                    sweep: Some((SweepAxis::Lambda, v)),
                    ..base.clone()
                });
            }
        }
        Vary::Rho => {
            for &v in values {
                scenarios.push(Scenario {
                    rho: Some(v),
                    sweep: Some((SweepAxis::Rho, v)),
                    ..base.clone()
                });
            }
        }
        Vary::CostMultiplier => {
            for &v in values {
                scenarios.push(Scenario {
                    borough_seed: Some(whole(v, "replication seed")?),
                    sweep: Some((SweepAxis::CostReplication, v)),
                    ..base.clone()
                });
            }
        }
        Vary::Scale => {
            let cfg = inst.generator.as_ref().ok_or_else(|| {
                CliError::Config(
                    "scale sweeps need an instance that records its generator settings".into(),
                )
            })?;
            let mut out = Vec::new();
            for &v in values {
                let n = whole(v, "youth count")? as usize;
                let scaled = generate_instance(
                    &GeneratorConfig {
                        num_youth: n,
                        ..cfg.clone()
                    },
                    inst.seed,
                )?;
                let sc = Scenario {
                    sweep: Some((SweepAxis::Scale, v)),
                    ..base.clone()
                };
                out.push(run_scenario(&scaled, &sc, settings)?);
            }
            return Ok(out);
        }
    }
    let results: Result<Vec<_>, _> = run_all(inst, &scenarios, settings)?.into_iter().collect();
    Ok(results?)
}

fn sweep_checks(
    results: &[ScenarioResult],
    vary: Vary,
    settings: &SolveSettings,
) -> Result<(), CliError> {
    let ratio_exact = settings.gap == 0.0
        && results
            .iter()
            .all(|r| r.scenario.mode == ObjectiveMode::RatioMax);
    let check = match vary {
        Vary::Lambda => MonotoneCheck::lambda_bcr(results, settings),
        Vary::Rho => MonotoneCheck::new(
            results,
            "bcr",
            |r| r.metrics.bcr,
            Direction::Nondecreasing,
            ratio_exact,
        ),
        Vary::CostMultiplier => {
            let first = &results[0].digest.opened;
            if results.iter().all(|r| &r.digest.opened == first) {
                println!(
                    "same shelters opened in every replication: {}",
                    first.join(",")
                );
            } else {
                println!("opened shelters differ across replications");
            }
            return Ok(());
        }
        Vary::Scale => return Ok(()),
    };
    if check.holds() {
        return Ok(());
    }
    let msg = format!(
        "bcr is not {:?} along the sweep (largest violation {:e})",
        check.direction,
        check.max_violation()
    )
    .to_lowercase();
    if check.hard {
        Err(CliError::Assertion(msg))
    } else {
        eprintln!("warning: {msg}");
        Ok(())
    }
}
