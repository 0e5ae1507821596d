use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::sweep::{le, sort_results, Direction};
use super::{HarnessError, ScenarioResult, SweepAxis};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CsvRow {
    pub scenario_id: String,
    pub objective_mode: String,
    pub lambda: String,
    pub rho: f64,
    pub delta: f64,
    pub num_youth: usize,
    pub bcr: f64,
    pub total_cost: f64,
    pub referrals: usize,
    pub utilization: f64,
    pub shelters_opened: usize,
    pub iterations: usize,
    pub wall_time: Option<f64>,
}

impl From<&ScenarioResult> for CsvRow {
    fn from(r: &ScenarioResult) -> Self {
        Self {
            scenario_id: r.scenario.id.clone(),
            objective_mode: r.scenario.mode.to_string(),
            lambda: lambda_label(&r.scenario.lambda),
            rho: r.scenario.rho,
            delta: r.scenario.delta,
            num_youth: r.scenario.num_youth,
            bcr: r.metrics.bcr,
            total_cost: r.metrics.total_cost,
            referrals: r.metrics.referrals,
            utilization: r.metrics.utilization,
            shelters_opened: r.metrics.shelters_opened,
            iterations: r.stats.iterations,
            wall_time: r.stats.wall_time_secs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesRow {
    pub parameter: f64,
    pub bcr: f64,
    pub total_cost: f64,
    pub utilization: f64,
    pub referrals: usize,
    pub shelters_opened: usize,
    /// Whether BCR moved in the expected direction from the previous row;
    /// empty for axes without one.
    pub monotone: Option<bool>,
}

fn lambda_label(lambda: &[u32]) -> String {
    if lambda.windows(2).all(|w| w[0] == w[1]) {
        lambda.first().copied().unwrap_or(0).to_string()
    } else {
        lambda
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(";")
    }
}

fn expected_direction(axis: SweepAxis) -> Option<Direction> {
    match axis {
        SweepAxis::Lambda => Some(Direction::Nonincreasing),
        SweepAxis::Rho => Some(Direction::Nondecreasing),
        SweepAxis::CostReplication | SweepAxis::Scale => None,
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let err = |e: csv::Error| HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(io(path))
}

/// Write `results.csv`, one JSON document per scenario under `scenarios/`,
/// and a `series_<axis>_<mode>.csv` per swept axis and mode. Returns the
/// paths written.
pub fn emit_report(
    results: &[ScenarioResult],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    if results.is_empty() {
        return Err(HarnessError::EmptyResults);
    }
    let mut sorted = results.to_vec();
    sort_results(&mut sorted);
    let scen_dir = out_dir.join("scenarios");
    fs::create_dir_all(&scen_dir).map_err(io(&scen_dir))?;
    let mut written = Vec::new();

    let csv_path = out_dir.join("results.csv");
    let rows: Vec<CsvRow> = sorted.iter().map(CsvRow::from).collect();
    write_csv(&csv_path, &rows)?;
    written.push(csv_path);

    for r in &sorted {
        let path = scen_dir.join(format!("{}.json", r.scenario.id));
        let mut text = serde_json::to_string_pretty(r).map_err(|e| HarnessError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        text.push('\n');
        fs::write(&path, text).map_err(io(&path))?;
        written.push(path);
    }

    let mut series: BTreeMap<(SweepAxis, String), Vec<&ScenarioResult>> = BTreeMap::new();
    for r in &sorted {
        if let Some((axis, _)) = r.scenario.sweep {
            series
                .entry((axis, r.scenario.mode.to_string()))
                .or_default()
                .push(r);
        }
    }
    for ((axis, mode), group) in series {
        let dir = expected_direction(axis);
        let rows: Vec<SeriesRow> = group
            .iter()
            .enumerate()
            .map(|(k, r)| SeriesRow {
                parameter: r.scenario.sweep.map_or(0.0, |(_, v)| v),
                bcr: r.metrics.bcr,
                total_cost: r.metrics.total_cost,
                utilization: r.metrics.utilization,
                referrals: r.metrics.referrals,
                shelters_opened: r.metrics.shelters_opened,
                monotone: dir.map(|d| {
                    k == 0 || {
                        let (p, v) = (group[k - 1].metrics.bcr, r.metrics.bcr);
                        match d {
                            Direction::Nonincreasing => le(v, p),
                            Direction::Nondecreasing => le(p, v),
                        }
                    }
                }),
            })
            .collect();
        let path = out_dir.join(format!("series_{}_{}.csv", axis.as_str(), mode));
        write_csv(&path, &rows)?;
        written.push(path);
    }
    Ok(written)
}
