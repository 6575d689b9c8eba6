//! Experiment orchestration, statistics and result export for the
//! negotiation benchmarks, the power plant scenario and the GA baseline.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use mocohda::benchmark::ZdtParams;
use mocohda::cohda::Candidate;
use mocohda::cpes::{build_scenario, Scenario, Setting};
use mocohda::netsim::{build_topology, run_negotiation, SimConfig, SimError, SimResult, TopologyKind};
use mocohda::nsga2::{run_nsga2, GaConfig, GaError};
use mocohda::pareto::{hypervolume, non_dominated_indices, ParetoError, ReferencePoint};
use mocohda::problems::{Zdt, ZdtVariant};
use mocohda::seeding::derive_seed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod svg;

pub use svg::render_scatter_svg;

pub const STD_CONVENTION: &str = "sample standard deviation (n - 1); 0 for a single run";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error(transparent)]
    Pareto(#[from] ParetoError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Outcome of one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub hypervolume: f64,
    /// Always true for the GA.
    pub converged: bool,
    pub messages: Option<u64>,
    /// Mean over agents.
    pub decide_calls: Option<f64>,
    pub wall_time_s: f64,
    pub front: Vec<Vec<f64>>,
    /// Per point, one summary value per agent (mean of its decision vector).
    pub decisions: Vec<Vec<f64>>,
}

/// Seed of run `k` within an experiment.
pub fn run_seed(seed: u64, run: usize) -> u64 {
    derive_seed(seed, run as u64)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn record_from_sim(run: usize, seed: u64, result: &SimResult) -> Result<RunRecord> {
    let candidate: &Candidate = result
        .agreed_candidate()
        .or_else(|| result.candidates.iter().flatten().next())
        .ok_or_else(|| CliError::Invalid("no agent produced a candidate".into()))?;
    let front = candidate.front_objectives();
    let decisions = candidate
        .front()
        .iter()
        .map(|ind| ind.assignment().values().map(|d| mean(d.values())).collect())
        .collect();
    let decide: Vec<f64> = result.decide_calls.iter().map(|&d| d as f64).collect();
    Ok(RunRecord {
        run,
        seed,
        hypervolume: candidate.hypervolume(),
        converged: result.converged,
        messages: Some(result.messages),
        decide_calls: Some(mean(&decide)),
        wall_time_s: result.wall_time.as_secs_f64(),
        front,
        decisions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkOptions {
    pub topology: TopologyKind,
    pub serialize_messages: bool,
}

impl Default for NetworkOptions {
    fn default() -> Self {
        Self {
            topology: TopologyKind::SmallWorld { k: 2, p: 0.1 },
            serialize_messages: false,
        }
    }
}

impl NetworkOptions {
    fn sim(&self, seed: u64) -> SimConfig {
        SimConfig {
            seed,
            serialize_messages: self.serialize_messages,
            ..SimConfig::default()
        }
    }
}

/// One negotiation per run on a ZDT problem.
pub fn benchmark_run(params: &ZdtParams, net: &NetworkOptions, run: usize, seed: u64) -> Result<RunRecord> {
    let s = run_seed(seed, run);
    let topology = build_topology(params.agents, net.topology, s)?;
    let target = params
        .target()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let result = run_negotiation(params.agent_configs(s), target, &topology, &net.sim(s))?;
    record_from_sim(run, s, &result)
}

/// Runs the scenario once with run-specific agent, topology and delivery seeds.
pub fn cpes_run(scenario: &Scenario, setting: Setting, net: &NetworkOptions, run: usize, seed: u64) -> Result<RunRecord> {
    let s = run_seed(seed, run);
    let topology = build_topology(scenario.num_agents(), net.topology, s)?;
    let result = run_negotiation(scenario.make_setting(setting, s), scenario.target_spec(), &topology, &net.sim(s))?;
    record_from_sim(run, s, &result)
}

pub fn baseline_run(variant: ZdtVariant, ga: &GaConfig, run: usize, seed: u64) -> Result<RunRecord> {
    let s = run_seed(seed, run);
    let cfg = GaConfig { seed: s, ..ga.clone() };
    let start = Instant::now();
    let front = run_nsga2(&Zdt::new(variant), &cfg)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let objectives: Vec<Vec<f64>> = front.iter().map(|p| p.objectives.values().to_vec()).collect();
    Ok(RunRecord {
        run,
        seed: s,
        hypervolume: hypervolume(&objectives, &Zdt::reference_point())?,
        converged: true,
        messages: None,
        decide_calls: None,
        wall_time_s,
        decisions: front.iter().map(|p| p.x.clone()).collect(),
        front: objectives,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Metric {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(Self {
            mean,
            std,
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub runs: usize,
    pub converged_runs: usize,
    pub std_convention: String,
    pub hypervolume: Metric,
    /// Hypervolume of the non-dominated union of all fronts.
    pub aggregated_hypervolume: f64,
    pub messages: Option<Metric>,
    pub decide_calls: Option<Metric>,
    pub wall_time_s: Metric,
}

/// Non-dominated points of the union of all fronts.
pub fn aggregated_front(records: &[RunRecord]) -> Vec<Vec<f64>> {
    let union: Vec<&Vec<f64>> = records.iter().flat_map(|r| &r.front).collect();
    non_dominated_indices(&union).into_iter().map(|i| union[i].clone()).collect()
}

pub fn aggregate_stats(records: &[RunRecord], reference: &ReferencePoint) -> Result<StatsSummary> {
    if records.is_empty() {
        return Err(CliError::Invalid("no runs to aggregate".into()));
    }
    let pick = |f: &dyn Fn(&RunRecord) -> f64| records.iter().map(f).collect::<Vec<_>>();
    let messages: Vec<f64> = records.iter().filter_map(|r| r.messages.map(|m| m as f64)).collect();
    let decides: Vec<f64> = records.iter().filter_map(|r| r.decide_calls).collect();
    Ok(StatsSummary {
        runs: records.len(),
        converged_runs: records.iter().filter(|r| r.converged).count(),
        std_convention: STD_CONVENTION.to_string(),
        hypervolume: Metric::of(&pick(&|r| r.hypervolume)).expect("nonempty"),
        aggregated_hypervolume: hypervolume(&aggregated_front(records), reference)?,
        messages: Metric::of(&messages),
        decide_calls: Metric::of(&decides),
        wall_time_s: Metric::of(&pick(&|r| r.wall_time_s)).expect("nonempty"),
    })
}

/// Writes one row per front point: objectives, run id, then one summary
/// value per agent.
pub fn export_front_csv(record: &RunRecord, path: &Path) -> Result<()> {
    let first = record
        .front
        .first()
        .ok_or_else(|| CliError::Invalid("cannot export an empty front".into()))?;
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let agents = record.decisions.first().map_or(0, Vec::len);
    let header: Vec<String> = (1..=first.len())
        .map(|i| format!("objective_{i}"))
        .chain(std::iter::once("run_id".to_string()))
        .chain((0..agents).map(|a| format!("agent_{a}")))
        .collect();
    w.write_record(&header).map_err(csv_err)?;
    for (k, point) in record.front.iter().enumerate() {
        let decisions = record.decisions.get(k).map_or(&[][..], Vec::as_slice);
        let row: Vec<String> = point
            .iter()
            .map(f64::to_string)
            .chain(std::iter::once(record.run.to_string()))
            .chain(decisions.iter().map(f64::to_string))
            .collect();
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads back the objective columns of an exported front.
pub fn read_front_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let dim = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .take_while(|h| h.starts_with("objective_"))
        .count();
    let mut front = Vec::new();
    for row in r.records() {
        let row = row.map_err(csv_err)?;
        let point = row
            .iter()
            .take(dim)
            .map(|v| v.parse::<f64>().map_err(|e| CliError::Invalid(format!("{}: {e}", path.display()))))
            .collect::<Result<Vec<_>>>()?;
        front.push(point);
    }
    Ok(front)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum RunStatus {
    Running,
    Completed,
    Failed { error: String },
}

/// Everything needed to reproduce an output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub problem: Option<String>,
    pub setting: Option<String>,
    pub runs: usize,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub reference_point: Vec<f64>,
    pub parameters: serde_json::Value,
    pub version: String,
    pub started_unix_s: u64,
    pub finished_unix_s: Option<u64>,
    pub completed_runs: usize,
    pub status: RunStatus,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// What `summary.json` holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub summary: StatsSummary,
    pub runs: Vec<RunSummary>,
}

/// Per-run metrics without the front, which lives in the CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub hypervolume: f64,
    pub converged: bool,
    pub messages: Option<u64>,
    pub decide_calls: Option<f64>,
    pub wall_time_s: f64,
}

impl From<&RunRecord> for RunSummary {
    fn from(r: &RunRecord) -> Self {
        Self {
            run: r.run,
            seed: r.seed,
            hypervolume: r.hypervolume,
            converged: r.converged,
            messages: r.messages,
            decide_calls: r.decide_calls,
            wall_time_s: r.wall_time_s,
        }
    }
}

pub fn front_file(run: usize) -> String {
    format!("front_run{run}.csv")
}

/// Every pair of objectives, 0-based.
pub fn projections(dim: usize) -> Vec<(usize, usize)> {
    (0..dim).flat_map(|i| ((i + 1)..dim).map(move |j| (i, j))).collect()
}

fn write_artifacts(records: &[RunRecord], reference: &ReferencePoint, out: &Path) -> Result<StatsSummary> {
    for r in records {
        export_front_csv(r, &out.join(front_file(r.run)))?;
    }
    let summary = aggregate_stats(records, reference)?;
    write_json(
        &SummaryFile {
            summary: summary.clone(),
            runs: records.iter().map(RunSummary::from).collect(),
        },
        &out.join("summary.json"),
    )?;
    let fronts: Vec<(usize, Vec<Vec<f64>>)> = records.iter().map(|r| (r.run, r.front.clone())).collect();
    for (i, j) in projections(reference.dim()) {
        render_scatter_svg(&fronts, (i, j), &out.join(format!("scatter_f{}_f{}.svg", i + 1, j + 1)))?;
    }
    Ok(summary)
}

/// A named batch of seeded runs that shares one output directory.
pub struct Experiment<'a> {
    pub command: &'a str,
    pub problem: Option<String>,
    pub setting: Option<String>,
    pub runs: usize,
    pub seed: u64,
    pub reference: ReferencePoint,
    pub parameters: serde_json::Value,
}

impl Experiment<'_> {
    /// Writes the manifest, executes every run and exports the results.
    /// A failing run leaves the manifest marked as failed.
    pub fn execute(
        &self,
        out: &Path,
        mut run: impl FnMut(usize) -> Result<RunRecord>,
        mut progress: impl FnMut(&RunRecord),
    ) -> Result<StatsSummary> {
        if self.runs == 0 {
            return Err(CliError::Invalid("at least one run is required".into()));
        }
        fs::create_dir_all(out).map_err(io_err(out))?;
        let manifest_path = out.join("manifest.json");
        let mut manifest = RunManifest {
            command: self.command.to_string(),
            problem: self.problem.clone(),
            setting: self.setting.clone(),
            runs: self.runs,
            seed: self.seed,
            seeds: (0..self.runs).map(|k| run_seed(self.seed, k)).collect(),
            reference_point: self.reference.values().to_vec(),
            parameters: self.parameters.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_s: unix_now(),
            finished_unix_s: None,
            completed_runs: 0,
            status: RunStatus::Running,
        };
        write_json(&manifest, &manifest_path)?;

        let mut records = Vec::with_capacity(self.runs);
        let outcome = (0..self.runs)
            .try_for_each(|k| {
                let r = run(k)?;
                progress(&r);
                records.push(r);
                Ok(())
            })
            .and_then(|()| write_artifacts(&records, &self.reference, out));
        manifest.completed_runs = records.len();
        manifest.finished_unix_s = Some(unix_now());
        manifest.status = match &outcome {
            Ok(_) => RunStatus::Completed,
            Err(e) => RunStatus::Failed { error: e.to_string() },
        };
        write_json(&manifest, &manifest_path)?;
        outcome
    }
}

pub fn cmd_run_benchmark(
    params: &ZdtParams,
    net: &NetworkOptions,
    runs: usize,
    seed: u64,
    out: &Path,
    progress: impl FnMut(&RunRecord),
) -> Result<StatsSummary> {
    Experiment {
        command: "run-benchmark",
        problem: Some(params.variant.to_string()),
        setting: None,
        runs,
        seed,
        reference: Zdt::reference_point(),
        parameters: serde_json::json!({ "agents": params, "network": net, "sim": SimConfig::default() }),
    }
    .execute(out, |k| benchmark_run(params, net, k, seed), progress)
}

/// The scenario is built once from `seed`; runs differ in agent, topology
/// and delivery seeds. The scenario is saved next to the results.
pub fn cmd_run_cpes(
    setting: Setting,
    net: &NetworkOptions,
    runs: usize,
    seed: u64,
    out: &Path,
    progress: impl FnMut(&RunRecord),
) -> Result<StatsSummary> {
    let scenario = build_scenario(seed);
    fs::create_dir_all(out).map_err(io_err(out))?;
    write_json(&scenario, &out.join("scenario.json"))?;
    let sample = scenario.make_setting(setting, seed);
    Experiment {
        command: "run-cpes",
        problem: Some("cpes".into()),
        setting: Some(setting.to_string()),
        runs,
        seed,
        reference: Scenario::reference_point(),
        parameters: serde_json::json!({
            "scenario": "scenario.json",
            "agents": sample.iter().map(|c| serde_json::json!({
                "id": c.id,
                "pick": format!("{:?}", c.pick),
                "mutate": format!("{:?}", c.mutate),
                "min_change": c.min_change,
                "num_iterations": c.num_iterations,
                "num_solution_points": c.num_solution_points,
            })).collect::<Vec<_>>(),
            "network": net,
            "sim": SimConfig::default(),
        }),
    }
    .execute(out, |k| cpes_run(&scenario, setting, net, k, seed), progress)
}

pub fn cmd_run_baseline(
    variant: ZdtVariant,
    ga: &GaConfig,
    runs: usize,
    seed: u64,
    out: &Path,
    progress: impl FnMut(&RunRecord),
) -> Result<StatsSummary> {
    Experiment {
        command: "run-baseline",
        problem: Some(variant.to_string()),
        setting: None,
        runs,
        seed,
        reference: Zdt::reference_point(),
        parameters: serde_json::json!({ "ga": ga }),
    }
    .execute(out, |k| baseline_run(variant, ga, k, seed), progress)
}

/// Rebuilds the summary and plots of a finished output directory from its
/// manifest, per-run metrics and front files.
pub fn cmd_report(input: &Path, out: &Path) -> Result<StatsSummary> {
    let manifest: RunManifest = read_json(&input.join("manifest.json"))?;
    if manifest.status != RunStatus::Completed {
        return Err(CliError::Invalid(format!(
            "{} is not a completed run ({:?})",
            input.display(),
            manifest.status
        )));
    }
    let summary: SummaryFile = read_json(&input.join("summary.json"))?;
    let reference = ReferencePoint::new(manifest.reference_point.clone())?;
    let mut records = Vec::with_capacity(summary.runs.len());
    for r in &summary.runs {
        let front = read_front_csv(&input.join(front_file(r.run)))?;
        records.push(RunRecord {
            run: r.run,
            seed: r.seed,
            hypervolume: hypervolume(&front, &reference)?,
            converged: r.converged,
            messages: r.messages,
            decide_calls: r.decide_calls,
            wall_time_s: r.wall_time_s,
            front,
            decisions: Vec::new(),
        });
    }
    fs::create_dir_all(out).map_err(io_err(out))?;
    let stats = aggregate_stats(&records, &reference)?;
    let fronts: Vec<(usize, Vec<Vec<f64>>)> = records.iter().map(|r| (r.run, r.front.clone())).collect();
    for (i, j) in projections(reference.dim()) {
        render_scatter_svg(&fronts, (i, j), &out.join(format!("scatter_f{}_f{}.svg", i + 1, j + 1)))?;
    }
    write_json(
        &SummaryFile {
            summary: stats.clone(),
            runs: records.iter().map(RunSummary::from).collect(),
        },
        &out.join("summary.json"),
    )?;
    Ok(stats)
}
