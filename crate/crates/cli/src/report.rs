//! Running a plan and reducing its runs to per-scenario statistics.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use egscfo_core::sim::output::write_run;
use egscfo_core::sim::{run_with, Mode};
use egscfo_core::{FuzzyTrustEvaluator, RunSummary, ScenarioConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::plan::ExperimentPlan;

pub const REPORT_FILE: &str = "report.json";
pub const AGGREGATE_FILE: &str = "aggregate.csv";

/// Sample mean and standard deviation (n - 1 denominator; 0 for one sample).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioInfo {
    pub name: String,
    pub malicious_fraction: f64,
    pub width: f64,
    pub height: f64,
    pub node_count: usize,
}

impl ScenarioInfo {
    fn of(config: &ScenarioConfig) -> Self {
        Self {
            name: config.name.clone(),
            malicious_fraction: config.malicious_fraction,
            width: config.width,
            height: config.height,
            node_count: config.node_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub scenario: String,
    pub mode: Mode,
    pub seed: u64,
    pub summary: RunSummary,
    /// Mean malicious clusters per round, one entry per cycle.
    pub malicious_clusters: Vec<f64>,
    /// Raw files, relative to the output directory.
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub scenario: String,
    pub mode: Mode,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleStat {
    pub cycle: u32,
    /// Runs that reached this cycle.
    pub runs: usize,
    pub malicious_clusters: f64,
}

/// Statistics of one (scenario, mode) pair over its completed runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub scenario: String,
    pub mode: Mode,
    pub runs: usize,
    /// Rounds survived by the first benign node to die; the run length
    /// when none died.
    pub lifetime: Stat,
    pub throughput: Stat,
    pub drop_attacks: Stat,
    pub delay_attacks: Stat,
    pub attacks: Stat,
    pub timely_rate: Stat,
    pub effective_energy_rate: Stat,
    pub cycles: Vec<CycleStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub plan: String,
    pub seeds: Vec<u64>,
    pub modes: Vec<Mode>,
    pub scenarios: Vec<ScenarioInfo>,
    pub runs: Vec<RunEntry>,
    pub failures: Vec<RunFailure>,
    pub aggregates: Vec<Aggregate>,
}

impl AggregateReport {
    pub fn scenario(&self, name: &str) -> Option<&ScenarioInfo> {
        self.scenarios.iter().find(|s| s.name == name)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).with_context(|| format!("cannot open report {}", path.display()))?;
        serde_json::from_reader(std::io::BufReader::new(file))
            .with_context(|| format!("cannot parse report {}", path.display()))
    }
}

pub fn lifetime_of(summary: &RunSummary) -> f64 {
    f64::from(summary.lifetime.unwrap_or(summary.rounds))
}

fn aggregate(scenario: &str, mode: Mode, runs: &[&RunEntry]) -> Aggregate {
    let stat = |f: &dyn Fn(&RunSummary) -> f64| Stat::of(&runs.iter().map(|r| f(&r.summary)).collect::<Vec<_>>());
    let longest = runs.iter().map(|r| r.malicious_clusters.len()).max().unwrap_or(0);
    let cycles = (0..longest)
        .map(|k| {
            let values: Vec<f64> = runs.iter().filter_map(|r| r.malicious_clusters.get(k).copied()).collect();
            CycleStat {
                cycle: k as u32,
                runs: values.len(),
                malicious_clusters: Stat::of(&values).mean,
            }
        })
        .collect();
    Aggregate {
        scenario: scenario.to_string(),
        mode,
        runs: runs.len(),
        lifetime: stat(&lifetime_of),
        throughput: stat(&|s| s.throughput as f64),
        drop_attacks: stat(&|s| s.drop_attacks as f64),
        delay_attacks: stat(&|s| s.delay_attacks as f64),
        attacks: stat(&|s| s.attacks() as f64),
        timely_rate: stat(&|s| s.timely_rate),
        effective_energy_rate: stat(&|s| s.effective_energy_rate),
        cycles,
    }
}

/// Groups completed runs by scenario and mode in plan order.
pub fn aggregate_runs(scenarios: &[ScenarioInfo], modes: &[Mode], runs: &[RunEntry]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(&str, Mode), Vec<&RunEntry>> = BTreeMap::new();
    for r in runs {
        groups.entry((r.scenario.as_str(), r.mode)).or_default().push(r);
    }
    scenarios
        .iter()
        .flat_map(|s| modes.iter().map(move |&m| (s.name.as_str(), m)))
        .filter_map(|key| groups.get(&key).map(|runs| aggregate(key.0, key.1, runs)))
        .collect()
}

/// Directory of the raw files of one mode.
pub fn raw_dir(out: &Path, mode: Mode) -> PathBuf {
    out.join("raw").join(mode.as_str())
}

fn run_one(config: &ScenarioConfig, plan: &ExperimentPlan, fls: &FuzzyTrustEvaluator, out: &Path) -> Result<RunEntry> {
    let record = run_with(config, fls, plan.trace)?;
    let dir = raw_dir(out, config.mode);
    let files = write_run(&record, &dir)?
        .into_iter()
        .map(|p| p.strip_prefix(out).map(Path::to_path_buf).unwrap_or(p))
        .collect();
    Ok(RunEntry {
        scenario: config.name.clone(),
        mode: config.mode,
        seed: config.seed,
        malicious_clusters: record.cycles.iter().map(|c| c.malicious_clusters).collect(),
        summary: record.summary,
        files,
    })
}

/// Runs every (scenario, mode, seed) of `plan` into `out` and writes the
/// report and the aggregate table. A failed run is recorded and the rest
/// continue.
pub fn execute(plan: &ExperimentPlan, out: &Path, jobs: Option<usize>) -> Result<AggregateReport> {
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let fls = FuzzyTrustEvaluator::new(&plan.fuzzy)?;
    let configs = plan.runs();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build()?;
    let outcomes: Vec<Result<RunEntry, RunFailure>> = pool.install(|| {
        configs
            .par_iter()
            .map(|c| {
                run_one(c, plan, &fls, out).map_err(|e| RunFailure {
                    scenario: c.name.clone(),
                    mode: c.mode,
                    seed: c.seed,
                    error: format!("{e:#}"),
                })
            })
            .collect()
    });
    let (mut runs, mut failures) = (Vec::new(), Vec::new());
    for outcome in outcomes {
        match outcome {
            Ok(r) => runs.push(r),
            Err(f) => failures.push(f),
        }
    }
    let scenarios: Vec<ScenarioInfo> = plan.scenarios().iter().map(|p| ScenarioInfo::of(&p.config)).collect();
    let aggregates = aggregate_runs(&scenarios, &plan.modes, &runs);
    let report = AggregateReport {
        plan: plan.name.clone(),
        seeds: plan.seeds.clone(),
        modes: plan.modes.clone(),
        scenarios,
        runs,
        failures,
        aggregates,
    };
    write_report(&report, out)?;
    Ok(report)
}

#[derive(Serialize)]
struct AggregateRow<'a> {
    scenario: &'a str,
    mode: Mode,
    runs: usize,
    lifetime_mean: f64,
    lifetime_std: f64,
    throughput_mean: f64,
    throughput_std: f64,
    drop_attacks_mean: f64,
    drop_attacks_std: f64,
    delay_attacks_mean: f64,
    delay_attacks_std: f64,
    attacks_mean: f64,
    attacks_std: f64,
    timely_rate_mean: f64,
    timely_rate_std: f64,
    effective_energy_rate_mean: f64,
    effective_energy_rate_std: f64,
}

fn write_report(report: &AggregateReport, out: &Path) -> Result<()> {
    let mut json = BufWriter::new(File::create(out.join(REPORT_FILE))?);
    serde_json::to_writer_pretty(&mut json, report)?;
    writeln!(json)?;
    json.flush()?;
    let mut csv = csv::Writer::from_path(out.join(AGGREGATE_FILE))?;
    for a in &report.aggregates {
        csv.serialize(AggregateRow {
            scenario: &a.scenario,
            mode: a.mode,
            runs: a.runs,
            lifetime_mean: a.lifetime.mean,
            lifetime_std: a.lifetime.std,
            throughput_mean: a.throughput.mean,
            throughput_std: a.throughput.std,
            drop_attacks_mean: a.drop_attacks.mean,
            drop_attacks_std: a.drop_attacks.std,
            delay_attacks_mean: a.delay_attacks.mean,
            delay_attacks_std: a.delay_attacks.std,
            attacks_mean: a.attacks.mean,
            attacks_std: a.attacks.std,
            timely_rate_mean: a.timely_rate.mean,
            timely_rate_std: a.timely_rate.std,
            effective_energy_rate_mean: a.effective_energy_rate.mean,
            effective_energy_rate_std: a.effective_energy_rate.std,
        })?;
    }
    csv.flush()?;
    Ok(())
}
