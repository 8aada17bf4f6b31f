//! Plot-ready data files derived from an aggregate report.
//!
//! Every file is CSV with a header row naming its columns:
//!
//! | file | one row per | values |
//! |------|-------------|--------|
//! | `malicious-clusters-vs-cycle.csv` | scenario, mode, cycle | mean malicious clusters per round |
//! | `drop-attacks-vs-fraction.csv` | scenario, mode | drop attacks per run |
//! | `delay-attacks-vs-fraction.csv` | scenario, mode | delay attacks per run |
//! | `lifetime.csv` | scenario, mode | rounds until the first benign death |
//! | `throughput.csv` | scenario, mode | benign packets delivered per run |
//! | `timely-rate.csv` | scenario, mode | timely deliveries over generated packets |
//! | `effective-energy-rate.csv` | scenario, mode | effective over total energy |
//! | `size-density-grid.csv` | scenario, mode | the headline means against network size and density |

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use egscfo_core::sim::Mode;
use serde::Serialize;

use crate::report::{Aggregate, AggregateReport, ScenarioInfo, Stat};

pub const PLOT_FILES: [&str; 8] = [
    "malicious-clusters-vs-cycle.csv",
    "drop-attacks-vs-fraction.csv",
    "delay-attacks-vs-fraction.csv",
    "lifetime.csv",
    "throughput.csv",
    "timely-rate.csv",
    "effective-energy-rate.csv",
    "size-density-grid.csv",
];

#[derive(Serialize)]
struct CycleRow<'a> {
    scenario: &'a str,
    mode: Mode,
    cycle: u32,
    runs: usize,
    malicious_clusters: f64,
}

#[derive(Serialize)]
struct MetricRow<'a> {
    scenario: &'a str,
    mode: Mode,
    malicious_fraction: f64,
    width: f64,
    height: f64,
    node_count: usize,
    runs: usize,
    mean: f64,
    std: f64,
}

#[derive(Serialize)]
struct GridRow<'a> {
    scenario: &'a str,
    mode: Mode,
    node_count: usize,
    width: f64,
    height: f64,
    /// Nodes per 100 m².
    density: f64,
    malicious_fraction: f64,
    lifetime: f64,
    throughput: f64,
    attacks: f64,
    timely_rate: f64,
    effective_energy_rate: f64,
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut csv = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

/// Aggregates joined with their scenario, sorted for plotting along the
/// malicious fraction.
fn by_fraction(report: &AggregateReport) -> Vec<(&Aggregate, &ScenarioInfo)> {
    let mut joined: Vec<_> = report
        .aggregates
        .iter()
        .filter_map(|a| report.scenario(&a.scenario).map(|s| (a, s)))
        .collect();
    joined.sort_by(|(a, s), (b, t)| {
        a.mode
            .cmp(&b.mode)
            .then(s.width.total_cmp(&t.width))
            .then(s.height.total_cmp(&t.height))
            .then(s.node_count.cmp(&t.node_count))
            .then(s.malicious_fraction.total_cmp(&t.malicious_fraction))
    });
    joined
}

fn metric_file(path: &Path, report: &AggregateReport, pick: fn(&Aggregate) -> Stat) -> Result<()> {
    write_rows(
        path,
        by_fraction(report).into_iter().map(|(a, s)| {
            let stat = pick(a);
            MetricRow {
                scenario: &a.scenario,
                mode: a.mode,
                malicious_fraction: s.malicious_fraction,
                width: s.width,
                height: s.height,
                node_count: s.node_count,
                runs: a.runs,
                mean: stat.mean,
                std: stat.std,
            }
        }),
    )
}

/// Writes the eight plot files into `dir` and returns their paths.
pub fn emit_plots(report: &AggregateReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let paths: Vec<PathBuf> = PLOT_FILES.iter().map(|f| dir.join(f)).collect();
    write_rows(
        &paths[0],
        report.aggregates.iter().flat_map(|a| {
            a.cycles.iter().map(move |c| CycleRow {
                scenario: &a.scenario,
                mode: a.mode,
                cycle: c.cycle,
                runs: c.runs,
                malicious_clusters: c.malicious_clusters,
            })
        }),
    )?;
    metric_file(&paths[1], report, |a| a.drop_attacks)?;
    metric_file(&paths[2], report, |a| a.delay_attacks)?;
    metric_file(&paths[3], report, |a| a.lifetime)?;
    metric_file(&paths[4], report, |a| a.throughput)?;
    metric_file(&paths[5], report, |a| a.timely_rate)?;
    metric_file(&paths[6], report, |a| a.effective_energy_rate)?;
    write_rows(
        &paths[7],
        by_fraction(report).into_iter().map(|(a, s)| GridRow {
            scenario: &a.scenario,
            mode: a.mode,
            node_count: s.node_count,
            width: s.width,
            height: s.height,
            density: 100.0 * s.node_count as f64 / (s.width * s.height),
            malicious_fraction: s.malicious_fraction,
            lifetime: a.lifetime.mean,
            throughput: a.throughput.mean,
            attacks: a.attacks.mean,
            timely_rate: a.timely_rate.mean,
            effective_energy_rate: a.effective_energy_rate.mean,
        }),
    )?;
    Ok(paths)
}
