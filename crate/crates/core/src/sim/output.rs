//! CSV and JSON files for one run.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::sim::config::ScenarioConfig;
use crate::sim::engine::RunRecord;

/// `<scenario>-<seed>`, the prefix of every file a run writes.
pub fn file_stem(config: &ScenarioConfig) -> String {
    format!("{}-{}", config.name, config.seed)
}

/// Writes `rows` as CSV with a header line.
pub fn write_csv<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

fn write_csv_file<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_csv(BufWriter::new(File::create(path)?), rows)
}

/// Writes the rounds, cycles and summary of `record` into `dir`, plus the
/// node and ledger traces when they were recorded. Returns the paths.
pub fn write_run(record: &RunRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let stem = file_stem(&record.config);
    let mut written = Vec::new();
    let mut emit = |suffix: &str| {
        let path = dir.join(format!("{stem}-{suffix}"));
        written.push(path.clone());
        path
    };
    write_csv_file(&emit("rounds.csv"), &record.rounds)?;
    write_csv_file(&emit("cycles.csv"), &record.cycles)?;
    if !record.node_trace.is_empty() {
        write_csv_file(&emit("nodes.csv"), &record.node_trace)?;
    }
    if !record.ledger.is_empty() {
        write_csv_file(&emit("ledger.csv"), &record.ledger)?;
    }
    let summary = emit("summary.json");
    let mut out = BufWriter::new(File::create(&summary)?);
    serde_json::to_writer_pretty(&mut out, &record.summary)?;
    writeln!(out)?;
    out.flush()?;
    Ok(written)
}
