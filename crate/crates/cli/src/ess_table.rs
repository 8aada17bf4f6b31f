//! Tabulating the stable head probability over parameter ranges.

use std::io::Write;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use egscfo_core::game::{ess_probability, ess_probability_unclamped};
use egscfo_core::GameContext;
use serde::Serialize;

/// Inclusive range written `start:end:step`, `start:end` (step 1) or a
/// single value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl FromStr for Range {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>().with_context(|| format!("`{p}` in range `{s}` is not a number")))
            .collect::<Result<_>>()?;
        let (start, end, step) = match parts[..] {
            [v] => (v, v, 1.0),
            [a, b] => (a, b, 1.0),
            [a, b, c] => (a, b, c),
            _ => bail!("range `{s}` must look like start:end[:step]"),
        };
        if !(step > 0.0 && start <= end && start.is_finite() && end.is_finite()) {
            bail!("range `{s}` needs start <= end and a positive step");
        }
        Ok(Self { start, end, step })
    }
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EssRow {
    pub players: usize,
    pub w: f64,
    pub t_avr: f64,
    /// Interior rest point of the replicator dynamics.
    pub p_rest: f64,
    /// The same after clamping, as used for election.
    pub p_ch: f64,
}

pub fn tabulate(players: Range, w: Range, t_avr: Range) -> Result<Vec<EssRow>> {
    let mut rows = Vec::new();
    for n in players.values() {
        if n.fract() != 0.0 || n < 2.0 {
            bail!("player counts must be integers of at least 2, got {n}");
        }
        for &w in &w.values() {
            for &t in &t_avr.values() {
                let ctx = GameContext {
                    players: n as usize,
                    energy_ratio: w,
                    suspicious_trust: t,
                };
                rows.push(EssRow {
                    players: ctx.players,
                    w,
                    t_avr: t,
                    p_rest: ess_probability_unclamped(&ctx)?,
                    p_ch: ess_probability(&ctx)?,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_table(rows: &[EssRow], out: impl Write) -> Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}
