//! Per-round counters and their run-level summaries.

use serde::{Deserialize, Serialize};

use crate::sim::config::Mode;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: u32,
    /// Heads elected this round.
    pub heads: u32,
    /// Nodes that sent straight to the base station without a head.
    pub direct_senders: u32,
    pub malicious_heads: u32,
    /// Malicious heads that served at least one member.
    pub malicious_cluster_count: u32,
    pub drop_attacks: u32,
    pub delay_attacks: u32,
    /// Data packets originated by alive benign nodes.
    pub packets_generated: u32,
    /// Benign packets that reached the base station.
    pub packets_delivered: u32,
    /// Benign packets that reached it without malicious drop or delay.
    pub packets_delivered_timely: u32,
    pub energy_spent_total: f64,
    pub energy_spent_effective: f64,
    pub alive_count: u32,
    pub alive_benign_count: u32,
    pub degraded_joins: u32,
    pub converged_count: u32,
}

/// Averages over one cycle of rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleMetrics {
    pub cycle: u32,
    pub first_round: u32,
    pub rounds: u32,
    /// Mean malicious clusters per round.
    pub malicious_clusters: f64,
    pub drop_attacks: u32,
    pub delay_attacks: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub mode: Mode,
    pub seed: u64,
    pub rounds: u32,
    /// Rounds the first benign node to die stayed alive.
    pub lifetime: Option<u32>,
    /// Round in which the last benign node died.
    pub last_benign_death: Option<u32>,
    pub throughput: u64,
    pub drop_attacks: u64,
    pub delay_attacks: u64,
    pub packets_generated: u64,
    pub packets_delivered_timely: u64,
    pub timely_rate: f64,
    pub energy_spent_total: f64,
    pub energy_spent_effective: f64,
    pub effective_energy_rate: f64,
    /// First cycle from which every cycle before the first benign death
    /// averaged zero malicious clusters.
    pub isolation_cycle: Option<u32>,
}

impl RunSummary {
    pub fn attacks(&self) -> u64 {
        self.drop_attacks + self.delay_attacks
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Groups rounds into cycles of `rounds_per_cycle`; the last may be partial.
pub fn cycle_metrics(rounds: &[RoundMetrics], rounds_per_cycle: u32) -> Vec<CycleMetrics> {
    rounds
        .chunks(rounds_per_cycle.max(1) as usize)
        .enumerate()
        .map(|(k, chunk)| CycleMetrics {
            cycle: k as u32,
            first_round: chunk[0].round,
            rounds: chunk.len() as u32,
            malicious_clusters: chunk.iter().map(|r| f64::from(r.malicious_cluster_count)).sum::<f64>()
                / chunk.len() as f64,
            drop_attacks: chunk.iter().map(|r| r.drop_attacks).sum(),
            delay_attacks: chunk.iter().map(|r| r.delay_attacks).sum(),
        })
        .collect()
}

/// First cycle after which malicious clusters stay at zero, looking only
/// at cycles that end before `first_death` (a round index).
pub fn isolation_cycle(cycles: &[CycleMetrics], first_death: Option<u32>) -> Option<u32> {
    let complete: Vec<&CycleMetrics> = cycles
        .iter()
        .filter(|c| first_death.is_none_or(|d| c.first_round + c.rounds <= d))
        .collect();
    let last_dirty = complete.iter().rposition(|c| c.malicious_clusters > 0.0);
    let start = last_dirty.map_or(0, |i| i + 1);
    complete.get(start).map(|c| c.cycle)
}

pub fn summarize(
    scenario: &str,
    mode: Mode,
    seed: u64,
    rounds: &[RoundMetrics],
    first_benign_death: Option<u32>,
    last_benign_death: Option<u32>,
    rounds_per_cycle: u32,
) -> RunSummary {
    let sum = |f: fn(&RoundMetrics) -> u32| rounds.iter().map(|r| u64::from(f(r))).sum::<u64>();
    let generated = sum(|r| r.packets_generated);
    let timely = sum(|r| r.packets_delivered_timely);
    let total: f64 = rounds.iter().map(|r| r.energy_spent_total).sum();
    let effective: f64 = rounds.iter().map(|r| r.energy_spent_effective).sum();
    let cycles = cycle_metrics(rounds, rounds_per_cycle);
    RunSummary {
        scenario: scenario.to_string(),
        mode,
        seed,
        rounds: rounds.len() as u32,
        lifetime: first_benign_death.map(|r| r + 1),
        last_benign_death,
        throughput: sum(|r| r.packets_delivered),
        drop_attacks: sum(|r| r.drop_attacks),
        delay_attacks: sum(|r| r.delay_attacks),
        packets_generated: generated,
        packets_delivered_timely: timely,
        timely_rate: ratio(timely as f64, generated as f64),
        energy_spent_total: total,
        energy_spent_effective: effective,
        effective_energy_rate: ratio(effective, total),
        isolation_cycle: isolation_cycle(&cycles, first_benign_death),
    }
}
