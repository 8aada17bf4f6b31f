//! Scenario parameters for one simulation run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outlier::OutlierThresholds;
use crate::radio::{ChannelModel, Position, RadioParams};
use crate::trust::EvidenceHorizon;

/// Which protocol variant a run simulates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Fuzzy trust, outlier gating, recommendations and game-driven election.
    #[default]
    Egscfo,
    /// Fuzzy trust and reliability-based joining without outlier gating.
    FuzzyOnly,
    /// Fixed head probability, nearest-head joining, no monitoring.
    Baseline,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Egscfo, Mode::FuzzyOnly, Mode::Baseline];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Egscfo => "egscfo",
            Mode::FuzzyOnly => "fuzzy-only",
            Mode::Baseline => "baseline",
        }
    }

    pub fn monitors(self) -> bool {
        self != Mode::Baseline
    }

    pub fn gates_outliers(self) -> bool {
        self == Mode::Egscfo
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown mode `{s}` (expected egscfo, fuzzy-only or baseline)")))
    }
}

/// Behaviour of malicious heads when forwarding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackProfile {
    pub drop_probability: f64,
    /// Applied to forwards that were not dropped.
    pub delay_probability: f64,
    /// Longest malicious delay, s.
    pub max_delay: f64,
}

impl Default for AttackProfile {
    fn default() -> Self {
        Self {
            drop_probability: 0.2,
            delay_probability: 0.2,
            max_delay: 10.0,
        }
    }
}

/// Monitoring noise on a bad channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    /// A clean forward goes unheard.
    pub miss_probability: f64,
    /// A clean forward is retransmitted after half the overhearing window.
    pub retransmit_probability: f64,
}

impl Default for NoiseProfile {
    fn default() -> Self {
        Self {
            miss_probability: 0.2,
            retransmit_probability: 0.2,
        }
    }
}

/// Where a node that found no acceptable candidate and cannot declare
/// itself looks next.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FallbackPolicy {
    /// Join the highest-trust candidate and flag the join.
    Degraded,
    /// Try every elected head in distance order first, then degrade.
    SearchAllHeads,
    /// Try every elected head in distance order, then send straight to the
    /// base station without taking the head role.
    #[default]
    DirectToBase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub mode: Mode,
    pub seed: u64,
    /// Deployment area width and height, m.
    pub width: f64,
    pub height: f64,
    pub node_count: usize,
    pub malicious_fraction: f64,
    /// Base station position; east of the area when unset.
    pub base_station: Option<Position>,
    /// Distance of the base station east of the area when not set explicitly, m.
    pub base_station_offset: f64,
    pub packet_bits: u32,
    pub control_bits: u32,
    /// Number of nearest heads a node considers.
    pub candidate_heads: usize,
    pub p_int: f64,
    pub rounds_per_cycle: u32,
    /// Initial energy per node, J.
    pub initial_energy: f64,
    /// Head energy over member energy used by the election game.
    pub energy_ratio: f64,
    /// Election broadcast range, m; the area diagonal when unset.
    pub broadcast_range: Option<f64>,
    /// Hard stop in case benign nodes outlive the energy budget.
    pub max_rounds: u32,
    /// Distinct past heads remembered for the election game.
    pub past_head_memory: usize,
    pub evidence_horizon: EvidenceHorizon,
    pub fallback: FallbackPolicy,
    pub radio: RadioParams,
    pub channel: ChannelModel,
    pub outlier: OutlierThresholds,
    pub attack: AttackProfile,
    pub noise: NoiseProfile,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            mode: Mode::Egscfo,
            seed: 1,
            width: 100.0,
            height: 100.0,
            node_count: 100,
            malicious_fraction: 0.2,
            base_station: None,
            base_station_offset: 25.0,
            packet_bits: 3000,
            control_bits: 300,
            candidate_heads: 2,
            p_int: 0.07,
            rounds_per_cycle: 50,
            initial_energy: 2.0,
            energy_ratio: 6.0,
            broadcast_range: None,
            max_rounds: 50_000,
            past_head_memory: 20,
            evidence_horizon: EvidenceHorizon::Cumulative,
            fallback: FallbackPolicy::default(),
            radio: RadioParams::default(),
            channel: ChannelModel::default(),
            outlier: OutlierThresholds::default(),
            attack: AttackProfile::default(),
            noise: NoiseProfile::default(),
        }
    }
}

fn probability(problems: &mut Vec<String>, name: &str, value: f64) {
    if !(0.0..=1.0).contains(&value) {
        problems.push(format!("{name} must lie in [0, 1], got {value}"));
    }
}

fn positive(problems: &mut Vec<String>, name: &str, value: f64) {
    if !(value.is_finite() && value > 0.0) {
        problems.push(format!("{name} must be positive and finite, got {value}"));
    }
}

impl ScenarioConfig {
    pub fn base_station_position(&self) -> Position {
        self.base_station
            .unwrap_or(Position::new(self.width + self.base_station_offset, self.height / 2.0))
    }

    pub fn broadcast_distance(&self) -> f64 {
        self.broadcast_range.unwrap_or_else(|| self.width.hypot(self.height))
    }

    pub fn malicious_count(&self) -> usize {
        (self.malicious_fraction * self.node_count as f64 + 1e-9).floor() as usize
    }

    /// Every violated invariant, in a stable order.
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if self.name.is_empty() {
            p.push("scenario name must not be empty".into());
        }
        positive(&mut p, "width", self.width);
        positive(&mut p, "height", self.height);
        if self.node_count < 4 {
            p.push(format!("node_count must be at least 4, got {}", self.node_count));
        }
        if !(0.0..1.0).contains(&self.malicious_fraction) {
            p.push(format!("malicious_fraction must lie in [0, 1), got {}", self.malicious_fraction));
        }
        if !(self.base_station_offset.is_finite() && self.base_station_offset >= 0.0) {
            p.push(format!("base station offset must be non-negative, got {}", self.base_station_offset));
        }
        if let Some(bs) = self.base_station {
            if !(bs.x.is_finite() && bs.y.is_finite()) {
                p.push("base station position must be finite".into());
            }
        }
        if self.packet_bits == 0 {
            p.push("packet size must be positive".into());
        }
        if self.control_bits == 0 {
            p.push("control packet size must be positive".into());
        }
        if self.candidate_heads == 0 {
            p.push("N_NCH must be at least 1".into());
        }
        if !(self.p_int > 0.0 && self.p_int < 1.0) {
            p.push(format!("p_int must lie in (0, 1), got {}", self.p_int));
        }
        if self.rounds_per_cycle == 0 {
            p.push("rounds per cycle must be positive".into());
        }
        positive(&mut p, "E0", self.initial_energy);
        if !(self.energy_ratio.is_finite() && self.energy_ratio > 1.0) {
            p.push(format!("w must exceed 1, got {}", self.energy_ratio));
        }
        if let Some(r) = self.broadcast_range {
            positive(&mut p, "broadcast range", r);
        }
        if self.max_rounds == 0 {
            p.push("max_rounds must be positive".into());
        }
        if let EvidenceHorizon::Window(0) = self.evidence_horizon {
            p.push("evidence window must be positive".into());
        }
        self.radio.validate(&mut p);
        self.channel.validate(&mut p);
        self.outlier.validate(&mut p);
        probability(&mut p, "P_DP", self.attack.drop_probability);
        probability(&mut p, "P_DL", self.attack.delay_probability);
        positive(&mut p, "attack D_m", self.attack.max_delay);
        if self.attack.max_delay > self.radio.d_max_overhear {
            p.push(format!(
                "attack delay bound {} s exceeds the overhearing window {} s",
                self.attack.max_delay, self.radio.d_max_overhear
            ));
        }
        probability(&mut p, "P_LOS", self.noise.miss_probability);
        probability(&mut p, "P_DEL", self.noise.retransmit_probability);
        p
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = ScenarioConfig::default();
        c.validate().unwrap();
        assert_eq!(c.malicious_count(), 20);
        assert_eq!(c.base_station_position(), Position::new(125.0, 50.0));
        assert!((c.broadcast_distance() - 20_000f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn every_problem_is_reported() {
        let c = ScenarioConfig {
            node_count: 3,
            malicious_fraction: 1.0,
            p_int: 0.0,
            ..ScenarioConfig::default()
        };
        match c.validate() {
            Err(Error::InvalidConfig(p)) => assert_eq!(p.len(), 3, "{p:?}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert!("leach".parse::<Mode>().is_err());
    }

    #[test]
    fn zero_malicious_fraction() {
        let c = ScenarioConfig {
            malicious_fraction: 0.0,
            ..ScenarioConfig::default()
        };
        assert_eq!(c.malicious_count(), 0);
    }
}
