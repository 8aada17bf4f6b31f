//! Experiment plans: a TOML file of scenario overrides, sweeps, seeds and
//! modes. Parameter tables use their customary names and units; values are
//! converted to SI on load.

use std::collections::BTreeSet;
use std::path::Path;

use egscfo_core::radio::{NANO, PICO};
use egscfo_core::sim::{FallbackPolicy, Mode, TraceOptions};
use egscfo_core::trust::EvidenceHorizon;
use egscfo_core::{FuzzySetDefinitions, FuzzyTrustEvaluator, Position, ScenarioConfig};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("cannot read plan {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },

    #[error("cannot parse plan: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("invalid plan:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PlanFile {
    experiment: ExperimentSection,
    sweep: SweepSection,
    scenario: ScenarioSection,
    radio: RadioSection,
    channel: ChannelSection,
    outlier: OutlierSection,
    attack: AttackSection,
    noise: NoiseSection,
    fuzzy: Option<FuzzySetDefinitions>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ExperimentSection {
    name: Option<String>,
    seeds: Option<Vec<u64>>,
    modes: Option<Vec<Mode>>,
    node_trace: bool,
    ledger_trace: bool,
}

/// Values to sweep; an empty list keeps the scenario value.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweep {
    pub malicious_fraction: Vec<f64>,
    /// Side of a square deployment area, m.
    pub area: Vec<f64>,
    pub node_count: Vec<usize>,
}

type SweepSection = Sweep;

#[allow(non_snake_case)]
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ScenarioSection {
    width: Option<f64>,
    height: Option<f64>,
    node_count: Option<usize>,
    malicious_fraction: Option<f64>,
    base_station: Option<[f64; 2]>,
    base_station_offset: Option<f64>,
    packet_bits: Option<u32>,
    control_bits: Option<u32>,
    N_NCH: Option<usize>,
    p_int: Option<f64>,
    rounds_per_cycle: Option<u32>,
    E_0_J: Option<f64>,
    w: Option<f64>,
    broadcast_range: Option<f64>,
    max_rounds: Option<u32>,
    past_head_memory: Option<usize>,
    evidence_window: Option<u32>,
    fallback: Option<FallbackPolicy>,
}

#[allow(non_snake_case)]
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RadioSection {
    E_elec_nJ_per_bit: Option<f64>,
    eps_fs_pJ_per_bit_m2: Option<f64>,
    eps_amp_pJ_per_bit_m4: Option<f64>,
    E_DA_nJ_per_bit: Option<f64>,
    E_h_nJ_per_bit: Option<f64>,
    E_m_nJ_per_s: Option<f64>,
    D_m_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ChannelSection {
    alpha_0: Option<f64>,
    alpha_1: Option<f64>,
}

#[allow(non_snake_case)]
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OutlierSection {
    d_m: Option<f64>,
    d_mbg: Option<f64>,
    T_s: Option<u32>,
}

#[allow(non_snake_case)]
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct AttackSection {
    P_DP: Option<f64>,
    P_DL: Option<f64>,
    /// Longest malicious delay, s.
    D_m_s: Option<f64>,
}

#[allow(non_snake_case)]
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct NoiseSection {
    P_LOS: Option<f64>,
    P_DEL: Option<f64>,
}

fn set<T>(target: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *target = v;
    }
}

fn set_scaled(target: &mut f64, value: Option<f64>, unit: f64) {
    if let Some(v) = value {
        *target = v * unit;
    }
}

impl PlanFile {
    fn base_config(&self) -> ScenarioConfig {
        let mut c = ScenarioConfig::default();
        let s = &self.scenario;
        set(&mut c.width, s.width);
        set(&mut c.height, s.height);
        set(&mut c.node_count, s.node_count);
        set(&mut c.malicious_fraction, s.malicious_fraction);
        c.base_station = s.base_station.map(|[x, y]| Position::new(x, y));
        set(&mut c.base_station_offset, s.base_station_offset);
        set(&mut c.packet_bits, s.packet_bits);
        set(&mut c.control_bits, s.control_bits);
        set(&mut c.candidate_heads, s.N_NCH);
        set(&mut c.p_int, s.p_int);
        set(&mut c.rounds_per_cycle, s.rounds_per_cycle);
        set(&mut c.initial_energy, s.E_0_J);
        set(&mut c.energy_ratio, s.w);
        c.broadcast_range = s.broadcast_range;
        set(&mut c.max_rounds, s.max_rounds);
        set(&mut c.past_head_memory, s.past_head_memory);
        set(&mut c.evidence_horizon, s.evidence_window.map(EvidenceHorizon::Window));
        set(&mut c.fallback, s.fallback);

        let r = &self.radio;
        set_scaled(&mut c.radio.e_elec, r.E_elec_nJ_per_bit, NANO);
        set_scaled(&mut c.radio.eps_fs, r.eps_fs_pJ_per_bit_m2, PICO);
        set_scaled(&mut c.radio.eps_amp, r.eps_amp_pJ_per_bit_m4, PICO);
        set_scaled(&mut c.radio.e_da, r.E_DA_nJ_per_bit, NANO);
        set_scaled(&mut c.radio.e_h, r.E_h_nJ_per_bit, NANO);
        set_scaled(&mut c.radio.e_m, r.E_m_nJ_per_s, NANO);
        set(&mut c.radio.d_max_overhear, r.D_m_s);

        set(&mut c.channel.alpha_bad, self.channel.alpha_0);
        set(&mut c.channel.alpha_good, self.channel.alpha_1);
        set(&mut c.outlier.mean_shift, self.outlier.d_m);
        set(&mut c.outlier.group_gap, self.outlier.d_mbg);
        set(&mut c.outlier.streak_rounds, self.outlier.T_s);
        set(&mut c.attack.drop_probability, self.attack.P_DP);
        set(&mut c.attack.delay_probability, self.attack.P_DL);
        set(&mut c.attack.max_delay, self.attack.D_m_s);
        set(&mut c.noise.miss_probability, self.noise.P_LOS);
        set(&mut c.noise.retransmit_probability, self.noise.P_DEL);
        c
    }
}

/// One point of the sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioPoint {
    pub name: String,
    pub config: ScenarioConfig,
}

/// A validated plan.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub name: String,
    pub seeds: Vec<u64>,
    pub modes: Vec<Mode>,
    pub base: ScenarioConfig,
    pub sweep: Sweep,
    pub fuzzy: FuzzySetDefinitions,
    pub trace: TraceOptions,
}

/// Compact label for a float: `0.3` becomes `0.3`, `30.000000000000004` becomes `30`.
fn label(x: f64) -> String {
    format!("{}", (x * 1e6).round() / 1e6)
}

impl ExperimentPlan {
    /// Scenario grid in sweep order: fraction, then area, then node count.
    pub fn scenarios(&self) -> Vec<ScenarioPoint> {
        let swept = !(self.sweep.malicious_fraction.is_empty()
            && self.sweep.area.is_empty()
            && self.sweep.node_count.is_empty());
        let or_base = |values: &[f64], base: f64| if values.is_empty() { vec![base] } else { values.to_vec() };
        let fractions = or_base(&self.sweep.malicious_fraction, self.base.malicious_fraction);
        let areas: Vec<Option<f64>> = if self.sweep.area.is_empty() {
            vec![None]
        } else {
            self.sweep.area.iter().copied().map(Some).collect()
        };
        let counts = if self.sweep.node_count.is_empty() {
            vec![self.base.node_count]
        } else {
            self.sweep.node_count.clone()
        };
        let mut points = Vec::new();
        for &fraction in &fractions {
            for &side in &areas {
                for &count in &counts {
                    let mut config = self.base.clone();
                    config.malicious_fraction = fraction;
                    if let Some(side) = side {
                        config.width = side;
                        config.height = side;
                    }
                    config.node_count = count;
                    let name = if swept {
                        format!(
                            "{}-mf{}-a{}x{}-n{}",
                            self.name,
                            label(fraction * 100.0),
                            label(config.width),
                            label(config.height),
                            count
                        )
                    } else {
                        self.name.clone()
                    };
                    config.name = name.clone();
                    points.push(ScenarioPoint { name, config });
                }
            }
        }
        points
    }

    /// Every run, ordered by scenario, then mode, then seed.
    pub fn runs(&self) -> Vec<ScenarioConfig> {
        let mut runs = Vec::new();
        for point in self.scenarios() {
            for &mode in &self.modes {
                for &seed in &self.seeds {
                    runs.push(ScenarioConfig {
                        mode,
                        seed,
                        ..point.config.clone()
                    });
                }
            }
        }
        runs
    }

    /// Every violated invariant.
    pub fn problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            problems.push(format!("experiment name `{}` must be a non-empty file name", self.name));
        }
        if self.seeds.is_empty() {
            problems.push("experiment needs at least one seed".into());
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            problems.push("seeds must be distinct".into());
        }
        if self.modes.is_empty() {
            problems.push("experiment needs at least one mode".into());
        }
        if self.modes.iter().collect::<BTreeSet<_>>().len() != self.modes.len() {
            problems.push("modes must be distinct".into());
        }
        if let Err(e) = FuzzyTrustEvaluator::new(&self.fuzzy) {
            problems.push(format!("fuzzy: {e}"));
        }
        let mut seen = BTreeSet::new();
        for point in self.scenarios() {
            for p in point.config.problems() {
                let line = format!("{}: {p}", point.name);
                if seen.insert(line.clone()) {
                    problems.push(line);
                }
            }
        }
        problems
    }
}

/// Parses and validates plan text.
pub fn parse_plan(text: &str) -> Result<ExperimentPlan, PlanError> {
    let file: PlanFile = toml::from_str(text)?;
    let plan = ExperimentPlan {
        name: file.experiment.name.clone().unwrap_or_else(|| "default".into()),
        seeds: file.experiment.seeds.clone().unwrap_or_else(|| vec![1]),
        modes: file.experiment.modes.clone().unwrap_or_else(|| Mode::ALL.to_vec()),
        base: file.base_config(),
        sweep: file.sweep.clone(),
        fuzzy: file.fuzzy.clone().unwrap_or_default(),
        trace: TraceOptions {
            nodes: file.experiment.node_trace,
            ledger: file.experiment.ledger_trace,
            energy_events: false,
        },
    };
    let problems = plan.problems();
    if problems.is_empty() {
        Ok(plan)
    } else {
        Err(PlanError::Invalid(problems))
    }
}

pub fn load_plan(path: &Path) -> Result<ExperimentPlan, PlanError> {
    let text = std::fs::read_to_string(path).map_err(|source| PlanError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_plan(&text)
}
