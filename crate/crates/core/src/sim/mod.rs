//! Round-based simulation of the secure clustering protocol.

pub mod config;
pub mod draws;
pub mod engine;
pub mod metrics;
pub mod output;
pub mod world;

pub use config::{AttackProfile, FallbackPolicy, Mode, NoiseProfile, ScenarioConfig};
pub use draws::{DrawSource, DrawStream, ScriptedDraws, SeededDraws};
pub use engine::{
    attack_outcome, run, run_with, AttackOutcome, Clusters, Forward, ForwardOutcome, JoinKind, RoundOutcome,
    RunRecord, Simulation, TraceOptions, TransferEvents,
};
pub use metrics::{CycleMetrics, RoundMetrics, RunSummary};
pub use world::{EnergyEvent, EnergyUse, NodeState, Role, World};
