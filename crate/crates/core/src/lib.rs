//! Building blocks and simulator for trust-aware, game-theoretic cluster
//! head election in wireless sensor networks.

pub mod error;
pub mod fuzzy;
pub mod game;
pub mod outlier;
pub mod radio;
pub mod sim;
pub mod trust;

pub use error::{Error, Result};
pub use fuzzy::{FuzzySetDefinitions, FuzzyTrustEvaluator};
pub use game::{ElectionPolicy, GameContext, PayoffParameters};
pub use outlier::{Classification, OutlierState, OutlierThresholds};
pub use radio::{ChannelModel, ChannelState, Position, RadioParams};
pub use sim::{Mode, RunRecord, RunSummary, ScenarioConfig, Simulation};
pub use trust::{NodeId, Observation, TrustLedger, TrustRecord};
