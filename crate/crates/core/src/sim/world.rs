//! Node state, deployment and energy bookkeeping.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::ElectionPolicy;
use crate::outlier::{Classification, OutlierState};
use crate::radio::Position;
use crate::sim::config::ScenarioConfig;
use crate::sim::draws::{DrawSource, DrawStream};
use crate::trust::{NodeId, TrustLedger};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Head,
    Member,
    #[default]
    Idle,
}

/// What a unit of energy was spent on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyUse {
    Broadcast,
    JoinTx,
    JoinRx,
    DataTx,
    DataRx,
    Forward,
    Retransmit,
    Monitor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEvent {
    pub round: u32,
    pub node: NodeId,
    pub kind: EnergyUse,
    pub joules: f64,
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: NodeId,
    pub position: Position,
    /// Remaining energy, J.
    pub energy: f64,
    pub alive: bool,
    pub malicious: bool,
    pub role: Role,
    pub policy: ElectionPolicy,
    pub ledger: TrustLedger,
    pub outlier: OutlierState,
    /// Distinct heads joined, most recent last.
    pub past_heads: VecDeque<NodeId>,
    /// Round in which the node ran out of energy.
    pub died_in: Option<u32>,
}

impl NodeState {
    pub fn new(id: NodeId, position: Position, malicious: bool, config: &ScenarioConfig) -> Self {
        Self {
            id,
            position,
            energy: config.initial_energy,
            alive: true,
            malicious,
            role: Role::Idle,
            policy: ElectionPolicy::new(config.p_int),
            ledger: TrustLedger::new(),
            outlier: OutlierState::default(),
            past_heads: VecDeque::new(),
            died_in: None,
        }
    }

    pub fn classify(&self, target: NodeId) -> Classification {
        self.outlier.classify(self.ledger.trust(target))
    }

    /// Remembers `head` as the most recent distinct head, keeping `memory`.
    pub fn remember_head(&mut self, head: NodeId, memory: usize) {
        self.past_heads.retain(|&h| h != head);
        self.past_heads.push_back(head);
        while self.past_heads.len() > memory {
            self.past_heads.pop_front();
        }
    }

    /// Number of distinct nodes with direct evidence.
    pub fn interacted(&self) -> usize {
        self.ledger.records().filter(|r| r.counters.observed > 0).count()
    }
}

#[derive(Debug, Clone)]
pub struct World {
    pub nodes: Vec<NodeState>,
    pub base_station: Position,
    energy_log: Option<Vec<EnergyEvent>>,
}

impl World {
    /// Uniform deployment with a uniformly chosen malicious subset.
    pub fn deploy(config: &ScenarioConfig, draws: &mut impl DrawSource) -> Result<Self> {
        config.validate()?;
        let n = config.node_count;
        let positions: Vec<Position> = (0..n)
            .map(|_| {
                let x = draws.uniform(DrawStream::Setup) * config.width;
                let y = draws.uniform(DrawStream::Setup) * config.height;
                Position::new(x, y)
            })
            .collect();
        // partial Fisher-Yates over node indices
        let mut order: Vec<usize> = (0..n).collect();
        let k = config.malicious_count();
        for i in 0..k {
            let span = n - i;
            let j = i + ((draws.uniform(DrawStream::Setup) * span as f64) as usize).min(span - 1);
            order.swap(i, j);
        }
        let mut malicious = vec![false; n];
        for &i in &order[..k] {
            malicious[i] = true;
        }
        Self::from_layout(config, &positions, &malicious)
    }

    /// A world with the given positions and malicious flags.
    pub fn from_layout(config: &ScenarioConfig, positions: &[Position], malicious: &[bool]) -> Result<Self> {
        if positions.len() != malicious.len() {
            return Err(Error::InvalidConfig(vec![format!(
                "layout has {} positions but {} malicious flags",
                positions.len(),
                malicious.len()
            )]));
        }
        let nodes = positions
            .iter()
            .zip(malicious)
            .enumerate()
            .map(|(i, (&p, &m))| NodeState::new(NodeId(i as u32), p, m, config))
            .collect();
        Ok(Self {
            nodes,
            base_station: config.base_station_position(),
            energy_log: None,
        })
    }

    pub fn enable_energy_log(&mut self) {
        self.energy_log.get_or_insert_with(Vec::new);
    }

    pub fn energy_log(&self) -> Option<&[EnergyEvent]> {
        self.energy_log.as_deref()
    }

    pub fn node(&self, id: NodeId) -> &NodeState {
        &self.nodes[id.index()]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut NodeState {
        &mut self.nodes[id.index()]
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        self.node(a).position.distance(&self.node(b).position)
    }

    pub fn distance_to_base(&self, a: NodeId) -> f64 {
        self.node(a).position.distance(&self.base_station)
    }

    /// Charges `joules` to `id`. Returns false, and leaves the node dead,
    /// when it could not pay in full.
    pub fn spend(&mut self, id: NodeId, joules: f64, kind: EnergyUse, round: u32) -> bool {
        let node = &mut self.nodes[id.index()];
        if !node.alive {
            return false;
        }
        let paid = joules.min(node.energy);
        node.energy -= paid;
        let complete = paid >= joules;
        if !complete || node.energy <= 0.0 {
            node.energy = 0.0;
            node.alive = false;
            node.died_in = Some(round);
        }
        if let Some(log) = self.energy_log.as_mut() {
            log.push(EnergyEvent {
                round,
                node: id,
                kind,
                joules: paid,
            });
        }
        complete
    }

    pub fn alive_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(|n| n.alive).map(|n| n.id)
    }

    pub fn alive_benign(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive && !n.malicious).count()
    }
}
