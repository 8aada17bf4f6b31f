//! The round pipeline: election, joining, data transfer with attacks,
//! monitoring, trust updates and metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::FuzzyTrustEvaluator;
use crate::game::{ess_probability, GameContext};
use crate::outlier::{Classification, OutlierState};
use crate::radio::ChannelState;
use crate::sim::config::{AttackProfile, FallbackPolicy, Mode, ScenarioConfig};
use crate::sim::draws::{DrawSource, DrawStream, SeededDraws};
use crate::sim::metrics::{cycle_metrics, summarize, CycleMetrics, RoundMetrics, RunSummary};
use crate::sim::world::{EnergyUse, Role, World};
use crate::trust::{NodeId, Observation};

/// What a malicious head does with one forward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackOutcome {
    Dropped,
    /// Held back for this many seconds.
    Delayed(f64),
    Forwarded,
}

/// Drop first, then delay the survivors; delays are uniform on `(0, max]`.
pub fn attack_outcome(profile: &AttackProfile, mut uniform: impl FnMut() -> f64) -> AttackOutcome {
    if uniform() < profile.drop_probability {
        AttackOutcome::Dropped
    } else if uniform() < profile.delay_probability {
        AttackOutcome::Delayed((1.0 - uniform()) * profile.max_delay)
    } else {
        AttackOutcome::Forwarded
    }
}

/// How a head's fused packet left for the base station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "delay")]
pub enum ForwardOutcome {
    Clean,
    /// Sent again after half the overhearing window on a bad channel.
    Retransmitted,
    /// Held back by a malicious head.
    Delayed(f64),
    Dropped,
    /// The head ran out of energy before the packet left.
    Lost,
}

impl ForwardOutcome {
    pub fn delivered(self) -> bool {
        matches!(self, Self::Clean | Self::Retransmitted | Self::Delayed(_))
    }

    pub fn timely(self) -> bool {
        matches!(self, Self::Clean | Self::Retransmitted)
    }
}

/// How a node got its head this round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JoinKind {
    Regular,
    /// Found through the all-heads search after the candidates failed.
    Extended,
    /// Joined a candidate it does not consider acceptable.
    Degraded,
}

/// Result of the joining phase.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Clusters {
    /// Heads elected this round, ascending by id.
    pub elected: Vec<NodeId>,
    /// Nodes that found no acceptable head and send straight to the base station.
    pub direct: Vec<NodeId>,
    /// Head of every member, keyed by member.
    pub head_of: BTreeMap<NodeId, (NodeId, JoinKind)>,
}

impl Clusters {
    pub fn members_of(&self, head: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.head_of.iter().filter(move |(_, &(h, _))| h == head).map(|(&m, _)| m)
    }

    pub fn degraded(&self) -> usize {
        self.head_of.values().filter(|(_, k)| *k == JoinKind::Degraded).count()
    }
}

/// One head's forward to the base station.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub head: NodeId,
    pub channel: ChannelState,
    pub outcome: ForwardOutcome,
    /// Members whose packet reached the head.
    pub carried: Vec<NodeId>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransferEvents {
    pub forwards: Vec<Forward>,
    /// `(monitor, head, what it saw)` in monitor order.
    pub observations: Vec<(NodeId, NodeId, Observation)>,
    pub packets_generated: u32,
    pub packets_delivered: u32,
    pub packets_delivered_timely: u32,
    pub energy_effective: f64,
}

/// Everything one round produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub metrics: RoundMetrics,
    pub clusters: Clusters,
    pub events: TransferEvents,
}

/// One node at the end of one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeTraceRow {
    pub round: u32,
    pub node: u32,
    pub malicious: bool,
    pub role: Role,
    pub energy: f64,
    pub p_ch: f64,
    pub players: usize,
    pub suspicious_trust: f64,
    pub high_mean: f64,
    pub low_mean: f64,
    pub streak: u32,
    pub converged: bool,
}

/// One trust record at the end of a cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub round: u32,
    pub observer: u32,
    pub target: u32,
    pub trust: f64,
    pub dpr: Option<f64>,
    pub dlr: Option<f64>,
    pub observed: u64,
}

/// Optional outputs beyond the per-round metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraceOptions {
    pub nodes: bool,
    pub ledger: bool,
    pub energy_events: bool,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: ScenarioConfig,
    pub rounds: Vec<RoundMetrics>,
    pub cycles: Vec<CycleMetrics>,
    pub summary: RunSummary,
    pub node_trace: Vec<NodeTraceRow>,
    pub ledger: Vec<LedgerRow>,
    pub world: World,
}

pub struct Simulation<D: DrawSource = SeededDraws> {
    config: ScenarioConfig,
    fls: FuzzyTrustEvaluator,
    world: World,
    draws: D,
    round: u32,
    rounds: Vec<RoundMetrics>,
    first_benign_death: Option<u32>,
    last_benign_death: Option<u32>,
    trace: TraceOptions,
    node_trace: Vec<NodeTraceRow>,
    ledger_rows: Vec<LedgerRow>,
    round_spent: f64,
}

impl Simulation<SeededDraws> {
    /// Deploys a network from the config seed.
    pub fn new(config: ScenarioConfig, fls: FuzzyTrustEvaluator) -> Result<Self> {
        let mut draws = SeededDraws::new(config.seed, config.node_count);
        let world = World::deploy(&config, &mut draws)?;
        Ok(Self::with_world(config, fls, world, draws))
    }
}

impl<D: DrawSource> Simulation<D> {
    pub fn with_world(config: ScenarioConfig, fls: FuzzyTrustEvaluator, world: World, draws: D) -> Self {
        Self {
            config,
            fls,
            world,
            draws,
            round: 0,
            rounds: Vec::new(),
            first_benign_death: None,
            last_benign_death: None,
            trace: TraceOptions::default(),
            node_trace: Vec::new(),
            ledger_rows: Vec::new(),
            round_spent: 0.0,
        }
    }

    pub fn set_trace(&mut self, trace: TraceOptions) {
        self.trace = trace;
        if trace.energy_events {
            self.world.enable_energy_log();
        }
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn draws(&self) -> &D {
        &self.draws
    }

    pub fn finished(&self) -> bool {
        self.world.alive_benign() == 0 || self.round >= self.config.max_rounds
    }

    fn spend(&mut self, id: NodeId, joules: f64, kind: EnergyUse) -> bool {
        let node = self.world.node(id);
        if node.alive {
            self.round_spent += joules.min(node.energy);
        }
        self.world.spend(id, joules, kind, self.round)
    }

    fn uniform(&mut self, id: NodeId) -> f64 {
        self.draws.uniform(DrawStream::Node(id))
    }

    /// Game inputs as seen by `id`.
    pub fn game_context(&self, id: NodeId) -> GameContext {
        let node = self.world.node(id);
        let players = 1 + node
            .past_heads
            .iter()
            .filter(|&&h| node.classify(h) != Classification::Suspicious)
            .count();
        let (sum, count) = node
            .ledger
            .trusted_targets()
            .filter(|&(_, t)| node.outlier.classify(t) == Classification::Suspicious)
            .fold((0.0, 0usize), |(s, c), (_, t)| (s + t, c + 1));
        GameContext {
            players,
            energy_ratio: self.config.energy_ratio,
            suspicious_trust: if count == 0 { 1.0 } else { sum / count as f64 },
        }
    }

    /// Refreshes every alive node's head probability from its game.
    pub fn update_policies(&mut self) {
        for i in 0..self.world.nodes.len() {
            let id = NodeId(i as u32);
            if !self.world.node(id).alive {
                continue;
            }
            if let Ok(p) = ess_probability(&self.game_context(id)) {
                self.world.node_mut(id).policy.p_ch = p;
            }
        }
    }

    /// Eligible nodes draw against their threshold; heads pay the broadcast.
    pub fn elect_heads(&mut self) -> Vec<NodeId> {
        let r = self.round;
        let broadcast = self
            .config
            .radio
            .tx_energy(self.config.control_bits, self.config.broadcast_distance());
        let mut heads = Vec::new();
        for i in 0..self.world.nodes.len() {
            let id = NodeId(i as u32);
            let node = self.world.node(id);
            if !node.alive || !node.policy.is_eligible(r) {
                continue;
            }
            let Ok(threshold) = node.policy.threshold(r) else {
                continue;
            };
            if self.uniform(id) < threshold && self.spend(id, broadcast, EnergyUse::Broadcast) {
                let node = self.world.node_mut(id);
                node.role = Role::Head;
                node.policy.last_head_round = Some(r);
                heads.push(id);
            }
        }
        heads
    }

    /// The `candidate_heads` nearest heads, nearest first.
    fn candidates(&self, id: NodeId, heads: &[NodeId], limit: usize) -> Vec<NodeId> {
        let mut by_distance: Vec<(f64, NodeId)> = heads
            .iter()
            .filter(|&&h| self.world.node(h).alive)
            .map(|&h| (self.world.distance(id, h), h))
            .collect();
        by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        by_distance.into_iter().take(limit).map(|(_, h)| h).collect()
    }

    /// Picks a head for `id`, or `None` to send directly.
    fn choose_head(&self, id: NodeId, heads: &[NodeId]) -> Option<(NodeId, JoinKind)> {
        let candidates = self.candidates(id, heads, self.config.candidate_heads);
        let nearest = *candidates.first()?;
        let node = self.world.node(id);
        let trust = |h: NodeId| node.ledger.trust(h);
        if self.config.mode == Mode::Baseline {
            return Some((nearest, JoinKind::Regular));
        }
        let converged = self.config.mode.gates_outliers() && node.outlier.converged;
        if !converged {
            let pick = candidates.iter().copied().find(|&h| trust(h) == 0.0).unwrap_or_else(|| {
                // highest trust; the nearer one on ties
                candidates
                    .iter()
                    .copied()
                    .fold(nearest, |best, h| if trust(h) > trust(best) { h } else { best })
            });
            return Some((pick, JoinKind::Regular));
        }
        let acceptable = |pool: &[NodeId]| {
            pool.iter()
                .copied()
                .find(|&h| node.classify(h) == Classification::Trusted)
                .or_else(|| pool.iter().copied().find(|&h| trust(h) == 0.0))
        };
        if let Some(h) = acceptable(&candidates) {
            return Some((h, JoinKind::Regular));
        }
        if node.policy.is_eligible(self.round) {
            return None;
        }
        if self.config.fallback != FallbackPolicy::Degraded {
            let all = self.candidates(id, heads, usize::MAX);
            if let Some(h) = acceptable(&all) {
                return Some((h, JoinKind::Extended));
            }
        }
        if self.config.fallback == FallbackPolicy::DirectToBase {
            return None;
        }
        let pick = candidates
            .iter()
            .copied()
            .fold(nearest, |best, h| if trust(h) > trust(best) { h } else { best });
        Some((pick, JoinKind::Degraded))
    }

    /// Every alive non-head picks a head and pays for the join.
    pub fn join_clusters(&mut self, elected: Vec<NodeId>) -> Clusters {
        let control = self.config.control_bits;
        let mut clusters = Clusters {
            elected,
            ..Clusters::default()
        };
        for i in 0..self.world.nodes.len() {
            let id = NodeId(i as u32);
            let node = self.world.node(id);
            if !node.alive || node.role == Role::Head {
                continue;
            }
            match self.choose_head(id, &clusters.elected) {
                None => clusters.direct.push(id),
                Some((head, kind)) => {
                    let tx = self.config.radio.tx_energy(control, self.world.distance(id, head));
                    if !self.spend(id, tx, EnergyUse::JoinTx) {
                        continue;
                    }
                    let rx = self.config.radio.rx_energy(control);
                    if !self.spend(head, rx, EnergyUse::JoinRx) {
                        // the head died taking the request
                        clusters.direct.push(id);
                        continue;
                    }
                    self.world.node_mut(id).role = Role::Member;
                    clusters.head_of.insert(id, (head, kind));
                }
            }
        }
        clusters
    }

    /// Members send their data, heads forward (and attack), members monitor.
    pub fn transfer_phase(&mut self, clusters: &Clusters) -> TransferEvents {
        let radio = self.config.radio;
        let packet = self.config.packet_bits;
        let mut events = TransferEvents {
            packets_generated: self.world.alive_benign() as u32,
            ..TransferEvents::default()
        };

        let mut carried: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        let mut chain_energy: BTreeMap<NodeId, f64> = BTreeMap::new();
        for (&member, &(head, _)) in &clusters.head_of {
            if !self.world.node(member).alive || !self.world.node(head).alive {
                continue;
            }
            let tx = radio.tx_energy(packet, self.world.distance(member, head));
            if !self.spend(member, tx, EnergyUse::DataTx) {
                continue;
            }
            let rx = radio.rx_energy(packet);
            if !self.spend(head, rx, EnergyUse::DataRx) {
                continue;
            }
            carried.entry(head).or_default().push(member);
            chain_energy.insert(member, tx + rx);
        }

        let mut senders: Vec<NodeId> = clusters.elected.iter().chain(&clusters.direct).copied().collect();
        senders.sort();
        for head in senders {
            if !self.world.node(head).alive {
                continue;
            }
            let members = carried.remove(&head).unwrap_or_default();
            let u = self.uniform(head);
            let channel = self.config.channel.state_from_uniform(u);
            let malicious = self.world.node(head).malicious;
            let mut outcome = ForwardOutcome::Clean;
            if malicious && !members.is_empty() {
                let attack = self.config.attack;
                outcome = match attack_outcome(&attack, || self.draws.uniform(DrawStream::Node(head))) {
                    AttackOutcome::Dropped => ForwardOutcome::Dropped,
                    AttackOutcome::Delayed(d) => ForwardOutcome::Delayed(d),
                    AttackOutcome::Forwarded => ForwardOutcome::Clean,
                };
            }
            let to_base = radio.tx_energy(packet, self.world.distance_to_base(head));
            let mut forward_energy = 0.0;
            if outcome != ForwardOutcome::Dropped {
                if self.spend(head, to_base, EnergyUse::Forward) {
                    forward_energy += to_base;
                } else {
                    outcome = ForwardOutcome::Lost;
                }
            }
            if outcome == ForwardOutcome::Clean
                && channel == ChannelState::Bad
                && self.uniform(head) < self.config.noise.retransmit_probability
            {
                if self.spend(head, to_base, EnergyUse::Retransmit) {
                    forward_energy += to_base;
                    outcome = ForwardOutcome::Retransmitted;
                } else {
                    outcome = ForwardOutcome::Lost;
                }
            }

            let benign_members: Vec<NodeId> = members
                .iter()
                .copied()
                .filter(|&m| !self.world.node(m).malicious)
                .collect();
            let own = u32::from(!malicious);
            let benign_packets = benign_members.len() as u32 + own;
            if outcome.delivered() {
                events.packets_delivered += benign_packets;
            }
            if outcome.timely() {
                events.packets_delivered_timely += benign_packets;
                if benign_packets > 0 {
                    events.energy_effective +=
                        forward_energy + benign_members.iter().map(|m| chain_energy[m]).sum::<f64>();
                }
            }

            if self.config.mode.monitors() {
                self.monitor(head, channel, outcome, &members, &mut events);
            }
            events.forwards.push(Forward {
                head,
                channel,
                outcome,
                carried: members,
            });
        }
        events
    }

    fn monitor(
        &mut self,
        head: NodeId,
        channel: ChannelState,
        outcome: ForwardOutcome,
        members: &[NodeId],
        events: &mut TransferEvents,
    ) {
        let radio = self.config.radio;
        for &m in members {
            if !self.world.node(m).alive {
                continue;
            }
            let (seen, heard_after) = match outcome {
                ForwardOutcome::Dropped => (Observation::Dropped, None),
                ForwardOutcome::Lost => (Observation::Unobserved, None),
                ForwardOutcome::Delayed(d) => (Observation::Delayed, Some(d)),
                ForwardOutcome::Retransmitted => (Observation::Delayed, Some(0.5 * radio.d_max_overhear)),
                ForwardOutcome::Clean if channel == ChannelState::Good => (Observation::Delivered, Some(0.0)),
                ForwardOutcome::Clean => {
                    if self.uniform(m) < self.config.noise.miss_probability {
                        (Observation::Unobserved, None)
                    } else {
                        (Observation::Delivered, Some(0.0))
                    }
                }
            };
            let cost = radio
                .monitor_energy(heard_after, self.config.packet_bits)
                .unwrap_or(radio.d_max_overhear * radio.e_m);
            if self.spend(m, cost, EnergyUse::Monitor) {
                events.observations.push((m, head, seen));
            }
        }
    }

    /// Evidence, recommendations, outlier detection and head memory.
    pub fn trust_update_phase(&mut self, clusters: &Clusters, events: &TransferEvents) -> Result<()> {
        let r = self.round;
        let horizon = self.config.evidence_horizon;
        let mut observations = events.observations.clone();
        observations.sort_by_key(|&(m, _, _)| m);
        for (m, head, seen) in observations {
            let record = self.world.node_mut(m).ledger.record_mut(head);
            record.record_observation(seen, horizon);
            if record.counters.observed > 0 {
                record.refresh_direct_trust(&self.fls, r)?;
            }
        }

        let gates = self.config.mode.gates_outliers();
        let members: Vec<(NodeId, NodeId)> = clusters
            .head_of
            .iter()
            .map(|(&m, &(h, _))| (m, h))
            .filter(|&(m, _)| self.world.node(m).alive)
            .collect();

        if gates {
            for &(m, head) in &members {
                let node = self.world.node(m);
                if !self.world.node(head).alive
                    || !node.outlier.converged
                    || node.classify(head) != Classification::Trusted
                {
                    continue;
                }
                let recommender = node.ledger.trust(head);
                let offered: Vec<(NodeId, f64)> = self
                    .world
                    .node(head)
                    .ledger
                    .trusted_targets()
                    .filter(|&(t, _)| t != m && t != head)
                    .collect();
                let ledger = &mut self.world.node_mut(m).ledger;
                for (target, value) in offered {
                    ledger.apply_recommendation(target, recommender, value, r)?;
                }
            }

            for &(m, _) in &members {
                if !self.world.node(m).outlier.active {
                    let node = self.world.node(m);
                    let ts = node.ledger.trust_set();
                    let interacted = node.interacted();
                    let draws = &mut self.draws;
                    match OutlierState::activate(&ts, interacted, || draws.uniform(DrawStream::Node(m))) {
                        Ok(state) => self.world.node_mut(m).outlier = state,
                        Err(Error::NotReady(_)) => continue,
                        Err(e) => return Err(e),
                    }
                }
                let thresholds = self.config.outlier;
                let node = self.world.node_mut(m);
                let ts = node.ledger.trust_set();
                node.outlier.iterate_round(&ts);
                node.outlier.check_convergence(&thresholds);
            }
        }

        let memory = self.config.past_head_memory;
        for &(m, head) in &members {
            self.world.node_mut(m).remember_head(head, memory);
        }
        Ok(())
    }

    fn collect_metrics(&self, clusters: &Clusters, events: &TransferEvents) -> RoundMetrics {
        let world = &self.world;
        let malicious_heads = clusters.elected.iter().filter(|&&h| world.node(h).malicious).count();
        let malicious_clusters = clusters
            .elected
            .iter()
            .filter(|&&h| world.node(h).malicious && clusters.members_of(h).next().is_some())
            .count();
        let drops = events
            .forwards
            .iter()
            .filter(|f| f.outcome == ForwardOutcome::Dropped)
            .count();
        let delays = events
            .forwards
            .iter()
            .filter(|f| matches!(f.outcome, ForwardOutcome::Delayed(_)))
            .count();
        RoundMetrics {
            round: self.round,
            heads: clusters.elected.len() as u32,
            direct_senders: clusters.direct.len() as u32,
            malicious_heads: malicious_heads as u32,
            malicious_cluster_count: malicious_clusters as u32,
            drop_attacks: drops as u32,
            delay_attacks: delays as u32,
            packets_generated: events.packets_generated,
            packets_delivered: events.packets_delivered,
            packets_delivered_timely: events.packets_delivered_timely,
            energy_spent_total: self.round_spent,
            energy_spent_effective: events.energy_effective,
            alive_count: world.alive_ids().count() as u32,
            alive_benign_count: world.alive_benign() as u32,
            degraded_joins: clusters.degraded() as u32,
            converged_count: world.nodes.iter().filter(|n| n.alive && n.outlier.converged).count() as u32,
        }
    }

    /// Runs one full round and returns its metrics.
    pub fn step(&mut self) -> Result<RoundMetrics> {
        self.step_detailed().map(|o| o.metrics)
    }

    /// Runs one full round and returns its metrics with the phase results.
    pub fn step_detailed(&mut self) -> Result<RoundOutcome> {
        self.round_spent = 0.0;
        for node in self.world.nodes.iter_mut() {
            node.role = Role::Idle;
        }
        if self.config.mode != Mode::Baseline {
            self.update_policies();
        }
        let elected = self.elect_heads();
        let clusters = self.join_clusters(elected);
        let events = self.transfer_phase(&clusters);
        if self.config.mode.monitors() {
            self.trust_update_phase(&clusters, &events)?;
        }
        let metrics = self.collect_metrics(&clusters, &events);

        for node in &self.world.nodes {
            if !node.malicious && node.died_in == Some(self.round) {
                self.first_benign_death.get_or_insert(self.round);
                if self.world.alive_benign() == 0 {
                    self.last_benign_death = Some(self.round);
                }
            }
        }
        if self.trace.nodes {
            self.record_nodes();
        }
        self.round += 1;
        if self.trace.ledger && self.round.is_multiple_of(self.config.rounds_per_cycle) {
            self.record_ledger();
        }
        self.rounds.push(metrics);
        Ok(RoundOutcome {
            metrics,
            clusters,
            events,
        })
    }

    fn record_nodes(&mut self) {
        for i in 0..self.world.nodes.len() {
            let id = NodeId(i as u32);
            let ctx = self.game_context(id);
            let n = self.world.node(id);
            if !n.alive && n.died_in != Some(self.round) {
                continue;
            }
            self.node_trace.push(NodeTraceRow {
                round: self.round,
                node: id.0,
                malicious: n.malicious,
                role: n.role,
                energy: n.energy,
                p_ch: n.policy.p_ch,
                players: ctx.players,
                suspicious_trust: ctx.suspicious_trust,
                high_mean: n.outlier.high_mean,
                low_mean: n.outlier.low_mean,
                streak: n.outlier.streak,
                converged: n.outlier.converged,
            });
        }
    }

    fn record_ledger(&mut self) {
        let round = self.round;
        for n in &self.world.nodes {
            for rec in n.ledger.records() {
                let rates = rec.counters.rates().ok();
                self.ledger_rows.push(LedgerRow {
                    round,
                    observer: n.id.0,
                    target: rec.target.0,
                    trust: rec.trust,
                    dpr: rates.map(|r| r.0),
                    dlr: rates.map(|r| r.1),
                    observed: rec.counters.observed,
                });
            }
        }
    }

    /// Steps until every benign node is dead or the round cap is hit.
    pub fn run_to_end(mut self) -> Result<RunRecord> {
        while !self.finished() {
            self.step()?;
        }
        let summary = summarize(
            &self.config.name,
            self.config.mode,
            self.config.seed,
            &self.rounds,
            self.first_benign_death,
            self.last_benign_death,
            self.config.rounds_per_cycle,
        );
        Ok(RunRecord {
            cycles: cycle_metrics(&self.rounds, self.config.rounds_per_cycle),
            config: self.config,
            rounds: self.rounds,
            summary,
            node_trace: self.node_trace,
            ledger: self.ledger_rows,
            world: self.world,
        })
    }
}

/// Deploys and runs one scenario with the given fuzzy system.
pub fn run_with(config: &ScenarioConfig, fls: &FuzzyTrustEvaluator, trace: TraceOptions) -> Result<RunRecord> {
    let mut sim = Simulation::new(config.clone(), fls.clone())?;
    sim.set_trace(trace);
    sim.run_to_end()
}

/// Deploys and runs one scenario with the default fuzzy system.
pub fn run(config: &ScenarioConfig) -> Result<RunRecord> {
    run_with(config, &FuzzyTrustEvaluator::default(), TraceOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::Position;
    use crate::sim::draws::ScriptedDraws;

    fn line(mode: Mode, fallback: FallbackPolicy) -> ScenarioConfig {
        ScenarioConfig {
            name: "line".into(),
            mode,
            node_count: 4,
            malicious_fraction: 0.25,
            fallback,
            ..ScenarioConfig::default()
        }
    }

    /// Four nodes on the x axis, 10 m apart.
    fn scripted(config: ScenarioConfig, malicious: [bool; 4], draws: ScriptedDraws) -> Simulation<ScriptedDraws> {
        let positions: Vec<Position> = (0..4).map(|i| Position::new(10.0 * f64::from(i), 0.0)).collect();
        let world = World::from_layout(&config, &positions, &malicious).unwrap();
        Simulation::with_world(config, FuzzyTrustEvaluator::default(), world, draws)
    }

    fn converged(high: f64, low: f64) -> OutlierState {
        OutlierState {
            high_mean: high,
            low_mean: low,
            last_high_mean: high,
            last_low_mean: low,
            active: true,
            converged: true,
            streak: 61,
        }
    }

    fn set_trust(sim: &mut Simulation<ScriptedDraws>, holder: u32, target: u32, trust: f64) {
        sim.world_mut().node_mut(NodeId(holder)).ledger.record_mut(NodeId(target)).trust = trust;
    }

    #[test]
    fn attack_draws_drop_before_delay() {
        let profile = AttackProfile::default();
        let feed = |values: Vec<f64>| {
            let mut it = values.into_iter();
            attack_outcome(&profile, move || it.next().expect("draw"))
        };
        assert_eq!(feed(vec![0.1]), AttackOutcome::Dropped);
        assert_eq!(feed(vec![0.5, 0.1, 0.25]), AttackOutcome::Delayed(7.5));
        assert_eq!(feed(vec![0.5, 0.2]), AttackOutcome::Forwarded);
        let always = AttackProfile {
            drop_probability: 1.0,
            ..profile
        };
        assert_eq!(attack_outcome(&always, || 0.999_999), AttackOutcome::Dropped);
    }

    #[test]
    fn unconverged_node_prefers_the_unknown_candidate() {
        let mut sim = scripted(line(Mode::Egscfo, FallbackPolicy::Degraded), [false; 4], ScriptedDraws::new());
        let heads = [NodeId(1), NodeId(3)];
        // nearer unknown head
        set_trust(&mut sim, 0, 3, 0.9);
        assert_eq!(sim.choose_head(NodeId(0), &heads), Some((NodeId(1), JoinKind::Regular)));
        // the unknown head wins even when it is farther
        set_trust(&mut sim, 0, 1, 0.9);
        set_trust(&mut sim, 0, 3, 0.0);
        assert_eq!(sim.choose_head(NodeId(0), &heads), Some((NodeId(3), JoinKind::Regular)));
        // all known: the most reliable one
        set_trust(&mut sim, 0, 1, 0.6);
        set_trust(&mut sim, 0, 3, 0.8);
        assert_eq!(sim.choose_head(NodeId(0), &heads), Some((NodeId(3), JoinKind::Regular)));
    }

    #[test]
    fn converged_node_skips_a_nearer_suspicious_head() {
        let mut sim = scripted(line(Mode::Egscfo, FallbackPolicy::Degraded), [false; 4], ScriptedDraws::new());
        sim.world_mut().node_mut(NodeId(0)).outlier = converged(0.95, 0.3);
        set_trust(&mut sim, 0, 1, 0.35);
        set_trust(&mut sim, 0, 3, 0.9);
        let heads = [NodeId(1), NodeId(3)];
        assert_eq!(sim.choose_head(NodeId(0), &heads), Some((NodeId(3), JoinKind::Regular)));
        // an unknown head is acceptable when no candidate is trusted
        set_trust(&mut sim, 0, 3, 0.0);
        assert_eq!(sim.choose_head(NodeId(0), &heads), Some((NodeId(3), JoinKind::Regular)));
    }

    /// Node 0 has converged, both heads look suspicious to it and it served
    /// as head this very round. Node 2 is out of the picture.
    fn cornered(fallback: FallbackPolicy) -> Simulation<ScriptedDraws> {
        let mut sim = scripted(line(Mode::Egscfo, fallback), [false; 4], ScriptedDraws::new());
        sim.world_mut().node_mut(NodeId(2)).alive = false;
        let node = sim.world_mut().node_mut(NodeId(0));
        node.outlier = converged(0.95, 0.3);
        node.policy.last_head_round = Some(0);
        set_trust(&mut sim, 0, 1, 0.35);
        set_trust(&mut sim, 0, 3, 0.4);
        sim
    }

    #[test]
    fn ineligible_node_degrades_to_the_higher_trust_suspicious_head() {
        let mut sim = cornered(FallbackPolicy::Degraded);
        let heads = vec![NodeId(1), NodeId(3)];
        assert_eq!(sim.choose_head(NodeId(0), &heads), Some((NodeId(3), JoinKind::Degraded)));
        for h in &heads {
            sim.world_mut().node_mut(*h).role = Role::Head;
        }
        let clusters = sim.join_clusters(heads);
        assert_eq!(clusters.head_of[&NodeId(0)], (NodeId(3), JoinKind::Degraded));
        assert_eq!(clusters.degraded(), 1);
    }

    #[test]
    fn ineligible_node_sends_direct_by_default() {
        let sim = cornered(FallbackPolicy::DirectToBase);
        assert_eq!(sim.choose_head(NodeId(0), &[NodeId(1), NodeId(3)]), None);
    }

    #[test]
    fn eligible_node_declares_itself_when_nothing_is_acceptable() {
        let mut sim = cornered(FallbackPolicy::Degraded);
        sim.world_mut().node_mut(NodeId(0)).policy.last_head_round = None;
        assert_eq!(sim.choose_head(NodeId(0), &[NodeId(1), NodeId(3)]), None);
    }

    #[test]
    fn search_reaches_beyond_the_candidate_pair() {
        let mut sim = scripted(line(Mode::Egscfo, FallbackPolicy::SearchAllHeads), [false; 4], ScriptedDraws::new());
        let node = sim.world_mut().node_mut(NodeId(0));
        node.outlier = converged(0.95, 0.3);
        node.policy.last_head_round = Some(0);
        set_trust(&mut sim, 0, 1, 0.35);
        set_trust(&mut sim, 0, 2, 0.4);
        set_trust(&mut sim, 0, 3, 0.92);
        let heads = [NodeId(1), NodeId(2), NodeId(3)];
        assert_eq!(sim.choose_head(NodeId(0), &heads), Some((NodeId(3), JoinKind::Extended)));
    }

    #[test]
    fn baseline_joins_the_nearest_head() {
        let mut sim = scripted(line(Mode::Baseline, FallbackPolicy::default()), [false; 4], ScriptedDraws::new());
        set_trust(&mut sim, 0, 3, 1.0);
        assert_eq!(sim.choose_head(NodeId(0), &[NodeId(3), NodeId(1)]), Some((NodeId(1), JoinKind::Regular)));
        assert_eq!(sim.choose_head(NodeId(0), &[]), None);
    }

    #[test]
    fn dead_and_ineligible_nodes_draw_nothing() {
        let mut draws = ScriptedDraws::new();
        draws.push(DrawStream::Node(NodeId(0)), [0.99]);
        draws.push(DrawStream::Node(NodeId(3)), [0.0]);
        let mut sim = scripted(line(Mode::Egscfo, FallbackPolicy::default()), [false; 4], draws);
        sim.world_mut().node_mut(NodeId(1)).alive = false;
        sim.world_mut().node_mut(NodeId(2)).policy.last_head_round = Some(0);
        sim.round = 5;
        assert_eq!(sim.elect_heads(), vec![NodeId(3)]);
        assert_eq!(sim.world().node(NodeId(3)).policy.last_head_round, Some(5));
        assert_eq!(sim.draws().consumed().len(), 2);
    }

    /// Default radio constants, written out independently of the radio module.
    fn tx(bits: f64, d: f64) -> f64 {
        let d0 = (10e-12_f64 / 0.0013e-12).sqrt();
        let amp = if d < d0 { 10e-12 * d * d } else { 0.0013e-12 * d.powi(4) };
        bits * (50e-9 + amp)
    }

    fn rx(bits: f64) -> f64 {
        bits * 55e-9
    }

    #[test]
    fn four_node_hand_trace() {
        let mut draws = ScriptedDraws::new();
        let node = |i| DrawStream::Node(NodeId(i));
        // round 0: node 2 declares, sees a good channel and drops
        draws.push(node(0), [0.5]).push(node(1), [0.5]).push(node(3), [0.5]);
        draws.push(node(2), [0.01, 0.99, 0.1]);
        // round 1: node 0 declares and forwards cleanly; node 2 sits out
        draws.push(node(0), [0.1, 0.99]).push(node(1), [0.5]).push(node(3), [0.5]);
        let mut sim = scripted(line(Mode::Egscfo, FallbackPolicy::default()), [false, false, true, false], draws);
        sim.set_trace(TraceOptions {
            energy_events: true,
            ..TraceOptions::default()
        });

        let diagonal = 20_000f64.sqrt();
        let r0 = sim.step_detailed().unwrap();
        assert_eq!(r0.clusters.elected, vec![NodeId(2)]);
        let members: Vec<NodeId> = r0.clusters.members_of(NodeId(2)).collect();
        assert_eq!(members, vec![NodeId(0), NodeId(1), NodeId(3)]);
        assert_eq!(r0.events.forwards[0].outcome, ForwardOutcome::Dropped);
        let m = r0.metrics;
        assert_eq!(
            (m.heads, m.malicious_heads, m.malicious_cluster_count, m.drop_attacks, m.delay_attacks),
            (1, 1, 1, 1, 0)
        );
        assert_eq!(
            (m.packets_generated, m.packets_delivered, m.packets_delivered_timely),
            (3, 0, 0)
        );
        let spent0 = tx(300.0, diagonal)
            + tx(300.0, 20.0)
            + 2.0 * tx(300.0, 10.0)
            + 3.0 * rx(300.0)
            + tx(3000.0, 20.0)
            + 2.0 * tx(3000.0, 10.0)
            + 3.0 * rx(3000.0)
            + 3.0 * 10.0 * 10e-9;
        assert!((m.energy_spent_total - spent0).abs() < 1e-15, "{} vs {spent0}", m.energy_spent_total);
        assert_eq!(m.energy_spent_effective, 0.0);
        let fls = FuzzyTrustEvaluator::default();
        let after_drop = fls.evaluate_trust(1.0, 0.0).unwrap();
        for i in [0, 1, 3] {
            let n = sim.world().node(NodeId(i));
            let rec = n.ledger.record(NodeId(2)).unwrap();
            assert_eq!((rec.counters.observed, rec.counters.dropped), (1, 1));
            assert_eq!(rec.trust, after_drop);
            assert!(!n.outlier.active, "one interaction is not enough to start grouping");
            assert_eq!(n.past_heads, [NodeId(2)]);
        }

        let r1 = sim.step_detailed().unwrap();
        assert!((sim.world().node(NodeId(0)).policy.p_ch - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(sim.world().node(NodeId(2)).policy.p_ch, 0.07);
        assert_eq!(r1.clusters.elected, vec![NodeId(0)]);
        assert_eq!(r1.events.forwards[0].outcome, ForwardOutcome::Clean);
        let m = r1.metrics;
        assert_eq!((m.heads, m.malicious_cluster_count, m.drop_attacks), (1, 0, 0));
        assert_eq!(
            (m.packets_generated, m.packets_delivered, m.packets_delivered_timely),
            (3, 3, 3)
        );
        let to_base = tx(3000.0, 125f64.hypot(50.0));
        let spent1 = tx(300.0, diagonal)
            + tx(300.0, 10.0)
            + tx(300.0, 20.0)
            + tx(300.0, 30.0)
            + 3.0 * rx(300.0)
            + tx(3000.0, 10.0)
            + tx(3000.0, 20.0)
            + tx(3000.0, 30.0)
            + 3.0 * rx(3000.0)
            + to_base
            + 3.0 * 3000.0 * 5e-9;
        assert!((m.energy_spent_total - spent1).abs() < 1e-15);
        let effective = to_base + tx(3000.0, 10.0) + tx(3000.0, 30.0) + 2.0 * rx(3000.0);
        assert!((m.energy_spent_effective - effective).abs() < 1e-15);
        assert_eq!(sim.world().node(NodeId(1)).ledger.trust(NodeId(0)), fls.evaluate_trust(0.0, 0.0).unwrap());

        for i in 0..4 {
            assert_eq!(sim.draws().remaining(node(i)), 0, "unused draws for node {i}");
        }
        let logged: f64 = sim.world().energy_log().unwrap().iter().map(|e| e.joules).sum();
        assert!((logged - spent0 - spent1).abs() < 1e-15);
    }
}
