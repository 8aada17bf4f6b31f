//! Cluster-head election as an evolutionary game.
//!
//! A node plays against the heads it has used before. Declaring costs the
//! extra energy of serving as head; abstaining risks a round in which no
//! trustworthy node serves. The stable mixed strategy of that game becomes
//! the node's head probability, which then drives a rotating election
//! threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bounds applied to the stable strategy so the rotation window stays finite.
pub const MIN_HEAD_PROBABILITY: f64 = 0.01;
pub const MAX_HEAD_PROBABILITY: f64 = 0.99;

/// Inputs of one node's election game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameContext {
    /// The node itself plus its past heads not judged suspicious.
    pub players: usize,
    /// Head energy divided by member energy; above 1.
    pub energy_ratio: f64,
    /// Mean trust held in neighbours judged suspicious; 1 when there are none.
    pub suspicious_trust: f64,
}

/// Payoff entries of the declare/abstain game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffParameters {
    /// Value of a round served by a trustworthy head.
    pub service_value: f64,
    /// Cost of serving as head.
    pub serving_cost: f64,
    /// Loss when nobody trustworthy declares.
    pub population_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedPayoffs {
    pub declare: f64,
    pub abstain: f64,
    pub population: f64,
}

impl GameContext {
    pub fn payoffs(&self) -> PayoffParameters {
        PayoffParameters {
            service_value: self.energy_ratio,
            serving_cost: self.energy_ratio - 1.0,
            population_loss: self.players as f64 * (1.0 - self.suspicious_trust),
        }
    }
}

/// Expected payoffs when every player declares with probability `p`.
pub fn expected_payoffs(p: f64, params: &PayoffParameters, players: usize) -> ExpectedPayoffs {
    let nobody_else = (1.0 - p).powi(others(players));
    let declare = params.service_value - params.serving_cost;
    let abstain = (1.0 - nobody_else) * params.service_value - nobody_else * params.population_loss;
    ExpectedPayoffs {
        declare,
        abstain,
        population: p * declare + (1.0 - p) * abstain,
    }
}

/// Growth rate of the declaring share under replicator dynamics.
pub fn replicator_derivative(p: f64, params: &PayoffParameters, players: usize) -> f64 {
    let nobody_else = (1.0 - p).powi(others(players));
    p * (1.0 - p) * (nobody_else * (params.service_value + params.population_loss) - params.serving_cost)
}

fn others(players: usize) -> i32 {
    i32::try_from(players.saturating_sub(1)).unwrap_or(i32::MAX)
}

/// Interior rest point of the replicator dynamics, before clamping.
pub fn ess_probability_unclamped(ctx: &GameContext) -> Result<f64> {
    if ctx.players < 2 {
        return Err(Error::DegenerateGame(ctx.players));
    }
    let params = ctx.payoffs();
    let base = params.serving_cost / (params.service_value + params.population_loss);
    Ok(1.0 - base.powf(1.0 / (ctx.players - 1) as f64))
}

/// Stable head probability, clamped to
/// `[MIN_HEAD_PROBABILITY, MAX_HEAD_PROBABILITY]`.
pub fn ess_probability(ctx: &GameContext) -> Result<f64> {
    ess_probability_unclamped(ctx).map(|p| p.clamp(MIN_HEAD_PROBABILITY, MAX_HEAD_PROBABILITY))
}

/// A node's evolving head probability and its rotation state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectionPolicy {
    pub p_ch: f64,
    pub p_int: f64,
    pub last_head_round: Option<u32>,
}

impl ElectionPolicy {
    pub fn new(p_int: f64) -> Self {
        Self {
            p_ch: p_int,
            p_int,
            last_head_round: None,
        }
    }

    /// Rounds a head sits out after serving: `floor(1 / p_ch)`.
    pub fn window(&self) -> u32 {
        // the nudge keeps exact reciprocals such as 1/0.1 from flooring low
        ((1.0 / self.p_ch) * (1.0 + 1e-12)).floor().max(1.0) as u32
    }

    pub fn is_eligible(&self, round: u32) -> bool {
        self.last_head_round
            .is_none_or(|last| round > last && round - last > self.window())
    }

    /// Declaration threshold for `round`; a uniform draw below it declares.
    pub fn threshold(&self, round: u32) -> Result<f64> {
        if let Some(last) = self.last_head_round {
            if !self.is_eligible(round) {
                return Err(Error::Ineligible {
                    last_head_round: last,
                    window: self.window(),
                });
            }
        }
        let phase = f64::from(round % self.window());
        let th = self.p_ch / (1.0 - self.p_ch * phase);
        Ok(if th > 0.0 { th.min(1.0) } else { 1.0 })
    }
}
