//! Per-node evidence and trust storage.
//!
//! Direct trust comes from the fuzzy system applied to the dropping and
//! delaying rates a node has overheard; indirect trust arrives as
//! recommendations from a head the node already trusts.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::fuzzy::FuzzyTrustEvaluator;

/// Identifier of a sensor node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// What a monitor saw when its head forwarded a packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observation {
    Delivered,
    Dropped,
    Delayed,
    /// The forward was not overheard; contributes no evidence.
    Unobserved,
}

/// Raw evidence behind the dropping and delaying rates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceCounters {
    pub observed: u64,
    pub dropped: u64,
    pub delayed: u64,
}

impl EvidenceCounters {
    pub fn record(&mut self, outcome: Observation) {
        match outcome {
            Observation::Delivered => self.observed += 1,
            Observation::Dropped => {
                self.observed += 1;
                self.dropped += 1;
            }
            Observation::Delayed => {
                self.observed += 1;
                self.delayed += 1;
            }
            Observation::Unobserved => {}
        }
    }

    fn forget(&mut self, outcome: Observation) {
        match outcome {
            Observation::Delivered => self.observed -= 1,
            Observation::Dropped => {
                self.observed -= 1;
                self.dropped -= 1;
            }
            Observation::Delayed => {
                self.observed -= 1;
                self.delayed -= 1;
            }
            Observation::Unobserved => {}
        }
    }

    /// `(dpr, dlr)`: dropped and delayed shares of observed forwards.
    pub fn rates(&self) -> Result<(f64, f64)> {
        if self.observed == 0 {
            return Err(Error::NoEvidence);
        }
        let n = self.observed as f64;
        Ok((self.dropped as f64 / n, self.delayed as f64 / n))
    }
}

/// How much evidence a record keeps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvidenceHorizon {
    /// Every observation since deployment.
    #[default]
    Cumulative,
    /// Only the most recent observed forwards.
    Window(u32),
}

/// What one node knows about one target.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustRecord {
    pub target: NodeId,
    /// Zero until direct evidence or a recommendation arrives.
    pub trust: f64,
    pub counters: EvidenceCounters,
    pub last_update_round: Option<u32>,
    recent: VecDeque<Observation>,
}

impl TrustRecord {
    pub fn new(target: NodeId) -> Self {
        Self {
            target,
            trust: 0.0,
            counters: EvidenceCounters::default(),
            last_update_round: None,
            recent: VecDeque::new(),
        }
    }

    pub fn record_observation(&mut self, outcome: Observation, horizon: EvidenceHorizon) {
        if outcome == Observation::Unobserved {
            return;
        }
        self.counters.record(outcome);
        if let EvidenceHorizon::Window(len) = horizon {
            self.recent.push_back(outcome);
            while self.recent.len() > len.max(1) as usize {
                if let Some(old) = self.recent.pop_front() {
                    self.counters.forget(old);
                }
            }
        }
    }

    /// Recomputes direct trust from the current evidence.
    pub fn refresh_direct_trust(&mut self, fls: &FuzzyTrustEvaluator, round: u32) -> Result<()> {
        let (dpr, dlr) = self.counters.rates()?;
        self.trust = fls.evaluate_trust(dpr, dlr)?;
        self.last_update_round = Some(round);
        Ok(())
    }
}

/// Folds a recommendation about a target into the current trust.
///
/// `own` is the holder's trust in the target, `recommender` the holder's
/// trust in the recommending head and `recommended` the head's trust in
/// the target.
pub fn merge_recommendation(own: f64, recommender: f64, recommended: f64) -> Result<f64> {
    if !(recommender > 0.0 && recommender <= 1.0) {
        return Err(Error::RecommenderTrust(recommender));
    }
    check_unit("own trust", own)?;
    check_unit("recommended trust", recommended)?;
    let merged = if own > 0.0 {
        (own + recommender * recommended) / (1.0 + recommender)
    } else {
        recommender * recommended
    };
    Ok(merged.clamp(0.0, 1.0))
}

/// All records a node holds, keyed by target.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrustLedger {
    records: BTreeMap<NodeId, TrustRecord>,
}

impl TrustLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Trust in `target`, zero when nothing is known.
    pub fn trust(&self, target: NodeId) -> f64 {
        self.records.get(&target).map_or(0.0, |r| r.trust)
    }

    pub fn record(&self, target: NodeId) -> Option<&TrustRecord> {
        self.records.get(&target)
    }

    pub fn record_mut(&mut self, target: NodeId) -> &mut TrustRecord {
        self.records.entry(target).or_insert_with(|| TrustRecord::new(target))
    }

    pub fn records(&self) -> impl Iterator<Item = &TrustRecord> {
        self.records.values()
    }

    /// Folds a recommendation into the record for `target`.
    pub fn apply_recommendation(
        &mut self,
        target: NodeId,
        recommender_trust: f64,
        recommended: f64,
        round: u32,
    ) -> Result<()> {
        let own = self.trust(target);
        let merged = merge_recommendation(own, recommender_trust, recommended)?;
        let record = self.record_mut(target);
        record.trust = merged;
        record.last_update_round = Some(round);
        Ok(())
    }

    /// Targets with positive trust, ascending by id.
    pub fn trusted_targets(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.records.values().filter(|r| r.trust > 0.0).map(|r| (r.target, r.trust))
    }

    /// Positive trust values, one per target, ascending by target id.
    pub fn trust_set(&self) -> Vec<f64> {
        self.trusted_targets().map(|(_, t)| t).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counters(observed: u64, dropped: u64, delayed: u64) -> EvidenceCounters {
        EvidenceCounters {
            observed,
            dropped,
            delayed,
        }
    }

    #[test]
    fn observations_update_counters() {
        let mut r = TrustRecord::new(NodeId(3));
        r.record_observation(Observation::Delivered, EvidenceHorizon::Cumulative);
        assert_eq!(r.counters, counters(1, 0, 0));

        r.counters = counters(4, 1, 0);
        r.record_observation(Observation::Dropped, EvidenceHorizon::Cumulative);
        assert_eq!(r.counters, counters(5, 2, 0));
        assert_eq!(r.counters.rates().unwrap().0, 0.4);

        let before = r.clone();
        r.record_observation(Observation::Unobserved, EvidenceHorizon::Cumulative);
        assert_eq!(r, before);
    }

    #[test]
    fn rates_from_counters() {
        assert_eq!(counters(10, 2, 3).rates().unwrap(), (0.2, 0.3));
        assert_eq!(counters(5, 0, 0).rates().unwrap(), (0.0, 0.0));
        assert_eq!(counters(1, 1, 0).rates().unwrap(), (1.0, 0.0));
        assert!(matches!(counters(0, 0, 0).rates(), Err(Error::NoEvidence)));
    }

    #[test]
    fn refresh_composes_with_the_fuzzy_system() {
        let fls = FuzzyTrustEvaluator::default();
        let mut r = TrustRecord::new(NodeId(1));
        assert!(matches!(r.refresh_direct_trust(&fls, 0), Err(Error::NoEvidence)));

        r.counters = counters(10, 0, 0);
        r.refresh_direct_trust(&fls, 4).unwrap();
        assert_eq!(r.trust, fls.evaluate_trust(0.0, 0.0).unwrap());
        assert_eq!(r.last_update_round, Some(4));

        r.counters = counters(10, 10, 0);
        r.refresh_direct_trust(&fls, 5).unwrap();
        assert_eq!(r.trust, fls.evaluate_trust(1.0, 0.0).unwrap());
    }

    #[test]
    fn a_drop_lowers_trust() {
        let fls = FuzzyTrustEvaluator::default();
        for n in 1..40 {
            let mut r = TrustRecord::new(NodeId(1));
            for _ in 0..n {
                r.record_observation(Observation::Delivered, EvidenceHorizon::Cumulative);
            }
            r.refresh_direct_trust(&fls, 0).unwrap();
            let clean = r.trust;
            r.record_observation(Observation::Dropped, EvidenceHorizon::Cumulative);
            r.refresh_direct_trust(&fls, 1).unwrap();
            assert!(r.trust < clean, "n = {n}: {} !< {clean}", r.trust);
        }
    }

    #[test]
    fn windowed_evidence_forgets_old_forwards() {
        let mut r = TrustRecord::new(NodeId(1));
        let horizon = EvidenceHorizon::Window(3);
        r.record_observation(Observation::Dropped, horizon);
        for _ in 0..3 {
            r.record_observation(Observation::Delivered, horizon);
        }
        r.record_observation(Observation::Unobserved, horizon);
        assert_eq!(r.counters, counters(3, 0, 0));
    }

    #[test]
    fn recommendation_merge() {
        let m = merge_recommendation(0.8, 0.9, 0.6).unwrap();
        assert!((m - 1.34 / 1.9).abs() < 1e-15);
        assert!((merge_recommendation(0.0, 0.9, 0.6).unwrap() - 0.54).abs() < 1e-15);
        assert!((merge_recommendation(0.8, 1.0, 0.8).unwrap() - 0.8).abs() < 1e-15);
        assert!(matches!(
            merge_recommendation(0.5, 0.0, 0.5),
            Err(Error::RecommenderTrust(_))
        ));
    }

    #[test]
    fn ledger_trust_set_holds_positive_values() {
        let mut l = TrustLedger::new();
        assert_eq!(l.trust(NodeId(9)), 0.0);
        l.record_mut(NodeId(5)).trust = 0.7;
        l.record_mut(NodeId(2)).trust = 0.9;
        l.record_mut(NodeId(7));
        assert_eq!(l.trust_set(), vec![0.9, 0.7]);
        l.apply_recommendation(NodeId(7), 0.5, 0.8, 3).unwrap();
        assert_eq!(l.trust(NodeId(7)), 0.4);
        assert_eq!(l.trust_set(), vec![0.9, 0.7, 0.4]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn outcome() -> impl Strategy<Value = Observation> {
            prop_oneof![
                Just(Observation::Delivered),
                Just(Observation::Dropped),
                Just(Observation::Delayed),
                Just(Observation::Unobserved),
            ]
        }

        proptest! {
            #[test]
            fn merge_stays_in_range_and_is_monotone(
                own in 0.0f64..=1.0,
                rec in 0.001f64..=1.0,
                a in 0.0f64..=1.0,
                b in 0.0f64..=1.0,
            ) {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let m_lo = merge_recommendation(own, rec, lo).unwrap();
                let m_hi = merge_recommendation(own, rec, hi).unwrap();
                prop_assert!((0.0..=1.0).contains(&m_lo) && (0.0..=1.0).contains(&m_hi));
                prop_assert!(m_lo <= m_hi);
            }

            #[test]
            fn counters_never_decrease(outcomes in proptest::collection::vec(outcome(), 0..200)) {
                let mut r = TrustRecord::new(NodeId(0));
                let mut prev = r.counters;
                for o in outcomes {
                    r.record_observation(o, EvidenceHorizon::Cumulative);
                    let c = r.counters;
                    prop_assert!(c.observed >= prev.observed && c.dropped >= prev.dropped && c.delayed >= prev.delayed);
                    prop_assert!(c.dropped + c.delayed <= c.observed);
                    prev = c;
                }
            }

            #[test]
            fn windowed_counters_stay_consistent(
                outcomes in proptest::collection::vec(outcome(), 0..200),
                len in 1u32..20,
            ) {
                let mut r = TrustRecord::new(NodeId(0));
                for o in outcomes {
                    r.record_observation(o, EvidenceHorizon::Window(len));
                    let c = r.counters;
                    prop_assert!(c.observed <= u64::from(len));
                    prop_assert!(c.dropped + c.delayed <= c.observed);
                }
            }
        }
    }
}
