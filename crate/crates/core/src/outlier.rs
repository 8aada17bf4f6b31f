//! Two-group K-Means over a node's trust set.
//!
//! Each node splits the trust values it holds into a high and a low trust
//! group and tracks how stable the two group means are across rounds. Once
//! they have stayed apart and steady for long enough the detector latches
//! as converged and its groups are used to label neighbours.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Iteration cap for one round of Lloyd updates.
pub const MAX_LLOYD_ITERATIONS: usize = 100;

/// Nodes need evidence about more than two others before grouping.
pub const MIN_INTERACTED: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierThresholds {
    /// Largest per-round mean shift that still counts as stable.
    pub mean_shift: f64,
    /// Smallest gap between the group means that counts as separated.
    pub group_gap: f64,
    /// Consecutive stable, separated rounds that must be exceeded.
    pub streak_rounds: u32,
}

impl Default for OutlierThresholds {
    fn default() -> Self {
        Self {
            mean_shift: 0.05,
            group_gap: 0.1,
            streak_rounds: 60,
        }
    }
}

impl OutlierThresholds {
    pub fn validate(&self, problems: &mut Vec<String>) {
        if !(self.mean_shift > 0.0 && self.mean_shift.is_finite()) {
            problems.push(format!("outlier: d_m must be positive, got {}", self.mean_shift));
        }
        if !(self.group_gap > self.mean_shift && self.group_gap.is_finite()) {
            problems.push(format!(
                "outlier: d_mbg must exceed d_m, got d_mbg = {} and d_m = {}",
                self.group_gap, self.mean_shift
            ));
        }
        if self.streak_rounds < 1 {
            problems.push("outlier: T_s must be at least 1".into());
        }
    }
}

/// Label a converged detector gives to a trust value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Trusted,
    Suspicious,
    Unknown,
}

/// Result of one round of grouping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrustPartition {
    pub high: Vec<f64>,
    pub low: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LloydOutcome {
    pub partition: TrustPartition,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OutlierState {
    pub high_mean: f64,
    pub low_mean: f64,
    pub last_high_mean: f64,
    pub last_low_mean: f64,
    pub active: bool,
    pub converged: bool,
    pub streak: u32,
}

/// Maps a uniform draw in `[0, 1)` to an index below `n`.
fn index_from_uniform(u: f64, n: usize) -> usize {
    ((u * n as f64) as usize).min(n - 1)
}

impl OutlierState {
    /// Seeds the two group means with two distinct members of `trust_set`.
    ///
    /// `interacted` counts the distinct nodes the holder has evidence on;
    /// `uniform` yields draws in `[0, 1)`.
    pub fn activate(
        trust_set: &[f64],
        interacted: usize,
        mut uniform: impl FnMut() -> f64,
    ) -> Result<Self> {
        if interacted < MIN_INTERACTED {
            return Err(Error::NotReady("fewer than three interacted nodes"));
        }
        if trust_set.len() < 2 {
            return Err(Error::NotReady("trust set has fewer than two values"));
        }
        let n = trust_set.len();
        let first = index_from_uniform(uniform(), n);
        let mut second = index_from_uniform(uniform(), n - 1);
        if second >= first {
            second += 1;
        }
        let (a, b) = (trust_set[first], trust_set[second]);
        // the first draw wins a tie
        let (high, low) = if b > a { (b, a) } else { (a, b) };
        Ok(Self {
            high_mean: high,
            low_mean: low,
            last_high_mean: high,
            last_low_mean: low,
            active: true,
            converged: false,
            streak: 0,
        })
    }

    /// Runs Lloyd updates from the stored means until the means stop
    /// moving. Ties go to the high group; an empty group keeps its mean.
    pub fn iterate_round(&mut self, trust_set: &[f64]) -> LloydOutcome {
        debug_assert!(self.active);
        self.last_high_mean = self.high_mean;
        self.last_low_mean = self.low_mean;
        let mut partition = TrustPartition::default();
        let mut iterations = 0;
        while iterations < MAX_LLOYD_ITERATIONS {
            iterations += 1;
            partition.high.clear();
            partition.low.clear();
            for &t in trust_set {
                if (t - self.high_mean).abs() <= (t - self.low_mean).abs() {
                    partition.high.push(t);
                } else {
                    partition.low.push(t);
                }
            }
            let high = mean(&partition.high).unwrap_or(self.high_mean);
            let low = mean(&partition.low).unwrap_or(self.low_mean);
            let moved = high != self.high_mean || low != self.low_mean;
            self.high_mean = high;
            self.low_mean = low;
            if !moved {
                break;
            }
        }
        if self.high_mean < self.low_mean {
            std::mem::swap(&mut self.high_mean, &mut self.low_mean);
            std::mem::swap(&mut partition.high, &mut partition.low);
        }
        LloydOutcome {
            partition,
            iterations,
        }
    }

    /// Updates the stability streak and latches convergence.
    pub fn check_convergence(&mut self, thresholds: &OutlierThresholds) {
        let stable = (self.high_mean - self.last_high_mean).abs() < thresholds.mean_shift
            && (self.low_mean - self.last_low_mean).abs() < thresholds.mean_shift;
        let separated = self.high_mean - self.low_mean > thresholds.group_gap;
        if stable && separated {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        if self.streak > thresholds.streak_rounds {
            self.converged = true;
        }
    }

    pub fn classify(&self, trust: f64) -> Classification {
        if trust == 0.0 || !self.converged {
            Classification::Unknown
        } else if (trust - self.high_mean).abs() <= (trust - self.low_mean).abs() {
            Classification::Trusted
        } else {
            Classification::Suspicious
        }
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scripted(draws: &[f64]) -> impl FnMut() -> f64 + '_ {
        let mut it = draws.iter().copied();
        move || it.next().expect("scripted draw")
    }

    fn active(high: f64, low: f64) -> OutlierState {
        OutlierState {
            high_mean: high,
            low_mean: low,
            last_high_mean: high,
            last_low_mean: low,
            active: true,
            ..OutlierState::default()
        }
    }

    #[test]
    fn activation_orders_the_draws() {
        let s = OutlierState::activate(&[0.2, 0.9], 3, scripted(&[0.0, 0.0])).unwrap();
        assert_eq!((s.high_mean, s.low_mean), (0.9, 0.2));
        assert!(s.active && !s.converged);

        assert!(matches!(
            OutlierState::activate(&[0.5], 5, scripted(&[0.0, 0.0])),
            Err(Error::NotReady(_))
        ));
        assert!(matches!(
            OutlierState::activate(&[0.5, 0.6], 2, scripted(&[0.0, 0.0])),
            Err(Error::NotReady(_))
        ));

        let s = OutlierState::activate(&[0.7, 0.7, 0.7], 3, scripted(&[0.9, 0.1])).unwrap();
        assert_eq!((s.high_mean, s.low_mean), (0.7, 0.7));
    }

    #[test]
    fn activation_draws_distinct_indices() {
        let ts = [0.1, 0.2, 0.3, 0.4];
        for a in 0..4 {
            for b in 0..3 {
                let draws = [a as f64 / 4.0 + 0.01, b as f64 / 3.0 + 0.01];
                let s = OutlierState::activate(&ts, 4, scripted(&draws)).unwrap();
                assert!(s.high_mean > s.low_mean);
            }
        }
    }

    #[test]
    fn lloyd_round_examples() {
        let mut s = active(0.9, 0.2);
        let out = s.iterate_round(&[0.9, 0.85, 0.2]);
        assert_eq!(out.partition.high, vec![0.9, 0.85]);
        assert_eq!(out.partition.low, vec![0.2]);
        assert!((s.high_mean - 0.875).abs() < 1e-15);
        assert_eq!(s.low_mean, 0.2);
        assert_eq!(out.iterations, 2);
        assert_eq!((s.last_high_mean, s.last_low_mean), (0.9, 0.2));

        let out = s.iterate_round(&[0.9, 0.85, 0.2]);
        assert_eq!(out.iterations, 1);

        let mut s = active(0.6, 0.6);
        let out = s.iterate_round(&[0.6; 5]);
        assert_eq!(out.partition.high.len(), 5);
        assert!(out.partition.low.is_empty());
        assert_eq!(s.low_mean, 0.6);
    }

    #[test]
    fn empty_high_group_keeps_its_mean() {
        let mut s = active(0.9, 0.5);
        let out = s.iterate_round(&[0.2, 0.3]);
        assert!(out.partition.high.is_empty());
        assert_eq!(s.high_mean, 0.9);
        assert_eq!(s.low_mean, 0.25);
    }

    #[test]
    fn convergence_checks() {
        let t = OutlierThresholds::default();
        let mut s = active(0.85, 0.20);
        s.last_high_mean = 0.86;
        s.last_low_mean = 0.21;
        s.check_convergence(&t);
        assert_eq!(s.streak, 1);

        s.high_mean = 0.50;
        s.low_mean = 0.45;
        s.last_high_mean = 0.50;
        s.last_low_mean = 0.45;
        s.check_convergence(&t);
        assert_eq!(s.streak, 0);

        let mut s = active(0.9, 0.2);
        s.streak = t.streak_rounds;
        s.check_convergence(&t);
        assert!(s.converged);
    }

    #[test]
    fn streak_must_exceed_the_threshold() {
        let t = OutlierThresholds::default();
        let mut s = active(0.9, 0.2);
        for k in 1..=t.streak_rounds {
            s.check_convergence(&t);
            assert_eq!(s.streak, k);
            assert!(!s.converged);
        }
        s.check_convergence(&t);
        assert!(s.converged);
        // latched even after the conditions fail
        s.low_mean = 0.85;
        s.check_convergence(&t);
        assert_eq!(s.streak, 0);
        assert!(s.converged);
    }

    #[test]
    fn classification() {
        let mut s = active(0.85, 0.2);
        assert_eq!(s.classify(0.9), Classification::Unknown);
        s.converged = true;
        assert_eq!(s.classify(0.0), Classification::Unknown);
        assert_eq!(s.classify(0.9), Classification::Trusted);
        assert_eq!(s.classify(0.3), Classification::Suspicious);
        assert_eq!(s.classify(0.525), Classification::Trusted);
    }

    #[test]
    fn thresholds_validate() {
        let mut problems = Vec::new();
        OutlierThresholds::default().validate(&mut problems);
        assert!(problems.is_empty());
        OutlierThresholds {
            mean_shift: 0.2,
            group_gap: 0.1,
            streak_rounds: 0,
        }
        .validate(&mut problems);
        assert_eq!(problems.len(), 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn setup() -> impl Strategy<Value = (Vec<f64>, usize, usize)> {
            proptest::collection::vec(0.001f64..=1.0, 2..200)
                .prop_flat_map(|ts| {
                    let n = ts.len();
                    (Just(ts), 0..n, 0..n)
                })
                .prop_filter("distinct seeds", |(_, a, b)| a != b)
        }

        proptest! {
            #[test]
            fn fixpoint_is_nearest_mean_stable((ts, a, b) in setup()) {
                let (x, y) = (ts[a], ts[b]);
                let mut s = active(x.max(y), x.min(y));
                let out = s.iterate_round(&ts);
                prop_assert!(out.iterations < MAX_LLOYD_ITERATIONS);
                prop_assert!(s.high_mean >= s.low_mean);
                prop_assert_eq!(out.partition.high.len() + out.partition.low.len(), ts.len());
                for &t in &out.partition.high {
                    prop_assert!((t - s.high_mean).abs() <= (t - s.low_mean).abs());
                }
                for &t in &out.partition.low {
                    prop_assert!((t - s.low_mean).abs() <= (t - s.high_mean).abs());
                }
                // another round from the fixpoint does not move
                let again = s.iterate_round(&ts);
                prop_assert_eq!(again.iterations, 1);
            }
        }
    }
}
