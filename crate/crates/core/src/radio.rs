//! First-order radio energy model, overhearing cost and the two-state
//! Markov channel.
//!
//! Every quantity here is in SI units: joules, metres and seconds. Table
//! style inputs in nJ/pJ are converted once, when a scenario is loaded.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NANO: f64 = 1e-9;
pub const PICO: f64 = 1e-12;

/// Radio and monitoring constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Electronics energy, J/bit.
    pub e_elec: f64,
    /// Free-space amplifier, J/bit/m².
    pub eps_fs: f64,
    /// Two-ray amplifier, J/bit/m⁴.
    pub eps_amp: f64,
    /// Aggregation energy on reception, J/bit.
    pub e_da: f64,
    /// Extra energy to process an overheard packet, J/bit.
    pub e_h: f64,
    /// Listening power while monitoring, J/s.
    pub e_m: f64,
    /// Maximum overhearing window, s.
    pub d_max_overhear: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            e_elec: 50.0 * NANO,
            eps_fs: 10.0 * PICO,
            eps_amp: 0.0013 * PICO,
            e_da: 5.0 * NANO,
            e_h: 5.0 * NANO,
            e_m: 10.0 * NANO,
            d_max_overhear: 10.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self, problems: &mut Vec<String>) {
        let fields = [
            ("E_elec", self.e_elec),
            ("eps_fs", self.eps_fs),
            ("eps_amp", self.eps_amp),
            ("E_DA", self.e_da),
            ("E_h", self.e_h),
            ("E_m", self.e_m),
            ("D_m", self.d_max_overhear),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                problems.push(format!("radio: {name} must be positive and finite, got {value}"));
            }
        }
    }

    /// Distance at which the free-space and two-ray branches meet.
    pub fn crossover_distance(&self) -> f64 {
        (self.eps_fs / self.eps_amp).sqrt()
    }

    /// Energy to transmit `bits` over `distance` metres.
    pub fn tx_energy(&self, bits: u32, distance: f64) -> f64 {
        let k = f64::from(bits);
        if distance < self.crossover_distance() {
            k * self.e_elec + k * self.eps_fs * distance * distance
        } else {
            k * self.e_elec + k * self.eps_amp * distance.powi(4)
        }
    }

    /// Energy to receive and aggregate `bits`.
    pub fn rx_energy(&self, bits: u32) -> f64 {
        let k = f64::from(bits);
        k * self.e_elec + k * self.e_da
    }

    /// Energy spent monitoring one forwarded packet of `bits`.
    ///
    /// `overheard` is the time until the packet was heard; `None` means the
    /// monitor listened for the whole window without hearing it.
    pub fn monitor_energy(&self, overheard: Option<f64>, bits: u32) -> Result<f64> {
        match overheard {
            Some(duration) => {
                if !(duration >= 0.0 && duration <= self.d_max_overhear) {
                    return Err(Error::OverhearDuration {
                        duration,
                        max: self.d_max_overhear,
                    });
                }
                Ok(duration * self.e_m + f64::from(bits) * self.e_h)
            }
            None => Ok(self.d_max_overhear * self.e_m),
        }
    }
}

/// Planar position in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelState {
    Bad,
    Good,
}

/// Two-state channel with exponential holding times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Rate of the bad state, 1/s.
    pub alpha_bad: f64,
    /// Rate of the good state, 1/s.
    pub alpha_good: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self {
            alpha_bad: 3.0,
            alpha_good: 7.0,
        }
    }
}

/// One channel draw: the state and how long it would hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSample {
    pub state: ChannelState,
    pub holding_time: f64,
}

impl ChannelModel {
    pub fn validate(&self, problems: &mut Vec<String>) {
        for (name, value) in [("alpha_0", self.alpha_bad), ("alpha_1", self.alpha_good)] {
            if !(value.is_finite() && value > 0.0) {
                problems.push(format!("channel: {name} must be positive and finite, got {value}"));
            }
        }
    }

    /// Stationary probability of the bad state.
    pub fn p_bad(&self) -> f64 {
        self.alpha_bad / (self.alpha_bad + self.alpha_good)
    }

    /// Stationary probability of the good state.
    pub fn p_good(&self) -> f64 {
        self.alpha_good / (self.alpha_bad + self.alpha_good)
    }

    /// Maps a uniform draw in `[0, 1)` onto the stationary distribution.
    pub fn state_from_uniform(&self, u: f64) -> ChannelState {
        if u < self.p_bad() {
            ChannelState::Bad
        } else {
            ChannelState::Good
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelSample {
        let state = self.state_from_uniform(rng.random::<f64>());
        let rate = match state {
            ChannelState::Bad => self.alpha_bad,
            ChannelState::Good => self.alpha_good,
        };
        let holding_time = Exp::new(rate).map(|exp| exp.sample(rng)).unwrap_or(f64::INFINITY);
        ChannelSample {
            state,
            holding_time,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn crossover_from_default_constants() {
        let p = RadioParams::default();
        assert!((p.crossover_distance() - 87.7058).abs() < 1e-4);

        let unit = RadioParams {
            eps_amp: p.eps_fs,
            ..p
        };
        assert_eq!(unit.crossover_distance(), 1.0);
    }

    #[test]
    fn tx_energy_matches_hand_values() {
        let p = RadioParams::default();
        assert!(rel(p.tx_energy(3000, 50.0), 2.25e-4) < 1e-12);
        assert!(rel(p.tx_energy(3000, 100.0), 5.4e-4) < 1e-12);
        assert_eq!(p.tx_energy(0, 120.0), 0.0);
    }

    #[test]
    fn tx_energy_is_continuous_at_crossover() {
        let p = RadioParams::default();
        let d0 = p.crossover_distance();
        let near = 3000.0 * p.e_elec + 3000.0 * p.eps_fs * d0 * d0;
        let far = 3000.0 * p.e_elec + 3000.0 * p.eps_amp * d0.powi(4);
        assert!(rel(near, far) <= 1e-12);
        assert!(rel(p.tx_energy(3000, d0), near) <= 1e-12);
    }

    #[test]
    fn rx_energy_values() {
        let p = RadioParams::default();
        assert!(rel(p.rx_energy(3000), 1.65e-4) < 1e-12);
        assert_eq!(p.rx_energy(0), 0.0);
        let d0 = p.crossover_distance();
        assert!(p.rx_energy(3000) < p.tx_energy(3000, d0));
    }

    #[test]
    fn monitoring_energy() {
        let p = RadioParams::default();
        assert!(rel(p.monitor_energy(None, 3000).unwrap(), 1.0e-7) < 1e-12);
        assert!(rel(p.monitor_energy(Some(1.0), 3000).unwrap(), 1.501e-5) < 1e-12);
        assert!(p.monitor_energy(Some(1e-12), 0).unwrap() < 1e-18);
        assert!(matches!(
            p.monitor_energy(Some(10.5), 3000),
            Err(Error::OverhearDuration { .. })
        ));
    }

    #[test]
    fn channel_stationary_probabilities() {
        let c = ChannelModel::default();
        assert!((c.p_bad() - 0.3).abs() < 1e-15);
        assert!((c.p_good() - 0.7).abs() < 1e-15);
        assert_eq!(c.p_bad() + c.p_good(), 1.0);
        let sym = ChannelModel {
            alpha_bad: 2.5,
            alpha_good: 2.5,
        };
        assert_eq!(sym.p_bad(), 0.5);
    }

    #[test]
    fn channel_sampling_records_holding_time() {
        let c = ChannelModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut bad = 0usize;
        let mut bad_hold = 0.0;
        let n = 200_000;
        for _ in 0..n {
            let s = c.sample(&mut rng);
            assert!(s.holding_time >= 0.0);
            if s.state == ChannelState::Bad {
                bad += 1;
                bad_hold += s.holding_time;
            }
        }
        let freq = bad as f64 / n as f64;
        assert!((freq - 0.3).abs() < 0.005, "{freq}");
        // mean holding time in the bad state is 1/alpha_0
        assert!((bad_hold / bad as f64 - 1.0 / 3.0).abs() < 0.01);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn energy_is_linear_in_bits(k in 0u32..100_000, d in 0.0f64..300.0) {
                let p = RadioParams::default();
                let one = p.tx_energy(1, d);
                prop_assert!(rel(p.tx_energy(k, d), f64::from(k) * one) < 1e-12 || k == 0);
                prop_assert!(rel(p.rx_energy(k), f64::from(k) * p.rx_energy(1)) < 1e-12 || k == 0);
            }

            #[test]
            fn tx_energy_grows_with_distance(a in 0.0f64..400.0, b in 0.0f64..400.0) {
                let p = RadioParams::default();
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(p.tx_energy(3000, lo) <= p.tx_energy(3000, hi));
                prop_assert!(p.tx_energy(3000, lo) >= 0.0);
            }
        }
    }
}
