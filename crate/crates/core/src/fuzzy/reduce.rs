//! Center-of-sets type reduction.
//!
//! Every switch point is scored in one pass with running sums. Running sums
//! round differently from a fresh sum, so the candidates that score within
//! a few ulps of the best are re-evaluated with a plain left-to-right sum
//! and the best of those is returned. The result is the same float an
//! exhaustive scan over every switch point produces, for any grades,
//! including the lower-above-upper pairs that separate normalization can
//! create.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A trust value with its interval membership grade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustPair {
    pub value: f64,
    pub grade_lower: f64,
    pub grade_upper: f64,
}

/// Output of type reduction. Switch points count how many leading pairs
/// take the upper (left end) or lower (right end) grade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeReducedInterval {
    pub left: f64,
    pub right: f64,
    pub left_switch: usize,
    pub right_switch: usize,
}

impl TypeReducedInterval {
    pub fn midpoint(&self) -> f64 {
        (self.left + self.right) / 2.0
    }
}

#[derive(Clone, Copy)]
enum End {
    Left,
    Right,
}

impl End {
    /// Grades used before and after the switch point.
    fn weights(self, p: &TrustPair) -> (f64, f64) {
        match self {
            End::Left => (p.grade_upper, p.grade_lower),
            End::Right => (p.grade_lower, p.grade_upper),
        }
    }

    fn better(self, candidate: f64, current: f64) -> bool {
        match self {
            End::Left => candidate < current,
            End::Right => candidate > current,
        }
    }
}

/// Weighted average with the first `switch` pairs on one grade family and
/// the rest on the other; `None` when every weight is zero.
fn switch_value(pairs: &[TrustPair], switch: usize, end: End) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (v, p) in pairs.iter().enumerate() {
        let (before, after) = end.weights(p);
        let w = if v < switch { before } else { after };
        num += w * p.value;
        den += w;
    }
    (den > 0.0).then(|| num / den)
}

/// Relative slack that covers the rounding gap between running and fresh
/// sums over a few dozen terms.
const RESCORE_SLACK: f64 = 1e-9;

fn best_switch(pairs: &[TrustPair], end: End) -> Option<(usize, f64)> {
    let n = pairs.len();
    let mut num: f64 = pairs.iter().map(|p| end.weights(p).1 * p.value).sum();
    let mut den: f64 = pairs.iter().map(|p| end.weights(p).1).sum();
    let mut scores = Vec::with_capacity(n.saturating_sub(1));
    for (k, p) in pairs.iter().enumerate().take(n - 1) {
        let (before, after) = end.weights(p);
        num += (before - after) * p.value;
        den += before - after;
        // switch point k + 1 has pairs 0..=k on the `before` family
        scores.push((k + 1, (den > RESCORE_SLACK * den.abs().max(1.0)).then(|| num / den)));
    }
    let rough = scores
        .iter()
        .filter_map(|&(_, s)| s)
        .reduce(|a, b| if end.better(b, a) { b } else { a });
    let mut best: Option<(usize, f64)> = None;
    for &(k, s) in &scores {
        // near-zero denominators are rescored too; their running value is unreliable
        let near = match (s, rough) {
            (Some(s), Some(r)) => (s - r).abs() <= RESCORE_SLACK * r.abs().max(1.0),
            _ => true,
        };
        if !near {
            continue;
        }
        if let Some(v) = switch_value(pairs, k, end) {
            if best.is_none_or(|(_, b)| end.better(v, b)) {
                best = Some((k, v));
            }
        }
    }
    best
}

/// Reduces pairs sorted ascending by value to `[T_L, T_R]`.
pub fn type_reduce(pairs: &[TrustPair]) -> Result<TypeReducedInterval> {
    if pairs.len() < 2 || pairs.iter().all(|p| p.grade_lower <= 0.0 && p.grade_upper <= 0.0) {
        return Err(Error::DegenerateInput);
    }
    debug_assert!(pairs.windows(2).all(|w| w[0].value <= w[1].value));
    let (left_switch, left) = best_switch(pairs, End::Left).ok_or(Error::DegenerateInput)?;
    let (right_switch, right) = best_switch(pairs, End::Right).ok_or(Error::DegenerateInput)?;
    Ok(TypeReducedInterval {
        left,
        right,
        left_switch,
        right_switch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(value: f64, lo: f64, up: f64) -> TrustPair {
        TrustPair {
            value,
            grade_lower: lo,
            grade_upper: up,
        }
    }

    #[test]
    fn single_nonzero_pair_is_its_own_centroid() {
        let mut pairs: Vec<TrustPair> = (0..16).map(|k| pair(k as f64 / 20.0, 0.0, 0.0)).collect();
        pairs[15] = pair(0.8, 1.0, 1.0);
        let r = type_reduce(&pairs).unwrap();
        assert_eq!(r.left, 0.8);
        assert_eq!(r.right, 0.8);
    }

    #[test]
    fn crisp_grades_collapse_to_weighted_mean() {
        let pairs: Vec<TrustPair> = (0..16)
            .map(|k| {
                let g = 0.1 + (k % 5) as f64 * 0.2;
                pair(k as f64 / 15.0, g, g)
            })
            .collect();
        let num: f64 = pairs.iter().map(|p| p.value * p.grade_upper).sum();
        let den: f64 = pairs.iter().map(|p| p.grade_upper).sum();
        let r = type_reduce(&pairs).unwrap();
        assert!((r.left - num / den).abs() < 1e-12);
        assert!((r.right - num / den).abs() < 1e-12);
    }

    #[test]
    fn all_zero_grades_are_rejected() {
        let pairs: Vec<TrustPair> = (0..16).map(|k| pair(k as f64 / 15.0, 0.0, 0.0)).collect();
        assert!(matches!(type_reduce(&pairs), Err(Error::DegenerateInput)));
    }

    #[test]
    fn interval_is_ordered_and_switches_in_range() {
        let pairs = [
            pair(0.1, 0.2, 0.5),
            pair(0.3, 0.1, 0.9),
            pair(0.5, 0.6, 1.0),
            pair(0.9, 0.0, 0.3),
        ];
        let r = type_reduce(&pairs).unwrap();
        assert!(r.left <= r.right);
        assert!((1..4).contains(&r.left_switch) && (1..4).contains(&r.right_switch));
    }

    /// Independent oracle: every switch point, fresh sums, first best wins.
    fn exhaustive(pairs: &[TrustPair]) -> (f64, f64) {
        let mut left = f64::INFINITY;
        let mut right = f64::NEG_INFINITY;
        for k in 1..pairs.len() {
            let (mut ln, mut ld, mut rn, mut rd) = (0.0, 0.0, 0.0, 0.0);
            for (v, p) in pairs.iter().enumerate() {
                let (wl, wr) = if v < k {
                    (p.grade_upper, p.grade_lower)
                } else {
                    (p.grade_lower, p.grade_upper)
                };
                ln += wl * p.value;
                ld += wl;
                rn += wr * p.value;
                rd += wr;
            }
            if ld > 0.0 && ln / ld < left {
                left = ln / ld;
            }
            if rd > 0.0 && rn / rd > right {
                right = rn / rd;
            }
        }
        (left, right)
    }

    #[test]
    fn flat_lower_family_reaches_the_outer_values() {
        let mut pairs: Vec<TrustPair> = (0..16).map(|k| pair(k as f64 / 15.0, 0.0, 0.0)).collect();
        for k in [7, 9, 12] {
            pairs[k].grade_upper = 0.9;
        }
        let r = type_reduce(&pairs).unwrap();
        assert_eq!((r.left, r.right), exhaustive(&pairs));
        assert_eq!(r.left, 7.0 / 15.0);
        assert_eq!(r.right, 12.0 / 15.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn grade() -> impl Strategy<Value = f64> {
            prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0]
        }

        fn pair_set() -> impl Strategy<Value = Vec<TrustPair>> {
            proptest::collection::vec((0.0f64..=1.0, grade(), grade()), 16).prop_map(|raw| {
                let mut pairs: Vec<TrustPair> = raw.into_iter().map(|(v, a, b)| pair(v, a, b)).collect();
                pairs.sort_by(|a, b| a.value.total_cmp(&b.value));
                pairs
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(2000))]

            #[test]
            fn matches_exhaustive_search_bit_for_bit(pairs in pair_set()) {
                match type_reduce(&pairs) {
                    Ok(r) => {
                        prop_assert_eq!((r.left, r.right), exhaustive(&pairs));
                        prop_assert_eq!(switch_value(&pairs, r.left_switch, End::Left), Some(r.left));
                        prop_assert_eq!(switch_value(&pairs, r.right_switch, End::Right), Some(r.right));
                    }
                    Err(_) => prop_assert!(exhaustive(&pairs).0.is_infinite()),
                }
            }

            #[test]
            fn ordered_grades_give_an_ordered_interval(mut pairs in pair_set()) {
                for p in &mut pairs {
                    if p.grade_lower > p.grade_upper {
                        std::mem::swap(&mut p.grade_lower, &mut p.grade_upper);
                    }
                }
                if let Ok(r) = type_reduce(&pairs) {
                    prop_assert!(r.left <= r.right + 1e-12);
                    prop_assert!(r.left >= pairs[0].value - 1e-12 && r.right <= pairs[15].value + 1e-12);
                }
            }
        }
    }
}
