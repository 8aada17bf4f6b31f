//! Benchmark fixtures shared by the criterion targets.

use egscfo_core::fuzzy::TrustPair;

/// A fixed, sorted set of trust pairs with mixed grades.
pub fn sample_pairs() -> Vec<TrustPair> {
    (0..16)
        .map(|i| {
            let x = f64::from(i);
            TrustPair {
                value: x / 15.0,
                grade_lower: ((x * 0.37).sin() * 0.5 + 0.5) * 0.8,
                grade_upper: (x * 0.23).cos() * 0.5 + 0.5,
            }
        })
        .collect()
}

/// Deterministic pseudo-random trust values in `(0, 1]`.
pub fn sample_trust_set(len: usize) -> Vec<f64> {
    let mut state = 0x9e37_79b9_u64;
    (0..len)
        .map(|_| {
            state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1);
            ((state >> 11) as f64 / (1u64 << 53) as f64).max(1e-6)
        })
        .collect()
}
