//! Executable sampling-complexity theory for deep ReLU networks in the
//! uniform norm.
//!
//! The crate makes one story runnable end to end: classes of ReLU networks
//! with entrywise-bounded coefficients contain localized "hat" spikes whose
//! amplitude grows exponentially in depth, and any deterministic algorithm
//! that recovers such classes from point samples to uniform accuracy needs
//! exponentially many samples — while weaker `L^p` accuracy is cheap.
//!
//! Modules:
//! - [`nn`]: plain-`Vec` MLPs, forward/backward passes, coefficient norms,
//!   class membership, JSON (de)serialization.
//! - [`hat`]: the hat/spike functions, their closed-form `L^p` sandwich, and
//!   a quadrature oracle for the same norms.
//! - [`witness`]: exact network realizations of scaled hats for coefficient
//!   exponents `q ≥ 2` and `q ≤ 2`, plus pointwise verification.
//! - [`bounds`]: the amplitude constant, sample-complexity lower bounds,
//!   grid-recovery upper bounds, operator-norm and Lipschitz bounds.
//! - [`recovery`]: deterministic sampling methods behind a recording oracle,
//!   with transcripts, budget enforcement, and piecewise-constant grid
//!   recovery.
//! - [`fooling`]: the adversary that plants a hat in the blind spot of any
//!   deterministic method, plus Monte Carlo `L^p` error estimation.
//! - [`experiments`]: teacher–student training sweeps (Adam, from scratch)
//!   measuring how the empirical error depends on the target norm.
//!
//! Everything numeric is `f64`. All randomness flows through explicitly
//! seeded [`rand_chacha::ChaCha8Rng`] streams; parallel code reduces in a
//! fixed order, so results never depend on thread count.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod exponent;
pub mod fooling;
pub mod hat;
pub mod nn;
pub mod recovery;
pub mod witness;

pub use error::{Error, Result};
pub use exponent::Exponent;
pub use hat::{HatSpec, Sign};
pub use nn::{GradientBatch, Mlp, NetworkClass};

/// Pairwise (tree) summation over a slice.
///
/// Used for every reduction whose result is exported, so that sums are
/// reproducible bit for bit regardless of how the summands were produced
/// (sequentially or from parallel chunks collected in index order).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// SplitMix64 step, the documented seed-derivation hash.
///
/// Per-task seeds are `seed_stream(&[root, tag, i, j, ...])`: fold each
/// component into the state and advance. Deterministic, order-sensitive,
/// and cheap; collisions across distinct component tuples are not a concern
/// at the scales used here.
pub fn seed_stream(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        h ^= p.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6);
        // SplitMix64 finalizer
        h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h = z ^ (z >> 31);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_sequential_on_small_inputs() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(pairwise_sum(&xs), 15.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[7.25]), 7.25);
    }

    #[test]
    fn seed_stream_is_stable_and_component_sensitive() {
        let a = seed_stream(&[1, 2, 3]);
        let b = seed_stream(&[1, 2, 3]);
        let c = seed_stream(&[1, 3, 2]);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(seed_stream(&[0]), seed_stream(&[0, 0]));
    }
}
