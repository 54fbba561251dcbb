//! Deterministic RNG derivation.
//!
//! Every random decision in a run is drawn from a `ChaCha8` generator keyed
//! by the user-facing seed, with one fixed stream id per consumer. Streams
//! keep the consumers independent: adding draws to one stage can never shift
//! the randomness seen by another, and two stages given the same seed never
//! replay each other's sequence.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Boolean-factorization clustering (seeding, restarts).
pub(crate) const STREAM_MAC: u64 = 1;
/// Affiliation-model edge sampling during network inference.
pub(crate) const STREAM_AGM: u64 = 2;
/// GCN parameter initialization.
pub(crate) const STREAM_PARAMS: u64 = 3;
/// Query selection (random-sampling baseline).
pub(crate) const STREAM_EXPLORE: u64 = 4;
/// Synthetic dataset generation.
pub(crate) const STREAM_SYNTH: u64 = 5;
/// Gradient-check instance generation.
pub(crate) const STREAM_GRADCHECK: u64 = 6;

/// A generator for `stream` under `seed`.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_same_stream_replays() {
        let mut a = stream_rng(7, STREAM_MAC);
        let mut b = stream_rng(7, STREAM_MAC);
        let xs: Vec<u64> = (0..8).map(|_| a.random()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.random()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn streams_are_independent() {
        let mut a = stream_rng(7, STREAM_MAC);
        let mut b = stream_rng(7, STREAM_AGM);
        let xs: Vec<u64> = (0..8).map(|_| a.random()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.random()).collect();
        assert_ne!(xs, ys);
    }
}
