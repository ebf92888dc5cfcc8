//! Seeded toy corpora for exercising the objectives.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::preference::{MaskVector, PreferenceTriplet, Scored};

/// `count` sequences, each a random motif of 2 or 3 distinct tokens repeated to `len`.
pub fn periodic_corpus(count: usize, len: usize, vocab: u32, seed: u64) -> Vec<Vec<u32>> {
    assert!(vocab >= 3, "periodic corpus needs at least 3 tokens");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<u32> = (0..vocab).collect();
    (0..count)
        .map(|_| {
            let period = rng.gen_range(2..=3);
            let motif: Vec<u32> = all.choose_multiple(&mut rng, period).copied().collect();
            (0..len).map(|i| motif[i % period]).collect()
        })
        .collect()
}

/// Periodic winners against uniformly random losers. Winner masks mark a
/// leading block, loser masks leave a trailing block unmarked.
pub fn synthetic_triplets(count: usize, len: usize, vocab: u32, seed: u64) -> Vec<PreferenceTriplet> {
    assert!(len >= 2, "triplet sequences need at least 2 tokens");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let winners = periodic_corpus(count, len, vocab, seed);
    winners
        .into_iter()
        .enumerate()
        .map(|(i, win)| {
            let lose: Vec<u32> = (0..len).map(|_| rng.gen_range(0..vocab)).collect();
            let cut_w = rng.gen_range(1..len);
            let cut_l = rng.gen_range(1..len);
            PreferenceTriplet {
                condition_id: format!("c{i}"),
                winner: Scored {
                    id: format!("w{i}"),
                    tokens: win,
                    mask: MaskVector { bits: (0..len).map(|j| u8::from(j < cut_w)).collect() },
                },
                loser: Scored {
                    id: format!("l{i}"),
                    tokens: lose,
                    mask: MaskVector { bits: (0..len).map(|j| u8::from(j < cut_l)).collect() },
                },
            }
        })
        .collect()
}
