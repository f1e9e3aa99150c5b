//! Seeded random streams.
//!
//! Every consumer of randomness asks for its own substream keyed by
//! `(seed, tag)`. Substreams are ChaCha8 streams selected by the FNV-1a hash
//! of the tag, so adding a new consumer never shifts the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::hash::fnv1a64;

pub type StreamRng = ChaCha8Rng;

/// Independent generator for the purpose named by `tag`.
pub fn substream(seed: u64, tag: &str) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a64(tag.as_bytes()));
    rng
}

/// Substream for an indexed purpose, e.g. the shuffle of one epoch.
pub fn indexed_substream(seed: u64, tag: &str, index: u64) -> StreamRng {
    substream(seed, &format!("{tag}/{index}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_key_same_draws() {
        let a: Vec<u64> = substream(7, "data").random_iter().take(8).collect();
        let b: Vec<u64> = substream(7, "data").random_iter().take(8).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn tags_and_seeds_separate_streams() {
        let a: u64 = substream(7, "data").random();
        let b: u64 = substream(7, "masks").random();
        let c: u64 = substream(8, "data").random();
        assert_ne!(a, b);
        assert_ne!(a, c);
        let e0: u64 = indexed_substream(7, "shuffle", 0).random();
        let e1: u64 = indexed_substream(7, "shuffle", 1).random();
        assert_ne!(e0, e1);
    }
}
