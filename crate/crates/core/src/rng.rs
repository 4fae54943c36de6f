//! Counter-based random streams.
//!
//! Every work unit (a realization, or a fixed-size block of edges inside a
//! realization) draws from its own ChaCha8 keystream addressed by
//! `(master seed, stream id, block offset)`. The numbers a unit sees depend
//! only on that address, so results do not change with the number of
//! worker threads or with the order in which rayon schedules units.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of edges that share one keystream block.
pub const EDGE_BLOCK: usize = 4096;

/// Words reserved per block. A block that consumes more than this would
/// overlap the next one; at 2^36 words that needs ~10^10 draws per edge.
const BLOCK_WORDS: u128 = 1 << 36;

/// Stream for work unit `(stream, block)` under `seed`.
pub fn unit_rng(seed: u64, stream: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(block as u128 * BLOCK_WORDS);
    rng
}

/// Stream for realization `r` when a realization needs a single generator.
pub fn realization_rng(seed: u64, r: u64) -> ChaCha8Rng {
    unit_rng(seed, r, 0)
}

/// Sub-seed for an independent family of streams (e.g. one per sweep point).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
