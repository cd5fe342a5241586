//! Deterministic substream scheme shared by every randomized operation.
//!
//! Work is partitioned into fixed-size chunks of [`STREAM_CHUNK`] replicates
//! (or draws). Chunk `i` consumes the ChaCha8 stream with index `i` derived
//! from the user seed, so results are identical no matter how chunks are
//! scheduled across workers. Changing `STREAM_CHUNK` changes outputs and is
//! a breaking change to the reproducibility contract.

use crate::special::standard_normal_quantile;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Replicates (or draws) consumed per RNG stream.
pub const STREAM_CHUNK: usize = 4096;

/// Number of chunks needed to cover `total` replicates.
pub fn chunk_count(total: u64) -> u64 {
    total.div_ceil(STREAM_CHUNK as u64)
}

/// Replicates assigned to chunk `chunk` out of `total`.
pub fn chunk_len(total: u64, chunk: u64) -> usize {
    let start = chunk * STREAM_CHUNK as u64;
    debug_assert!(start < total);
    (total - start).min(STREAM_CHUNK as u64) as usize
}

/// The generator for one (seed, stream) pair.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const TWO_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

/// Uniform draw on (0, 1]; never returns 0 so logs stay finite.
pub fn uniform_open_closed<R: RngCore>(rng: &mut R) -> f64 {
    (((rng.next_u64() >> 11) + 1) as f64) * TWO_NEG_53
}

/// Uniform draw on the open interval (0, 1).
pub fn uniform_open_open<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 12) * 2 + 1) as f64 * TWO_NEG_53
}

/// Standard normal draw by inverse-CDF; consumes exactly one `next_u64`.
pub fn standard_normal<R: RngCore>(rng: &mut R) -> f64 {
    standard_normal_quantile(uniform_open_open(rng))
}
