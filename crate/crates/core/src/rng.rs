//! Reproducible random streams.
//!
//! Every chain owns a ChaCha8 generator keyed by `(seed, stream_id)`. ChaCha
//! is counter based: the stream id selects an independent keystream, so
//! parallel chains produce the same draws regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random state owned by exactly one chain at a time.
pub type RngState = ChaCha8Rng;

/// Stream ids at or above this offset are reserved for Euler–Maruyama chains
/// so that SA and EM ensembles sharing a seed never reuse a keystream.
pub const EM_STREAM_OFFSET: u64 = 1 << 40;

/// Stream ids at or above this offset are used for diagnostic probes.
pub const PROBE_STREAM_OFFSET: u64 = 1 << 50;

pub fn seed_rng(seed: u64, stream_id: u64) -> RngState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
