//! Counter-derived random substreams.
//!
//! Replication `i` of a run with seed `s` draws arrivals from ChaCha8 stream
//! `2i` and packets from stream `2i + 1` of the key derived from `s`. The
//! streams depend only on `(s, i)`, so results do not depend on how
//! replications are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct ReplicationStreams {
    pub arrivals: ChaCha8Rng,
    pub packets: ChaCha8Rng,
}

pub fn replication_streams(seed: u64, index: u64) -> ReplicationStreams {
    let base = ChaCha8Rng::seed_from_u64(seed);
    let mut arrivals = base.clone();
    arrivals.set_stream(index << 1);
    let mut packets = base;
    packets.set_stream((index << 1) | 1);
    ReplicationStreams { arrivals, packets }
}
