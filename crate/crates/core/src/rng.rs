//! Seeded, labelled random substreams.
//!
//! Each consumer (initial data, missing events, Gibbs sampling, acquisition
//! optimization) draws from its own ChaCha stream so that changing how much
//! one consumer draws never shifts another consumer's sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const INIT_DATA: &str = "init-data";
pub const MISSING_EVENTS: &str = "missing-events";
pub const GIBBS: &str = "gibbs";
pub const ACQ_OPT: &str = "acq-opt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A fresh generator for `label`. Calling this twice with the same label
    /// restarts the same sequence.
    pub fn substream(&self, label: &str) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(fnv1a(label.as_bytes()));
        rng
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
