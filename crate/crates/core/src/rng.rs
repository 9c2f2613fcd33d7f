//! Deterministic random streams.
//!
//! Every run has one master seed. Each (replication, purpose) pair maps to its
//! own ChaCha8 stream, so replications can be scheduled on any worker and
//! experiments that share a replication index share the draws for a purpose
//! (common random numbers across velocities or mobility models).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a stream is used for. The discriminant is part of the stream id and
/// must never be reordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    Placement = 1,
    Headings = 2,
    Motion = 3,
    InterfererFades = 4,
    SignalFades = 5,
    Arrivals = 6,
    Receivers = 7,
    KernelSamples = 8,
    Snapshots = 9,
    Oracle = 10,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Streams {
    master: u64,
}

impl Streams {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn stream(&self, replication: u64, purpose: Purpose) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        // 2^56 replications per purpose is plenty
        rng.set_stream((replication << 8) | purpose as u64);
        rng
    }
}
