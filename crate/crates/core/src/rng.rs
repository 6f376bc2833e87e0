//! Counter-based, splittable random streams.
//!
//! A stream is a ChaCha key derived from an experiment seed and a path of
//! integer labels (purpose tag, sweep point, repetition, shot index, ...).
//! Two streams with the same path always produce the same numbers, and the
//! numbers do not depend on the order in which streams are created, so shots
//! can run on any thread in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags separating the sub-streams drawn inside one shot.
pub mod purpose {
    pub const UNITARY: u64 = 0x5551;
    pub const OUTCOME: u64 = 0x5552;
    pub const MAPPING: u64 = 0x5553;
    pub const SHOT: u64 = 0x5554;
    pub const NUMERATOR: u64 = 0x5555;
    pub const DENOMINATOR: u64 = 0x5556;
    pub const PILOT: u64 = 0x5557;
    pub const POINT: u64 = 0x5558;
    pub const REPETITION: u64 = 0x5559;
    pub const PROTOCOL: u64 = 0x555a;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A keyed random stream; cheap to copy and to split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
    path: u64,
    depth: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            path: 0,
            depth: 0,
        }
    }

    /// Child stream labelled by `label`.
    pub fn split(&self, label: u64) -> Self {
        RngStream {
            seed: self.seed,
            path: splitmix64(self.path ^ splitmix64(label.wrapping_add(self.depth << 48))),
            depth: self.depth + 1,
        }
    }

    /// Child stream for `(purpose, index)`.
    pub fn child(&self, purpose: u64, index: u64) -> Self {
        self.split(purpose).split(index)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The generator for this stream, positioned at its start.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.path.to_le_bytes());
        key[16..24].copy_from_slice(&self.depth.to_le_bytes());
        key[24..].copy_from_slice(&splitmix64(self.path ^ self.seed).to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_path_same_numbers() {
        let a = RngStream::new(7).child(purpose::SHOT, 3).rng().random::<u64>();
        let b = RngStream::new(7).child(purpose::SHOT, 3).rng().random::<u64>();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_paths_diverge() {
        let s = RngStream::new(7);
        let a = s.child(purpose::SHOT, 3).rng().random::<u64>();
        let b = s.child(purpose::SHOT, 4).rng().random::<u64>();
        let c = s.child(purpose::UNITARY, 3).rng().random::<u64>();
        let d = RngStream::new(8).child(purpose::SHOT, 3).rng().random::<u64>();
        assert!(a != b && a != c && a != d);
    }

    #[test]
    fn split_order_matters() {
        let s = RngStream::new(1);
        assert_ne!(s.split(1).split(2), s.split(2).split(1));
    }
}
