//! Deterministic random sub-streams.
//!
//! Every Monte Carlo trial draws from its own generator, keyed by the master
//! seed, a purpose tag and the trial index. Results therefore do not depend on
//! how trials are scheduled across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A family of independent random streams indexed by trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Streams {
    key: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Streams { key: mix(seed) }
    }

    /// Child family for a sub-task; distinct tags give unrelated streams.
    pub fn derive(&self, tag: u64) -> Self {
        Streams {
            key: mix(self.key ^ mix(tag.wrapping_add(0xA076_1D64_78BD_642F))),
        }
    }

    /// Child family keyed by a string label.
    pub fn derive_label(&self, label: &str) -> Self {
        let tag = label
            .bytes()
            .fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x1000_0000_01B3));
        self.derive(tag)
    }

    /// Generator for trial `index`.
    pub fn trial(&self, index: u64) -> TrialRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(index);
        rng
    }
}
