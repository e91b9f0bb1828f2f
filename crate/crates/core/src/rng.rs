//! Independent, reproducible random streams.
//!
//! Every consumer of randomness (a link's channels, a vehicle's sensors, a
//! link's reference-channel picker) draws from its own ChaCha stream whose
//! key is a SHA-256 digest of `(master seed, scenario id, purpose, index)`.
//! Adding a vehicle therefore never shifts another stream's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamPurpose {
    /// Channel noise and attack injection on the link into a vehicle.
    Link,
    /// Distance/velocity sensor noise of a vehicle.
    Sensors,
    /// Random reference-channel selection for isolation.
    Reference,
}

impl StreamPurpose {
    fn tag(self) -> &'static [u8] {
        match self {
            StreamPurpose::Link => b"link",
            StreamPurpose::Sensors => b"sensors",
            StreamPurpose::Reference => b"reference",
        }
    }
}

pub fn stream_seed(master_seed: u64, scenario_id: &str, purpose: StreamPurpose, index: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(b"platoon-shield/v1");
    hasher.update(master_seed.to_le_bytes());
    hasher.update((scenario_id.len() as u64).to_le_bytes());
    hasher.update(scenario_id.as_bytes());
    hasher.update(purpose.tag());
    hasher.update(index.to_le_bytes());
    hasher.finalize().into()
}

pub fn stream_rng(master_seed: u64, scenario_id: &str, purpose: StreamPurpose, index: u64) -> StreamRng {
    StreamRng::from_seed(stream_seed(master_seed, scenario_id, purpose, index))
}
