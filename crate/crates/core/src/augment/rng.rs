use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Root seed for every random draw in a run.
///
/// Each draw site gets its own ChaCha8 stream whose 256-bit key is the
/// SHA-256 of the root seed and a list of labels (for augmentation: the
/// clip's source id and the augmentation tag). Results therefore depend only
/// on `(seed, labels)`, never on processing order or worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn digest(&self, domain: &str, labels: &[&str]) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"speechaug/v1\0");
        h.update((domain.len() as u64).to_le_bytes());
        h.update(domain.as_bytes());
        h.update(self.0.to_le_bytes());
        for label in labels {
            h.update((label.len() as u64).to_le_bytes());
            h.update(label.as_bytes());
        }
        h.finalize().into()
    }

    /// Random stream for augmenting `source_id` with the augmentation `tag`.
    pub fn stream(&self, source_id: &str, tag: &str) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.digest("augment", &[source_id, tag]))
    }
}
