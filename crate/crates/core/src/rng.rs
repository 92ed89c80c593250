//! Reproducible random-number substreams.
//!
//! Every simulation task (one replicate of one scenario) owns an independent
//! generator derived from `(master_seed, label, index)` by hashing the triple
//! with SHA-256 into a 32-byte ChaCha seed. Streams are therefore independent
//! of task scheduling: running replicates in any order, on any number of
//! worker threads, consumes exactly the same deviates per task.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// The generator handed to simulation tasks.
pub type TaskRng = ChaCha12Rng;

/// Derive the substream for task `index` of the stream named `label` under
/// `master_seed`. Same triple, same stream, always.
pub fn substream(master_seed: u64, label: &str, index: u64) -> TaskRng {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    ChaCha12Rng::from_seed(hasher.finalize().into())
}
