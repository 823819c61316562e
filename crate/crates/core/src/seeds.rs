//! Named, order-independent randomness substreams.
//!
//! Every random draw in the laboratory is keyed by a master seed plus a path
//! of domain tags. Two call sites with different paths get independent
//! streams; the same path always yields the same stream, regardless of
//! evaluation order or thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Builder for a derived substream key.
#[derive(Clone)]
pub struct SubSeed {
    hasher: Sha256,
}

impl SubSeed {
    /// Starts a derivation rooted at `master` under a domain label.
    pub fn new(domain: &str, master: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"probelab.subseed.v1");
        hasher.update([0x00]);
        hasher.update(domain.as_bytes());
        hasher.update([0x01]);
        hasher.update(master.to_le_bytes());
        Self { hasher }
    }

    pub fn u64(mut self, v: u64) -> Self {
        self.hasher.update([0x02]);
        self.hasher.update(v.to_le_bytes());
        self
    }

    pub fn str(mut self, s: &str) -> Self {
        self.hasher.update([0x03]);
        self.hasher.update((s.len() as u64).to_le_bytes());
        self.hasher.update(s.as_bytes());
        self
    }

    pub fn key(self) -> [u8; 32] {
        self.hasher.finalize().into()
    }

    /// A ChaCha stream seeded with the derived key.
    pub fn rng(self) -> ChaCha12Rng {
        ChaCha12Rng::from_seed(self.key())
    }

    /// First eight bytes of the derived key as a secondary seed.
    pub fn seed64(self) -> u64 {
        let key = self.key();
        u64::from_le_bytes(key[..8].try_into().expect("key is 32 bytes"))
    }
}
