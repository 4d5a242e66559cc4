//! The five secret seeds and their on-disk format.
//!
//! A key file is TOML with one hex string per key:
//!
//! ```toml
//! k1 = "0x0123456789abcdef"
//! k2 = "0x..."
//! k3 = "0x..."
//! k4 = "0x..."
//! k5 = "0x..."
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Seeds for block permutation (k1), sub-block permutation (k2), per-channel
/// orientation (k3), per-channel polarity (k4) and channel shuffle (k5).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct KeySet {
    pub k1: u64,
    pub k2: u64,
    pub k3: u64,
    pub k4: u64,
    pub k5: u64,
}

#[derive(Serialize, Deserialize)]
struct KeyFile {
    k1: String,
    k2: String,
    k3: String,
    k4: String,
    k5: String,
}

impl KeySet {
    pub fn new(keys: [u64; 5]) -> Self {
        let [k1, k2, k3, k4, k5] = keys;
        Self { k1, k2, k3, k4, k5 }
    }

    pub fn as_array(&self) -> [u64; 5] {
        [self.k1, self.k2, self.k3, self.k4, self.k5]
    }

    /// Derives a key set from a master seed and a context label, e.g. `(dataset, image, key index)`.
    pub fn derive(master: u64, context: &[&[u8]]) -> Self {
        let mut h = Sha256::new();
        h.update(master.to_le_bytes());
        for part in context {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part);
        }
        let digest = h.finalize();
        let mut keys = [0u64; 5];
        for (i, k) in keys.iter_mut().enumerate() {
            // 32 digest bytes give four words; the fifth reuses a rehash.
            let bytes: [u8; 8] = if i < 4 {
                digest[i * 8..i * 8 + 8].try_into().unwrap()
            } else {
                Sha256::digest(digest)[..8].try_into().unwrap()
            };
            *k = u64::from_le_bytes(bytes);
        }
        Self::new(keys)
    }

    pub fn to_toml(&self) -> String {
        let f = |k: u64| format!("0x{k:016x}");
        let file = KeyFile {
            k1: f(self.k1),
            k2: f(self.k2),
            k3: f(self.k3),
            k4: f(self.k4),
            k5: f(self.k5),
        };
        toml::to_string(&file).expect("key file serialises")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: KeyFile = toml::from_str(text).map_err(|e| Error::KeyFile(e.to_string()))?;
        let parse = |name: &str, s: &str| -> Result<u64> {
            let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
            if digits.is_empty() || digits.len() > 16 {
                return Err(Error::KeyFile(format!("{name}: expected up to 16 hex digits, got {s:?}")));
            }
            u64::from_str_radix(digits, 16).map_err(|e| Error::KeyFile(format!("{name}: {e}")))
        };
        Ok(Self {
            k1: parse("k1", &file.k1)?,
            k2: parse("k2", &file.k2)?,
            k3: parse("k3", &file.k3)?,
            k4: parse("k4", &file.k4)?,
            k5: parse("k5", &file.k5)?,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }
}
