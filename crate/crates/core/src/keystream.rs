//! Keyed pseudo-random stream shared by encoder and decoder.
//!
//! Each token-bit position `i` of a message maps to one value `r_i ∈ [0, 1)`.
//! The PRF is the ChaCha20 block function (original 64-bit counter / 64-bit
//! nonce layout, nonce fixed to zero): the 64-bit word pair at keystream word
//! offset `2·i` (little endian) is the raw output for position `i`. The top 53
//! bits of that word become the mantissa of `r_i`, i.e. `r_i = ⌊x / 2¹¹⌋ · 2⁻⁵³`,
//! which is `x / 2⁶⁴` truncated to double precision and never rounds up to 1.

use std::fmt;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

/// Length of a [`SecretKey`] in bytes.
pub const KEY_LEN: usize = 32;

const INV_2_POW_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Error)]
pub enum KeyError {
    #[error("entropy source unavailable: {0}")]
    EntropyUnavailable(String),
    #[error("key must be 64 hex characters, got {0}")]
    BadLength(usize),
    #[error("key is not valid hex: {0}")]
    BadHex(#[from] hex::FromHexError),
    #[error("keystream counter exhausted")]
    CounterOverflow,
    #[error("key file I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// 32 bytes of shared key material.
#[derive(Clone)]
pub struct SecretKey([u8; KEY_LEN]);

impl SecretKey {
    pub fn from_bytes(bytes: [u8; KEY_LEN]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; KEY_LEN] {
        &self.0
    }

    /// Fresh key from the operating system's CSPRNG.
    pub fn generate() -> Result<Self, KeyError> {
        let mut bytes = [0u8; KEY_LEN];
        rand::rngs::OsRng
            .try_fill_bytes(&mut bytes)
            .map_err(|e| KeyError::EntropyUnavailable(e.to_string()))?;
        Ok(Self(bytes))
    }

    /// Deterministic key for golden tests and reproducible experiments.
    ///
    /// Not secret: anyone who knows the seed knows the key.
    pub fn from_test_seed(seed: u64) -> Self {
        let mut bytes = [0u8; KEY_LEN];
        ChaCha20Rng::seed_from_u64(seed).fill_bytes(&mut bytes);
        Self(bytes)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(text: &str) -> Result<Self, KeyError> {
        let text = text.trim();
        if text.len() != KEY_LEN * 2 {
            return Err(KeyError::BadLength(text.len()));
        }
        let mut bytes = [0u8; KEY_LEN];
        hex::decode_to_slice(text, &mut bytes)?;
        Ok(Self(bytes))
    }

    /// Key file contents: 64 lowercase hex characters and a newline.
    pub fn to_key_file(&self) -> String {
        format!("{}\n", self.to_hex())
    }

    pub fn write_file(&self, path: &Path) -> Result<(), KeyError> {
        std::fs::write(path, self.to_key_file())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self, KeyError> {
        Self::from_hex(&std::fs::read_to_string(path)?)
    }
}

impl PartialEq for SecretKey {
    fn eq(&self, other: &Self) -> bool {
        // Whole-array fold, no early exit.
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0u8, |acc, (a, b)| acc | (a ^ b))
            == 0
    }
}

impl Eq for SecretKey {}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

/// `KeyGen`: a fresh random key.
pub fn keygen() -> Result<SecretKey, KeyError> {
    SecretKey::generate()
}

/// Position-indexed stream of uniform values in `[0, 1)`.
#[derive(Clone)]
pub struct Keystream {
    key: SecretKey,
    counter: u64,
    rng: ChaCha20Rng,
}

impl Keystream {
    pub fn new(key: SecretKey) -> Self {
        let rng = ChaCha20Rng::from_seed(*key.as_bytes());
        Self {
            key,
            counter: 0,
            rng,
        }
    }

    /// Stream positioned at `counter`, as if `counter` values had been drawn.
    pub fn at(key: SecretKey, counter: u64) -> Self {
        let mut ks = Self::new(key);
        ks.seek(counter);
        ks
    }

    pub fn key(&self) -> &SecretKey {
        &self.key
    }

    /// Index of the next token bit to be drawn.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn seek(&mut self, counter: u64) {
        self.counter = counter;
        self.rng.set_word_pos(2 * u128::from(counter));
    }

    /// Rewinds to the first token bit of a message.
    pub fn reset(&mut self) {
        self.seek(0);
    }

    /// Raw 64-bit PRF output for the current position, advancing the counter.
    pub fn draw_u64(&mut self) -> Result<u64, KeyError> {
        let next = self
            .counter
            .checked_add(1)
            .ok_or(KeyError::CounterOverflow)?;
        let x = self.rng.next_u64();
        self.counter = next;
        Ok(x)
    }

    /// Next `r ∈ [0, 1)`, advancing the counter by one.
    pub fn draw_r(&mut self) -> Result<f64, KeyError> {
        self.draw_u64().map(u64_to_unit)
    }
}

impl fmt::Debug for Keystream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Keystream")
            .field("counter", &self.counter)
            .finish_non_exhaustive()
    }
}

/// Maps a raw PRF word onto `[0, 1)` using its top 53 bits.
pub fn u64_to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * INV_2_POW_53
}
