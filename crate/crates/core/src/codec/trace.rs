use serde::{Deserialize, Serialize};

use crate::vocab::TokenId;

/// Full record of one encoder run.
///
/// `token_bits` has one character per step and `r_values` and `sum_s` one
/// entry per step. `bit_boundaries[i]` is the number of token bits consumed
/// when secret bit `i` was confirmed, always a multiple of `bit_len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StegoTrace {
    pub sampler: String,
    pub pe: f64,
    pub vocab_size: usize,
    pub bit_len: u32,
    /// Keystream counter at the first step.
    pub counter_start: u64,
    pub secret_bits: String,
    pub tokens: Vec<TokenId>,
    pub token_bits: String,
    pub r_values: Vec<f64>,
    pub bit_boundaries: Vec<usize>,
    /// Accumulator sum after each step, before any reset at that step.
    pub sum_s: Vec<f64>,
}

impl StegoTrace {
    pub fn confirmed_bits(&self) -> usize {
        self.bit_boundaries.len()
    }

    /// Token bits per confirmed secret bit, or `None` before the first one.
    pub fn bits_per_secret_bit(&self) -> Option<f64> {
        let last = *self.bit_boundaries.last()?;
        Some(last as f64 / self.bit_boundaries.len() as f64)
    }

    pub fn token_bit_values(&self) -> Vec<u8> {
        self.token_bits.bytes().map(|c| c - b'0').collect()
    }
}
