//! Encoder and model-free decoder.

mod decoder;
mod encoder;
mod trace;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keystream::KeyError;
use crate::provider::ProviderError;
use crate::sampler::SamplingFunction;
use crate::vocab::{GroupSplit, VocabError};

pub use decoder::{decode, Alignment, DecodeOutcome, Decoder, Verdict};
pub use encoder::{encode, roundtrip_check, Encoder, RoundTrip};
pub use trace::StegoTrace;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("secret message is empty")]
    EmptyMessage,
    #[error("error bound must lie in (0, 1), got {0}")]
    BadErrorBound(f64),
    #[error("secret bits must be 0 or 1, got {0}")]
    BadBit(u8),
    #[error("token width must be at least 1")]
    ZeroWidth,
    #[error("max_tokens must be at least 1")]
    ZeroMaxTokens,
    #[error(
        "entropy exhausted: {confirmed} of {total} secret bits confirmed within {tokens} tokens"
    )]
    EntropyExhausted {
        confirmed: usize,
        total: usize,
        tokens: usize,
        trace: Box<StegoTrace>,
    },
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
}

/// Running score of the current secret-bit segment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Accumulator {
    pub sum_s: f64,
    pub n: u64,
}

impl Accumulator {
    #[inline]
    pub fn push(&mut self, s: f64) {
        self.sum_s += s;
        self.n += 1;
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// Hoeffding-style stopping rule `exp(−(Σs − n·b)² / (2nΔf²)) ≤ pe`,
/// evaluated as `(Σs − n·b)² ≥ 2nΔf²·(−ln pe)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionBound {
    pe: f64,
    neg_ln_pe: f64,
    delta_f: f64,
    baseline: f64,
}

impl DecisionBound {
    pub fn new(pe: f64, sf: &SamplingFunction) -> Result<Self, CodecError> {
        if !(pe > 0.0 && pe < 1.0) {
            return Err(CodecError::BadErrorBound(pe));
        }
        Ok(Self {
            pe,
            neg_ln_pe: -pe.ln(),
            delta_f: sf.delta_f(),
            baseline: sf.baseline(),
        })
    }

    pub fn pe(&self) -> f64 {
        self.pe
    }

    /// `Σs − n·b`; positive favours H₀, negative H₁.
    #[inline]
    pub fn deviation(&self, acc: &Accumulator) -> f64 {
        acc.sum_s - acc.n as f64 * self.baseline
    }

    #[inline]
    pub fn crossed(&self, acc: &Accumulator) -> bool {
        if acc.n == 0 {
            return false;
        }
        let d = self.deviation(acc);
        d * d >= 2.0 * acc.n as f64 * self.delta_f * self.delta_f * self.neg_ln_pe
    }

    /// Smallest `|Σs − n·b|` that confirms a bit after `n` token bits.
    pub fn threshold(&self, n: u64) -> f64 {
        (2.0 * n as f64 * self.delta_f * self.delta_f * self.neg_ln_pe).sqrt()
    }

    /// The bit a crossed segment decodes to. A deviation of exactly zero is `1`.
    #[inline]
    pub fn decide(&self, acc: &Accumulator) -> u8 {
        if acc.sum_s > acc.n as f64 * self.baseline {
            0
        } else {
            1
        }
    }
}

/// Threshold `τ = ((1−B)·p0 + B·p1) / (p0 + p1)` of one token-bit step.
#[inline]
pub fn threshold(split: GroupSplit, secret_bit: u8) -> f64 {
    let lead = if secret_bit == 0 { split.p0 } else { split.p1 };
    lead / split.mass()
}

/// Emits `B` when `r < τ`, else `1 − B`. With `B = 1` the `‖1` group is laid
/// out first on the unit interval, so the emitted bit keeps its marginal law.
#[inline]
pub fn sample_step(split: GroupSplit, secret_bit: u8, r: f64) -> u8 {
    debug_assert!(split.mass() > 0.0, "sampling from an empty group");
    if r < threshold(split, secret_bit) {
        secret_bit
    } else {
        1 - secret_bit
    }
}

pub(crate) fn check_bits(bits: &[u8]) -> Result<(), CodecError> {
    match bits.iter().find(|&&b| b > 1) {
        Some(&b) => Err(CodecError::BadBit(b)),
        None => Ok(()),
    }
}
