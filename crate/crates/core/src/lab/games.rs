//! Executable forms of the indistinguishability argument.
//!
//! * Per step, the emitted bit has law `p0 : p1` whichever secret bit is
//!   embedded ([`grid_emission_frequency`]).
//! * Chaining steps down the tree reproduces the token law exactly
//!   ([`path_product_max_error`]).
//! * End to end, encoder output matches the model ([`encoded_token_tv`]).

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{random_bits, random_key, sample_covertext, trial_rng, LabError};
use crate::codec::{sample_step, Alignment, CodecError, Decoder, Encoder};
use crate::keystream::Keystream;
use crate::provider::Provider;
use crate::sampler::SamplingFunction;
use crate::vocab::{Alphabet, Distribution, GroupSplit, GroupTree};

/// Skewed random distribution over `size` tokens with about one in ten
/// entries exactly zero.
pub fn random_distribution(rng: &mut impl Rng, size: usize) -> Distribution {
    loop {
        let w: Vec<f64> = (0..size)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    0.0
                } else {
                    rng.gen::<f64>().powi(3)
                }
            })
            .collect();
        if let Ok(d) = Distribution::from_weights(w) {
            return d;
        }
    }
}

/// Fraction of the grid `r = i/N` on which `secret_bit` emits token bit 0.
pub fn grid_emission_frequency(split: GroupSplit, secret_bit: u8, grid: usize) -> f64 {
    let zeros = (0..grid)
        .filter(|&i| sample_step(split, secret_bit, i as f64 / grid as f64) == 0)
        .count();
    zeros as f64 / grid as f64
}

/// Fraction of the grid on which the two secret bits emit different token
/// bits. Equals `2·min(p0, p1)/(p0 + p1)` up to grid resolution: this is the
/// set through which the secret bit is carried.
pub fn grid_disagreement(split: GroupSplit, grid: usize) -> f64 {
    let differ = (0..grid)
        .filter(|&i| {
            let r = i as f64 / grid as f64;
            sample_step(split, 0, r) != sample_step(split, 1, r)
        })
        .count();
    differ as f64 / grid as f64
}

/// Largest `|Π P(bᵢ | b₁..ᵢ₋₁) − p(t)|` over all tokens, where each factor is
/// the step law `p_{bᵢ}/(p0 + p1)` the encoder samples from.
pub fn path_product_max_error(alphabet: &Alphabet, dist: &Distribution) -> Result<f64, LabError> {
    let tree = GroupTree::new(alphabet, dist)?;
    let l = alphabet.bit_len();
    let mut worst: f64 = 0.0;
    for (t, &p) in dist.probs().iter().enumerate() {
        let mut product = 1.0;
        for depth in 0..l {
            let prefix = (t as u64) >> (l - depth);
            let bit = ((t as u64) >> (l - depth - 1)) & 1;
            let split = tree.split_at(depth, prefix);
            let branch = if bit == 0 { split.p0 } else { split.p1 };
            if branch == 0.0 {
                product = 0.0;
                break;
            }
            product *= branch / split.mass();
        }
        worst = worst.max((product - p).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct TvReport {
    pub tokens: usize,
    pub counts: Vec<usize>,
    pub expected: Vec<f64>,
    pub tv: f64,
}

/// Histogram of encoder output over random keys and messages against the
/// model's (history-independent) distribution.
pub fn encoded_token_tv(
    provider: &dyn Provider,
    sf: &SamplingFunction,
    pe: f64,
    total_tokens: usize,
    seed: u64,
) -> Result<TvReport, LabError> {
    const CHUNK: usize = 1000;
    let expected = provider.next_distribution(&[])?.probs().to_vec();
    let encoder = Encoder::new(sf, pe, CHUNK)?;
    let chunks = total_tokens.div_ceil(CHUNK);
    let runs = (0..chunks)
        .into_par_iter()
        .map(|i| -> Result<Vec<u32>, LabError> {
            let mut rng = trial_rng(seed, i as u64);
            let key = random_key(&mut rng);
            let msg = random_bits(&mut rng, 256);
            let tokens = match encoder.encode(provider, &mut Keystream::new(key), &msg, &[]) {
                Ok(t) => t.tokens,
                Err(CodecError::EntropyExhausted { trace, .. }) => trace.tokens,
                Err(e) => return Err(e.into()),
            };
            Ok(tokens)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut counts = vec![0usize; expected.len()];
    let mut n = 0;
    for t in runs.iter().flatten().take(total_tokens) {
        counts[*t as usize] += 1;
        n += 1;
    }
    let tv = 0.5
        * counts
            .iter()
            .zip(&expected)
            .map(|(&c, &p)| (c as f64 / n as f64 - p).abs())
            .sum::<f64>();
    Ok(TvReport {
        tokens: n,
        counts,
        expected,
        tv,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FalsePositiveReport {
    pub texts: usize,
    pub tokens_per_text: usize,
    pub with_bits: usize,
    pub rate: f64,
}

/// Decodes ordinary model samples under random keys and counts texts that
/// yield at least one bit.
pub fn covertext_false_positives(
    provider: &dyn Provider,
    sf: &SamplingFunction,
    pe: f64,
    texts: usize,
    tokens_per_text: usize,
    seed: u64,
) -> Result<FalsePositiveReport, LabError> {
    let alphabet = provider.alphabet();
    let decoder = Decoder::new(sf, pe, Alignment::TokenBoundary(alphabet.bit_len()))?;
    let hits = (0..texts)
        .into_par_iter()
        .map(|i| -> Result<bool, LabError> {
            let mut rng = trial_rng(seed, i as u64);
            let key = random_key(&mut rng);
            let text = sample_covertext(provider, tokens_per_text, &[], &mut rng)?;
            let bits = alphabet.tokens_to_bits(&text)?;
            let out = decoder
                .decode(&mut Keystream::new(key), &bits)
                .map_err(CodecError::from)?;
            Ok(!out.bits.is_empty())
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .filter(|&h| h)
        .count();
    Ok(FalsePositiveReport {
        texts,
        tokens_per_text,
        with_bits: hits,
        rate: hits as f64 / texts.max(1) as f64,
    })
}
