use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{random_bits, random_key, trial_rng, LabError};
use crate::codec::{Alignment, CodecError, Decoder, Encoder, StegoTrace};
use crate::keystream::Keystream;
use crate::provider::Provider;
use crate::sampler::SamplingFunction;
use crate::vocab::{GroupTree, TokenId};

/// K reported for a 7B instruction model at T = 1.
pub const QUOTED_K: f64 = 0.69;

/// Robustness quoted alongside [`QUOTED_K`]; the bound formula gives ≈ 0.101
/// for that K with Δf = 2.
pub const QUOTED_ROBUSTNESS: f64 = 0.049;

const PATH_TOKENS: usize = 256;

/// Mean gap over a sample of conditional group probabilities.
pub fn k_from_probabilities(sf: &SamplingFunction, ps: &[f64]) -> f64 {
    ps.iter().map(|&p| sf.gap(p)).sum::<f64>() / ps.len() as f64
}

/// `K = E[gap(p)]` over the group splits met along model-sampled paths.
pub fn estimate_k(
    provider: &dyn Provider,
    sf: &SamplingFunction,
    num_samples: usize,
    seed: u64,
) -> Result<f64, LabError> {
    if num_samples < 1000 {
        return Err(LabError::Domain(format!(
            "estimate_k needs at least 1000 samples, got {num_samples}"
        )));
    }
    let alphabet = provider.alphabet();
    let mut rng = trial_rng(seed, 0);
    let mut ps = Vec::with_capacity(num_samples);
    let mut history: Vec<TokenId> = Vec::new();
    while ps.len() < num_samples {
        if history.len() == PATH_TOKENS {
            history.clear();
        }
        let tree = GroupTree::new(&alphabet, &provider.next_distribution(&history)?)?;
        let mut prefix = 0u64;
        for depth in 0..alphabet.bit_len() {
            let split = tree.split_at(depth, prefix);
            let p0 = split.p0_conditional().expect("reachable groups have mass");
            ps.push(p0);
            let bit: u64 = if rng.gen::<f64>() < p0 { 0 } else { 1 };
            prefix = (prefix << 1) | bit;
        }
        history.push(prefix as TokenId);
    }
    ps.truncate(num_samples);
    let k = k_from_probabilities(sf, &ps);
    if k < 1e-9 {
        return Err(LabError::DegenerateModel(k));
    }
    Ok(k)
}

/// Expected token bits per secret bit, `2Δf²(−ln pe) / K²`.
pub fn predict_capacity(k: f64, sf: &SamplingFunction, pe: f64) -> Result<f64, LabError> {
    if k.is_nan() || k <= 0.0 {
        return Err(LabError::Domain(format!("K must be positive, got {k}")));
    }
    if !(pe > 0.0 && pe <= 1.0) {
        return Err(LabError::Domain(format!("pe must lie in (0, 1], got {pe}")));
    }
    let df = sf.delta_f();
    Ok(2.0 * df * df * -pe.ln() / (k * k))
}

/// Largest flip rate the segment of `n` token bits tolerates,
/// `(1 − √2/2)·K/Δf − 1/n`. Pass `f64::INFINITY` for the limit.
pub fn robustness_bound(k: f64, sf: &SamplingFunction, n: f64) -> f64 {
    (1.0 - std::f64::consts::FRAC_1_SQRT_2) * k / sf.delta_f() - 1.0 / n
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityEstimate {
    pub k: f64,
    pub predicted_min_n: f64,
    pub empirical_n: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityMeasurement {
    pub sampler: String,
    pub pe: f64,
    pub trials: usize,
    pub secret_bits: usize,
    pub tokens: usize,
    pub token_bits: usize,
    /// Mean token bits per confirmed secret bit.
    pub mean_n: f64,
    /// Standard error of `mean_n` over confirmed segments.
    pub std_error: f64,
    pub bits_per_1000_tokens: f64,
    pub exhausted_trials: usize,
}

fn encode_trial(
    provider: &dyn Provider,
    encoder: &Encoder<'_>,
    seed: u64,
    index: usize,
    bits_per_trial: usize,
) -> Result<(StegoTrace, bool), LabError> {
    let mut rng = trial_rng(seed, index as u64);
    let key = random_key(&mut rng);
    let msg = random_bits(&mut rng, bits_per_trial);
    match encoder.encode(provider, &mut Keystream::new(key), &msg, &[]) {
        Ok(trace) => Ok((trace, false)),
        Err(CodecError::EntropyExhausted { trace, .. }) => Ok((*trace, true)),
        Err(e) => Err(e.into()),
    }
}

/// Encodes `trials` random messages and measures the embedding rate.
/// Exhausted runs contribute their confirmed bits and all their tokens.
pub fn measure_capacity(
    provider: &dyn Provider,
    sf: &SamplingFunction,
    pe: f64,
    trials: usize,
    bits_per_trial: usize,
    max_tokens: usize,
    seed: u64,
) -> Result<CapacityMeasurement, LabError> {
    let encoder = Encoder::new(sf, pe, max_tokens)?;
    let traces = (0..trials)
        .into_par_iter()
        .map(|i| encode_trial(provider, &encoder, seed, i, bits_per_trial))
        .collect::<Result<Vec<_>, _>>()?;
    let mut segments = Vec::new();
    let (mut tokens, mut token_bits, mut exhausted) = (0, 0, 0);
    for (t, ex) in &traces {
        let mut prev = 0;
        for &b in &t.bit_boundaries {
            segments.push((b - prev) as f64);
            prev = b;
        }
        tokens += t.tokens.len();
        token_bits += t.r_values.len();
        exhausted += usize::from(*ex);
    }
    let count = segments.len() as f64;
    let mean_n = segments.iter().sum::<f64>() / count;
    let var = segments.iter().map(|s| (s - mean_n).powi(2)).sum::<f64>() / (count - 1.0);
    Ok(CapacityMeasurement {
        sampler: sf.name().to_string(),
        pe,
        trials,
        secret_bits: segments.len(),
        tokens,
        token_bits,
        mean_n,
        std_error: (var / count).sqrt(),
        bits_per_1000_tokens: 1000.0 * count / tokens as f64,
        exhausted_trials: exhausted,
    })
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BenchReport {
    pub provider: String,
    pub sampler: String,
    pub pe: f64,
    pub trials: usize,
    pub secret_bits: usize,
    pub tokens: usize,
    pub capacity_bits_per_1000_tokens: Option<f64>,
    pub encode_secs_per_1000_tokens: Option<f64>,
    pub decode_secs_per_1000_tokens: Option<f64>,
    /// Mean model entropy per stegotext position, bits per token.
    pub mean_entropy_bits: Option<f64>,
    pub exhausted_trials: usize,
}

/// Sequential encode/decode benchmark. Decoding runs on the token bits alone.
pub fn run_bench(
    provider: &dyn Provider,
    sf: &SamplingFunction,
    pe: f64,
    trials: usize,
    bits_per_trial: usize,
    max_tokens: usize,
    seed: u64,
) -> Result<BenchReport, LabError> {
    let mut report = BenchReport {
        provider: provider.describe(),
        sampler: sf.name().to_string(),
        pe,
        trials,
        ..Default::default()
    };
    if trials == 0 {
        return Ok(report);
    }
    let encoder = Encoder::new(sf, pe, max_tokens)?;
    let decoder = Decoder::new(
        sf,
        pe,
        Alignment::TokenBoundary(provider.alphabet().bit_len()),
    )?;
    let (mut enc_secs, mut dec_secs, mut entropy_sum) = (0.0, 0.0, 0.0);
    for i in 0..trials {
        let mut rng = trial_rng(seed, i as u64);
        let key = random_key(&mut rng);
        let msg = random_bits(&mut rng, bits_per_trial);

        let t0 = Instant::now();
        let trace = match encoder.encode(provider, &mut Keystream::new(key.clone()), &msg, &[]) {
            Ok(t) => t,
            Err(CodecError::EntropyExhausted { trace, .. }) => {
                report.exhausted_trials += 1;
                *trace
            }
            Err(e) => return Err(e.into()),
        };
        enc_secs += t0.elapsed().as_secs_f64();

        let bits = trace.token_bit_values();
        let t0 = Instant::now();
        let out = decoder
            .decode(&mut Keystream::new(key), &bits)
            .map_err(CodecError::from)?;
        dec_secs += t0.elapsed().as_secs_f64();

        report.secret_bits += out
            .bits
            .iter()
            .zip(&msg)
            .take_while(|(a, b)| a == b)
            .count();
        report.tokens += trace.tokens.len();
        for j in 0..trace.tokens.len() {
            entropy_sum += provider.next_distribution(&trace.tokens[..j])?.entropy();
        }
    }
    if report.tokens > 0 {
        let per_k = 1000.0 / report.tokens as f64;
        report.capacity_bits_per_1000_tokens = Some(report.secret_bits as f64 * per_k);
        report.encode_secs_per_1000_tokens = Some(enc_secs * per_k);
        report.decode_secs_per_1000_tokens = Some(dec_secs * per_k);
        report.mean_entropy_bits = Some(entropy_sum / report.tokens as f64);
    }
    Ok(report)
}
