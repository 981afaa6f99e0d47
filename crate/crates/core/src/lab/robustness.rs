use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{random_bits, random_key, transmit_bsc, trial_rng, BscConfig, LabError};
use crate::codec::{Alignment, CodecError, Decoder, Encoder};
use crate::keystream::Keystream;
use crate::provider::Provider;
use crate::sampler::SamplingFunction;
use crate::vocab::format_bits;

type SentDecoded = (Vec<u8>, Vec<u8>);

#[derive(Debug, Clone, Serialize)]
pub struct RobustnessConfig {
    pub encoder_pe: f64,
    pub decoder_pe: f64,
    pub e_grid: Vec<f64>,
    pub trials: usize,
    /// Secret bits per stegotext.
    pub bits_per_trial: usize,
    pub max_tokens: usize,
    pub seed: u64,
}

impl RobustnessConfig {
    /// Encoder bound `decoder_pe²`, one secret bit per stegotext.
    pub fn squared(decoder_pe: f64, e_grid: Vec<f64>, trials: usize, seed: u64) -> Self {
        Self {
            encoder_pe: decoder_pe * decoder_pe,
            decoder_pe,
            e_grid,
            trials,
            bits_per_trial: 1,
            max_tokens: 1_000_000,
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialDiff {
    pub trial: usize,
    pub sent: String,
    pub decoded: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RobustnessRow {
    pub e: f64,
    pub correct: usize,
    pub wrong: usize,
    pub lost: usize,
    pub correct_ratio: f64,
    pub wrong_ratio: f64,
    pub lost_ratio: f64,
    /// Trials whose decoded prefix differs from the message.
    pub diffs: Vec<TrialDiff>,
}

/// Prefix alignment: `(correct, wrong, lost)` over the sent positions.
/// Decoded bits past the end of the message are ignored.
pub fn classify(sent: &[u8], decoded: &[u8]) -> (usize, usize, usize) {
    let matched = sent.len().min(decoded.len());
    let correct = sent.iter().zip(decoded).filter(|(a, b)| a == b).count();
    (correct, matched - correct, sent.len() - matched)
}

/// Parses `start:stop:step` (inclusive of `stop` up to rounding) or a
/// comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, LabError> {
    let bad = || LabError::Domain(format!("bad grid `{spec}`"));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step): (f64, f64, f64) = (
                start.trim().parse().map_err(|_| bad())?,
                stop.trim().parse().map_err(|_| bad())?,
                step.trim().parse().map_err(|_| bad())?,
            );
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            // Round to the step's decimal precision so 0.07 prints as 0.07.
            let scale = 1e12;
            Ok((0..=n)
                .map(|i| ((start + i as f64 * step) * scale).round() / scale)
                .collect())
        }
        [list] => list
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| bad()))
            .collect(),
        _ => Err(bad()),
    }
}

/// Encodes random messages, passes their token bits through the BSC at every
/// `e` of the grid with coupled flips, decodes at `decoder_pe` and classifies.
pub fn run_robustness_experiment(
    provider: &dyn Provider,
    sf: &SamplingFunction,
    cfg: &RobustnessConfig,
) -> Result<Vec<RobustnessRow>, LabError> {
    if cfg.encoder_pe > cfg.decoder_pe {
        return Err(LabError::Domain(format!(
            "encoder pe {} exceeds decoder pe {}",
            cfg.encoder_pe, cfg.decoder_pe
        )));
    }
    if cfg.bits_per_trial == 0 {
        return Err(CodecError::EmptyMessage.into());
    }
    if let Some(&e) = cfg.e_grid.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(LabError::BadFlipProbability(e));
    }
    let encoder = Encoder::new(sf, cfg.encoder_pe, cfg.max_tokens)?;
    let decoder = Decoder::new(
        sf,
        cfg.decoder_pe,
        Alignment::TokenBoundary(provider.alphabet().bit_len()),
    )?;

    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|i| -> Result<Vec<SentDecoded>, LabError> {
            let mut rng = trial_rng(cfg.seed, i as u64);
            let key = random_key(&mut rng);
            let msg = random_bits(&mut rng, cfg.bits_per_trial);
            let flip_seed: u64 = rng.gen();
            let trace = encoder.encode(provider, &mut Keystream::new(key.clone()), &msg, &[])?;
            let bits = trace.token_bit_values();
            cfg.e_grid
                .iter()
                .map(|&e| {
                    let noisy = transmit_bsc(&bits, BscConfig { e, seed: flip_seed })?;
                    let out = decoder
                        .decode(&mut Keystream::new(key.clone()), &noisy)
                        .map_err(CodecError::from)?;
                    Ok((msg.clone(), out.bits))
                })
                .collect()
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(cfg
        .e_grid
        .iter()
        .enumerate()
        .map(|(j, &e)| {
            let (mut c, mut w, mut l) = (0, 0, 0);
            let mut diffs = Vec::new();
            for (trial, rows) in per_trial.iter().enumerate() {
                let (sent, decoded) = &rows[j];
                let (tc, tw, tl) = classify(sent, decoded);
                c += tc;
                w += tw;
                l += tl;
                if tc < sent.len() {
                    diffs.push(TrialDiff {
                        trial,
                        sent: format_bits(sent),
                        decoded: format_bits(decoded),
                    });
                }
            }
            let total = (c + w + l).max(1) as f64;
            RobustnessRow {
                e,
                correct: c,
                wrong: w,
                lost: l,
                correct_ratio: c as f64 / total,
                wrong_ratio: w as f64 / total,
                lost_ratio: l as f64 / total,
                diffs,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::{FixedProvider, FixedTable};

    #[test]
    fn classification() {
        assert_eq!(classify(&[1, 0, 1], &[1, 0, 1]), (3, 0, 0));
        assert_eq!(classify(&[1, 0, 1], &[1, 1]), (1, 1, 1));
        assert_eq!(classify(&[1, 0, 1], &[]), (0, 0, 3));
        assert_eq!(classify(&[1], &[1, 0, 0]), (1, 0, 0));
    }

    #[test]
    fn grid_syntax() {
        let g = parse_grid("0:0.10:0.01").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[7], 0.07);
        assert_eq!(g[10], 0.1);
        assert_eq!(parse_grid("0, 0.05,0.5").unwrap(), vec![0.0, 0.05, 0.5]);
        assert!(parse_grid("0:0.1:0").is_err());
        assert!(parse_grid("a:b:c").is_err());
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn ratios_partition_and_extremes() {
        let p = FixedProvider::new(FixedTable::balanced(4), 1.0).unwrap();
        let sf = SamplingFunction::default_cos();
        let cfg = RobustnessConfig::squared(0.01, vec![0.0, 0.5], 200, 8);
        let rows = run_robustness_experiment(&p, &sf, &cfg).unwrap();
        for r in &rows {
            assert!((r.correct_ratio + r.wrong_ratio + r.lost_ratio - 1.0).abs() < 1e-9);
        }
        assert!(rows[0].correct_ratio >= 0.999);
        assert!(rows[1].lost_ratio > 0.95, "{:?}", rows[1].lost_ratio);
    }

    #[test]
    fn rejects_inverted_bounds() {
        let p = FixedProvider::new(FixedTable::balanced(4), 1.0).unwrap();
        let sf = SamplingFunction::default_cos();
        let mut cfg = RobustnessConfig::squared(0.01, vec![0.0], 1, 0);
        cfg.encoder_pe = 0.1;
        assert!(run_robustness_experiment(&p, &sf, &cfg).is_err());
        let mut cfg = RobustnessConfig::squared(0.01, vec![1.5], 1, 0);
        cfg.trials = 1;
        assert!(run_robustness_experiment(&p, &sf, &cfg).is_err());
    }
}
