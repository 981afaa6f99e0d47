//! Channel simulation, capacity and robustness analysis, security games.

mod analysis;
mod bsc;
mod games;
mod robustness;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::codec::CodecError;
use crate::keystream::SecretKey;
use crate::provider::{Provider, ProviderError};
use crate::vocab::{TokenId, VocabError};

pub use analysis::{
    estimate_k, k_from_probabilities, measure_capacity, predict_capacity, robustness_bound,
    run_bench, BenchReport, CapacityEstimate, CapacityMeasurement, QUOTED_K, QUOTED_ROBUSTNESS,
};
pub use bsc::{transmit_bsc, BscConfig};
pub use games::{
    covertext_false_positives, encoded_token_tv, grid_disagreement, grid_emission_frequency,
    path_product_max_error, random_distribution, FalsePositiveReport, TvReport,
};
pub use robustness::{
    classify, parse_grid, run_robustness_experiment, RobustnessConfig, RobustnessRow, TrialDiff,
};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("flip probability must lie in [0, 1], got {0}")]
    BadFlipProbability(f64),
    #[error("{0}")]
    Domain(String),
    #[error("model is degenerate: every group split is deterministic, K = {0}")]
    DegenerateModel(f64),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
}

/// Independent generator for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn random_key(rng: &mut impl Rng) -> SecretKey {
    SecretKey::from_bytes(rng.gen())
}

pub fn random_bits(rng: &mut impl Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.gen_range(0..2u8)).collect()
}

/// Draws `index` from `probs` by inverse CDF, skipping zero-mass entries.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Ordinary sampling from the model: the covertext distribution.
pub fn sample_covertext(
    provider: &dyn Provider,
    n_tokens: usize,
    history: &[TokenId],
    rng: &mut impl Rng,
) -> Result<Vec<TokenId>, ProviderError> {
    let mut h = history.to_vec();
    let mut out = Vec::with_capacity(n_tokens);
    for _ in 0..n_tokens {
        let d = provider.next_distribution(&h)?;
        let t = sample_index(d.probs(), rng.gen()) as TokenId;
        out.push(t);
        h.push(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::{FixedProvider, FixedTable};

    #[test]
    fn trial_streams_are_independent_and_reproducible() {
        let a: u64 = trial_rng(7, 0).gen();
        let b: u64 = trial_rng(7, 1).gen();
        let c: u64 = trial_rng(7, 0).gen();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn inverse_cdf() {
        let p = [0.1, 0.0, 0.2, 0.7];
        assert_eq!(sample_index(&p, 0.0), 0);
        assert_eq!(sample_index(&p, 0.099), 0);
        assert_eq!(sample_index(&p, 0.1), 2);
        assert_eq!(sample_index(&p, 0.5), 3);
        assert_eq!(sample_index(&p, 0.999_999_999_999), 3);
    }

    #[test]
    fn covertext_frequencies() {
        let p = FixedProvider::new(FixedTable::ramp4(), 1.0).unwrap();
        let mut rng = trial_rng(1, 0);
        let text = sample_covertext(&p, 40_000, &[], &mut rng).unwrap();
        for (t, want) in [0.1, 0.2, 0.3, 0.4].into_iter().enumerate() {
            let got = text.iter().filter(|&&x| x as usize == t).count() as f64 / 40_000.0;
            assert!((got - want).abs() < 0.01, "{t}: {got}");
        }
    }
}
