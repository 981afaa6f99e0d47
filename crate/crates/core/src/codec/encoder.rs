use serde::Serialize;

use super::decoder::{Alignment, Decoder};
use super::{check_bits, sample_step, Accumulator, CodecError, DecisionBound, StegoTrace};
use crate::keystream::{Keystream, SecretKey};
use crate::provider::Provider;
use crate::sampler::SamplingFunction;
use crate::vocab::{format_bits, GroupTree, TokenId};

/// Steganographic sampler: one secret bit at a time, one token bit per step.
#[derive(Debug, Clone)]
pub struct Encoder<'a> {
    sf: &'a SamplingFunction,
    bound: DecisionBound,
    max_tokens: usize,
}

impl<'a> Encoder<'a> {
    pub fn new(sf: &'a SamplingFunction, pe: f64, max_tokens: usize) -> Result<Self, CodecError> {
        if max_tokens == 0 {
            return Err(CodecError::ZeroMaxTokens);
        }
        Ok(Self {
            sf,
            bound: DecisionBound::new(pe, sf)?,
            max_tokens,
        })
    }

    /// Generates tokens after `history` until every secret bit is confirmed
    /// at a token boundary.
    pub fn encode(
        &self,
        provider: &dyn Provider,
        ks: &mut Keystream,
        secret_bits: &[u8],
        history: &[TokenId],
    ) -> Result<StegoTrace, CodecError> {
        if secret_bits.is_empty() {
            return Err(CodecError::EmptyMessage);
        }
        check_bits(secret_bits)?;
        let alphabet = provider.alphabet();
        let bit_len = alphabet.bit_len();
        let mut trace = StegoTrace {
            sampler: self.sf.name().to_string(),
            pe: self.bound.pe(),
            vocab_size: alphabet.size(),
            bit_len,
            counter_start: ks.counter(),
            secret_bits: format_bits(secret_bits),
            tokens: Vec::new(),
            token_bits: String::new(),
            r_values: Vec::new(),
            bit_boundaries: Vec::new(),
            sum_s: Vec::new(),
        };
        let mut history = history.to_vec();
        let mut acc = Accumulator::default();
        let mut k = 0;

        while k < secret_bits.len() {
            if trace.tokens.len() >= self.max_tokens {
                return Err(CodecError::EntropyExhausted {
                    confirmed: k,
                    total: secret_bits.len(),
                    tokens: trace.tokens.len(),
                    trace: Box::new(trace),
                });
            }
            // The secret bit only changes at token boundaries.
            let secret = secret_bits[k];
            let tree = GroupTree::new(&alphabet, &provider.next_distribution(&history)?)?;
            let mut prefix = 0u64;
            for depth in 0..bit_len {
                let r = ks.draw_r()?;
                let bit = sample_step(tree.split_at(depth, prefix), secret, r);
                acc.push(self.sf.score(bit, r));
                prefix = (prefix << 1) | u64::from(bit);
                trace.r_values.push(r);
                trace.token_bits.push(char::from(b'0' + bit));
                trace.sum_s.push(acc.sum_s);
            }
            let token = prefix as TokenId;
            trace.tokens.push(token);
            history.push(token);
            if self.bound.crossed(&acc) {
                trace.bit_boundaries.push(trace.r_values.len());
                acc.reset();
                k += 1;
            }
        }
        Ok(trace)
    }
}

/// Encodes `secret_bits` and returns the emitted tokens with the full trace.
pub fn encode(
    provider: &dyn Provider,
    ks: &mut Keystream,
    sf: &SamplingFunction,
    pe: f64,
    secret_bits: &[u8],
    history: &[TokenId],
    max_tokens: usize,
) -> Result<(Vec<TokenId>, StegoTrace), CodecError> {
    let trace = Encoder::new(sf, pe, max_tokens)?.encode(provider, ks, secret_bits, history)?;
    Ok((trace.tokens.clone(), trace))
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTrip {
    pub ok: bool,
    pub sent: String,
    pub decoded: String,
    pub tokens: usize,
    pub encoder_boundaries: Vec<usize>,
    pub decoder_boundaries: Vec<usize>,
}

/// Encodes with a fresh keystream, decodes the token bits at the same bound
/// and token alignment, and compares.
pub fn roundtrip_check(
    provider: &dyn Provider,
    key: &SecretKey,
    sf: &SamplingFunction,
    pe: f64,
    secret_bits: &[u8],
    max_tokens: usize,
) -> Result<RoundTrip, CodecError> {
    let (_, trace) = encode(
        provider,
        &mut Keystream::new(key.clone()),
        sf,
        pe,
        secret_bits,
        &[],
        max_tokens,
    )?;
    let outcome = Decoder::new(sf, pe, Alignment::TokenBoundary(trace.bit_len))?
        .decode(&mut Keystream::new(key.clone()), &trace.token_bit_values())?;
    Ok(RoundTrip {
        ok: outcome.bits == secret_bits,
        sent: trace.secret_bits.clone(),
        decoded: format_bits(&outcome.bits),
        tokens: trace.tokens.len(),
        encoder_boundaries: trace.bit_boundaries,
        decoder_boundaries: outcome.boundaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::{FixedProvider, FixedTable};
    use crate::vocab::Alphabet;

    fn balanced4() -> FixedProvider {
        FixedProvider::new(FixedTable::balanced(4), 1.0).unwrap()
    }

    #[test]
    fn trace_shape() {
        let p = balanced4();
        let sf = SamplingFunction::default_cos();
        let mut ks = Keystream::new(SecretKey::from_test_seed(1));
        let (tokens, t) = encode(&p, &mut ks, &sf, 0.001, &[1, 0, 1, 1], &[], 100_000).unwrap();
        assert_eq!(t.bit_boundaries.len(), 4);
        assert_eq!(t.token_bits.len(), tokens.len() * 2);
        assert_eq!(t.r_values.len(), t.token_bits.len());
        assert_eq!(t.sum_s.len(), t.token_bits.len());
        assert_eq!(*t.bit_boundaries.last().unwrap(), t.token_bits.len());
        assert!(t.bit_boundaries.windows(2).all(|w| w[0] < w[1]));
        assert!(t.bit_boundaries.iter().all(|b| b % 2 == 0));
        assert_eq!(ks.counter(), t.token_bits.len() as u64);
        let a = Alphabet::new(4).unwrap();
        assert_eq!(
            format_bits(&a.tokens_to_bits(&tokens).unwrap()),
            t.token_bits
        );
    }

    #[test]
    fn deterministic_given_key() {
        let p = balanced4();
        let sf = SamplingFunction::default_cos();
        let run = || {
            encode(
                &p,
                &mut Keystream::new(SecretKey::from_test_seed(9)),
                &sf,
                0.01,
                &[0, 1, 1],
                &[],
                10_000,
            )
            .unwrap()
            .1
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn precondition_errors() {
        let p = balanced4();
        let sf = SamplingFunction::default_cos();
        let mut ks = Keystream::new(SecretKey::from_test_seed(0));
        assert!(matches!(
            encode(&p, &mut ks, &sf, 0.01, &[], &[], 10),
            Err(CodecError::EmptyMessage)
        ));
        assert!(matches!(
            encode(&p, &mut ks, &sf, 0.01, &[2], &[], 10),
            Err(CodecError::BadBit(2))
        ));
        assert!(matches!(
            encode(&p, &mut ks, &sf, 1.0, &[1], &[], 10),
            Err(CodecError::BadErrorBound(_))
        ));
        assert!(matches!(
            encode(&p, &mut ks, &sf, 0.01, &[1], &[], 0),
            Err(CodecError::ZeroMaxTokens)
        ));
    }

    #[test]
    fn degenerate_model_exhausts() {
        let p = FixedProvider::constant(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let sf = SamplingFunction::default_cos();
        let mut ks = Keystream::new(SecretKey::from_test_seed(0));
        match encode(&p, &mut ks, &sf, 0.01, &[1, 0], &[], 50) {
            Err(CodecError::EntropyExhausted {
                confirmed,
                tokens,
                trace,
                ..
            }) => {
                assert_eq!(tokens, 50);
                assert!(confirmed < 2);
                assert_eq!(trace.tokens.len(), 50);
                assert!(trace.tokens.iter().all(|&t| t == 0));
                assert_eq!(trace.r_values.len(), 100);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn single_bit_zero_round_trips() {
        let p = balanced4();
        let sf = SamplingFunction::default_cos();
        for seed in 0..20 {
            let rt = roundtrip_check(
                &p,
                &SecretKey::from_test_seed(seed),
                &sf,
                0.01,
                &[0],
                100_000,
            )
            .unwrap();
            assert_eq!(rt.decoded, "0", "seed {seed}");
        }
    }

    #[test]
    fn history_is_respected() {
        // First-order table that forbids repeating the previous token.
        let table = FixedTable::Transition {
            initial: vec![0.5, 0.5],
            rows: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        };
        let p = FixedProvider::new(table, 1.0).unwrap();
        let sf = SamplingFunction::default_cos();
        let mut ks = Keystream::new(SecretKey::from_test_seed(3));
        let err = encode(&p, &mut ks, &sf, 0.01, &[1], &[1], 40).unwrap_err();
        let CodecError::EntropyExhausted { trace, .. } = err else {
            panic!("only the first token carries entropy")
        };
        assert_eq!(trace.tokens[0], 0);
        assert!(trace.tokens.windows(2).all(|w| w[0] != w[1]));
    }
}
