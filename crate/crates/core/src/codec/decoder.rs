use std::fmt;

use serde::{Deserialize, Serialize};

use super::{check_bits, Accumulator, CodecError, DecisionBound};
use crate::keystream::{KeyError, Keystream};
use crate::sampler::SamplingFunction;

/// Where the decoder is allowed to confirm a bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alignment {
    /// After any token bit. Can fire one or more bits before the encoder's
    /// token-aligned confirmation and lose segment sync on multi-bit messages.
    EveryBit,
    /// Only after a multiple of the token width `L`, mirroring the encoder.
    TokenBoundary(u32),
}

impl Alignment {
    #[inline]
    fn permits(self, n_total: usize) -> bool {
        match self {
            Self::EveryBit => true,
            Self::TokenBoundary(l) => n_total.is_multiple_of(l as usize),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// No embedded bit.
    #[serde(rename = "H∅")]
    Null,
    #[serde(rename = "H₀")]
    Zero,
    #[serde(rename = "H₁")]
    One,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Null => "H∅",
            Self::Zero => "H₀",
            Self::One => "H₁",
        })
    }
}

/// Result of scanning one bit string.
///
/// `verdicts` holds one H₀/H₁ entry per confirmed segment, followed by a
/// single H∅ for the trailing segment when it is non-empty or when nothing
/// was confirmed at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeOutcome {
    pub bits: Vec<u8>,
    pub verdicts: Vec<Verdict>,
    /// Token-bit count at each confirmation.
    pub boundaries: Vec<usize>,
    /// Trailing token bits that crossed no bound.
    pub residual: usize,
    /// Accumulator sum after each token bit, before any reset at that bit.
    pub sum_s: Vec<f64>,
}

impl DecodeOutcome {
    /// H∅ when nothing was extracted, otherwise the first segment's verdict.
    pub fn verdict(&self) -> Verdict {
        self.verdicts.first().copied().unwrap_or(Verdict::Null)
    }

    /// Drops the last `k` extracted bits, the fallback for a loose bound.
    pub fn truncate_tail(&mut self, k: usize) {
        let keep = self.bits.len().saturating_sub(k);
        let dropped = self.bits.len() - keep;
        let had_null = self.verdicts.last() == Some(&Verdict::Null);
        self.bits.truncate(keep);
        self.boundaries.truncate(keep);
        self.verdicts.truncate(keep);
        if had_null || dropped > 0 || keep == 0 {
            self.verdicts.push(Verdict::Null);
        }
    }
}

/// Model-free extractor: needs only the key, the sampling function and pe.
#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    sf: &'a SamplingFunction,
    bound: DecisionBound,
    alignment: Alignment,
}

impl<'a> Decoder<'a> {
    pub fn new(
        sf: &'a SamplingFunction,
        pe: f64,
        alignment: Alignment,
    ) -> Result<Self, CodecError> {
        if let Alignment::TokenBoundary(0) = alignment {
            return Err(CodecError::ZeroWidth);
        }
        Ok(Self {
            sf,
            bound: DecisionBound::new(pe, sf)?,
            alignment,
        })
    }

    /// Scans `token_bits`, drawing one `r` per bit from `ks`.
    pub fn decode(&self, ks: &mut Keystream, token_bits: &[u8]) -> Result<DecodeOutcome, KeyError> {
        let mut out = DecodeOutcome {
            bits: Vec::new(),
            verdicts: Vec::new(),
            boundaries: Vec::new(),
            residual: 0,
            sum_s: Vec::with_capacity(token_bits.len()),
        };
        let mut acc = Accumulator::default();
        for (i, &bit) in token_bits.iter().enumerate() {
            let r = ks.draw_r()?;
            acc.push(self.sf.score(bit & 1, r));
            out.sum_s.push(acc.sum_s);
            if self.alignment.permits(i + 1) && self.bound.crossed(&acc) {
                let b = self.bound.decide(&acc);
                out.bits.push(b);
                out.verdicts
                    .push(if b == 0 { Verdict::Zero } else { Verdict::One });
                out.boundaries.push(i + 1);
                acc.reset();
            }
        }
        out.residual = acc.n as usize;
        if out.residual > 0 || out.bits.is_empty() {
            out.verdicts.push(Verdict::Null);
        }
        Ok(out)
    }
}

/// Decodes a `'0'/'1'` bit sequence with a fresh view of `ks`.
pub fn decode(
    ks: &mut Keystream,
    sf: &SamplingFunction,
    pe: f64,
    token_bits: &[u8],
    alignment: Alignment,
) -> Result<DecodeOutcome, CodecError> {
    check_bits(token_bits)?;
    Ok(Decoder::new(sf, pe, alignment)?.decode(ks, token_bits)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::encode;
    use crate::keystream::SecretKey;
    use crate::provider::{FixedProvider, FixedTable};
    use crate::vocab::format_bits;
    use proptest::prelude::*;

    #[test]
    fn endpoint_score() {
        let sf = SamplingFunction::default_cos();
        assert_eq!(sf.score(0, 0.0), 1.0);
    }

    #[test]
    fn empty_input_is_null() {
        let sf = SamplingFunction::default_cos();
        let mut ks = Keystream::new(SecretKey::from_test_seed(0));
        let out = decode(&mut ks, &sf, 0.01, &[], Alignment::EveryBit).unwrap();
        assert!(out.bits.is_empty());
        assert_eq!(out.verdicts, vec![Verdict::Null]);
        assert_eq!(out.verdict(), Verdict::Null);
    }

    #[test]
    fn all_zero_string_is_usually_null() {
        let sf = SamplingFunction::default_cos();
        let zeros = [0u8; 50];
        let null = (0..1000)
            .filter(|&seed| {
                let mut ks = Keystream::new(SecretKey::from_test_seed(seed));
                decode(&mut ks, &sf, 0.01, &zeros, Alignment::EveryBit)
                    .unwrap()
                    .bits
                    .is_empty()
            })
            .count();
        assert!(null >= 980, "{null}");
    }

    #[test]
    fn verdict_bookkeeping() {
        let p = FixedProvider::new(FixedTable::balanced(4), 1.0).unwrap();
        let sf = SamplingFunction::default_cos();
        let key = SecretKey::from_test_seed(5);
        let (_, t) = encode(
            &p,
            &mut Keystream::new(key.clone()),
            &sf,
            0.01,
            &[1, 0],
            &[],
            100_000,
        )
        .unwrap();
        let mut bits = t.token_bit_values();
        bits.extend_from_slice(&[0, 1, 1]);
        let out = decode(
            &mut Keystream::new(key),
            &sf,
            0.01,
            &bits,
            Alignment::TokenBoundary(2),
        )
        .unwrap();
        assert_eq!(format_bits(&out.bits), "10");
        assert_eq!(
            out.verdicts,
            vec![Verdict::One, Verdict::Zero, Verdict::Null]
        );
        assert_eq!(out.residual, 3);
        assert_eq!(out.boundaries, t.bit_boundaries);
    }

    #[test]
    fn truncate_tail_drops_last_bits() {
        let mut out = DecodeOutcome {
            bits: vec![1, 0, 1, 1],
            verdicts: vec![Verdict::One, Verdict::Zero, Verdict::One, Verdict::One],
            boundaries: vec![2, 4, 6, 8],
            residual: 0,
            sum_s: vec![],
        };
        out.truncate_tail(2);
        assert_eq!(out.bits, vec![1, 0]);
        assert_eq!(out.boundaries, vec![2, 4]);
        assert_eq!(
            out.verdicts,
            vec![Verdict::One, Verdict::Zero, Verdict::Null]
        );
        out.truncate_tail(10);
        assert!(out.bits.is_empty());
        assert_eq!(out.verdicts, vec![Verdict::Null]);
    }

    #[test]
    fn rejects_non_bits_and_zero_width() {
        let sf = SamplingFunction::default_cos();
        let mut ks = Keystream::new(SecretKey::from_test_seed(0));
        assert!(decode(&mut ks, &sf, 0.01, &[0, 3], Alignment::EveryBit).is_err());
        assert!(Decoder::new(&sf, 0.01, Alignment::TokenBoundary(0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// The decoder rebuilds the encoder's accumulator trajectory bit for bit.
        #[test]
        fn decoder_replays_encoder(seed in any::<u64>(), msg in proptest::collection::vec(0u8..2, 1..6)) {
            let p = FixedProvider::new(FixedTable::ramp4(), 1.0).unwrap();
            let sf = SamplingFunction::default_cos();
            let key = SecretKey::from_test_seed(seed);
            let (_, t) = encode(&p, &mut Keystream::new(key.clone()), &sf, 0.01, &msg, &[], 1_000_000).unwrap();
            let out = decode(&mut Keystream::new(key), &sf, 0.01, &t.token_bit_values(), Alignment::TokenBoundary(2)).unwrap();
            prop_assert_eq!(out.sum_s.len(), t.sum_s.len());
            for (a, b) in out.sum_s.iter().zip(&t.sum_s) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(&out.boundaries, &t.bit_boundaries);
        }
    }
}
