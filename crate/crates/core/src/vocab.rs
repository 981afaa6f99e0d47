//! Reduction of a token distribution to a chain of two-way group choices.
//!
//! Token IDs are written as fixed-width big-endian binary strings of
//! `L = ⌈log₂|A|⌉` bits. The tokens sharing a binary prefix form a group, so
//! choosing a token is choosing `L` times between the `prefix‖0` and `prefix‖1`
//! groups. IDs in `[|A|, 2^L)` are phantom leaves with zero mass.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type TokenId = u32;

/// Largest supported token width.
pub const MAX_BIT_LEN: u32 = 31;

#[derive(Debug, Error, PartialEq)]
pub enum VocabError {
    #[error("alphabet must contain at least 2 tokens, got {0}")]
    TooSmall(usize),
    #[error("alphabet of {0} tokens exceeds the supported size")]
    TooLarge(usize),
    #[error("token id {id} out of range for an alphabet of {size}")]
    OutOfRange { id: u64, size: usize },
    #[error("bit string has length {got}, expected {expected}")]
    BadWidth { got: usize, expected: usize },
    #[error("invalid bit character {0:?}")]
    BadBit(char),
    #[error("distribution has {got} entries, alphabet has {expected}")]
    SizeMismatch { got: usize, expected: usize },
    #[error("distribution entry {index} is {value} (must be finite and non-negative)")]
    BadProbability { index: usize, value: f64 },
    #[error("distribution sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("prefix of length {got} is too long for {bit_len}-bit tokens")]
    PrefixTooLong { got: usize, bit_len: u32 },
}

/// Token alphabet: `|A|` and the token width `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
    bit_len: u32,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self, VocabError> {
        if size < 2 {
            return Err(VocabError::TooSmall(size));
        }
        let bit_len = usize::BITS - (size - 1).leading_zeros();
        if bit_len > MAX_BIT_LEN {
            return Err(VocabError::TooLarge(size));
        }
        Ok(Self { size, bit_len })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `L = ⌈log₂|A|⌉`.
    pub fn bit_len(&self) -> u32 {
        self.bit_len
    }

    /// Number of leaves of the complete tree, `2^L`.
    pub fn leaves(&self) -> usize {
        1usize << self.bit_len
    }

    pub fn check(&self, id: TokenId) -> Result<(), VocabError> {
        if (id as usize) < self.size {
            Ok(())
        } else {
            Err(VocabError::OutOfRange {
                id: u64::from(id),
                size: self.size,
            })
        }
    }

    /// `L`-bit big-endian binary form of a token id.
    pub fn token_to_bits(&self, id: TokenId) -> Result<Vec<u8>, VocabError> {
        self.check(id)?;
        Ok((0..self.bit_len)
            .rev()
            .map(|shift| ((id >> shift) & 1) as u8)
            .collect())
    }

    /// Inverse of [`Alphabet::token_to_bits`]; `Dec(·)` of the encoder.
    pub fn bits_to_token(&self, bits: &[u8]) -> Result<TokenId, VocabError> {
        if bits.len() != self.bit_len as usize {
            return Err(VocabError::BadWidth {
                got: bits.len(),
                expected: self.bit_len as usize,
            });
        }
        let mut value: u64 = 0;
        for &b in bits {
            if b > 1 {
                return Err(VocabError::BadBit(char::from(b'0' + b)));
            }
            value = (value << 1) | u64::from(b);
        }
        if value as usize >= self.size {
            return Err(VocabError::OutOfRange {
                id: value,
                size: self.size,
            });
        }
        Ok(value as TokenId)
    }

    /// Concatenated token bits of a token sequence.
    pub fn tokens_to_bits(&self, tokens: &[TokenId]) -> Result<Vec<u8>, VocabError> {
        let mut out = Vec::with_capacity(tokens.len() * self.bit_len as usize);
        for &t in tokens {
            out.extend(self.token_to_bits(t)?);
        }
        Ok(out)
    }
}

/// Parses a `'0'`/`'1'` string; ASCII whitespace is ignored.
pub fn parse_bits(text: &str) -> Result<Vec<u8>, VocabError> {
    text.chars()
        .filter(|c| !c.is_ascii_whitespace())
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(VocabError::BadBit(other)),
        })
        .collect()
}

pub fn format_bits(bits: &[u8]) -> String {
    bits.iter()
        .map(|&b| if b == 0 { '0' } else { '1' })
        .collect()
}

/// Probability vector over an alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

/// Tolerance on `Σp = 1` for an already normalized distribution.
pub const NORMALIZATION_TOL: f64 = 1e-6;

impl Distribution {
    /// Wraps a vector that is already normalized within [`NORMALIZATION_TOL`].
    pub fn new(probs: Vec<f64>) -> Result<Self, VocabError> {
        Self::check_entries(&probs)?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(VocabError::NotNormalized(sum));
        }
        Ok(Self { probs })
    }

    /// Divides non-negative weights by their sum.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, VocabError> {
        Self::check_entries(&weights)?;
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(VocabError::NotNormalized(sum));
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn uniform(size: usize) -> Self {
        Self {
            probs: vec![1.0 / size as f64; size],
        }
    }

    fn check_entries(probs: &[f64]) -> Result<(), VocabError> {
        for (index, &value) in probs.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(VocabError::BadProbability { index, value });
            }
        }
        Ok(())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `pᵢ ∝ pᵢ^(1/T)`, renormalized.
    pub fn with_temperature(&self, temperature: f64) -> Result<Self, VocabError> {
        if temperature == 1.0 {
            return Ok(self.clone());
        }
        let inv = 1.0 / temperature;
        // Work in log space relative to the largest entry so that tiny
        // probabilities at low temperature do not all underflow to zero.
        let max_ln = self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| p.ln())
            .fold(f64::NEG_INFINITY, f64::max);
        let weights = self
            .probs
            .iter()
            .map(|&p| {
                if p > 0.0 {
                    ((p.ln() - max_ln) * inv).exp()
                } else {
                    0.0
                }
            })
            .collect();
        Self::from_weights(weights)
    }

    /// Shannon entropy in bits, with `0·log 0 = 0`.
    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }
}

pub fn entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Probability masses of the two child groups of a prefix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupSplit {
    pub p0: f64,
    pub p1: f64,
}

impl GroupSplit {
    pub fn mass(&self) -> f64 {
        self.p0 + self.p1
    }

    /// Conditional probability of the `‖0` branch, or `None` for an empty group.
    pub fn p0_conditional(&self) -> Option<f64> {
        let m = self.mass();
        (m > 0.0).then(|| self.p0 / m)
    }
}

/// Group masses for every prefix of the complete tree over one distribution.
///
/// `levels[d][v]` is the mass of tokens whose first `d` bits equal `v`. Inner
/// masses are built bottom-up as `left + right`, so `p0 + p1` of a split is
/// bit-for-bit the stored mass of its parent.
#[derive(Debug, Clone)]
pub struct GroupTree {
    bit_len: u32,
    levels: Vec<Vec<f64>>,
}

impl GroupTree {
    pub fn new(alphabet: &Alphabet, dist: &Distribution) -> Result<Self, VocabError> {
        if dist.len() != alphabet.size() {
            return Err(VocabError::SizeMismatch {
                got: dist.len(),
                expected: alphabet.size(),
            });
        }
        let bit_len = alphabet.bit_len();
        let mut leaves = vec![0.0; alphabet.leaves()];
        leaves[..dist.len()].copy_from_slice(dist.probs());
        let mut levels = vec![leaves];
        for _ in 0..bit_len {
            let below = levels.last().expect("non-empty");
            let above: Vec<f64> = below.chunks_exact(2).map(|c| c[0] + c[1]).collect();
            levels.push(above);
        }
        levels.reverse();
        Ok(Self { bit_len, levels })
    }

    pub fn bit_len(&self) -> u32 {
        self.bit_len
    }

    /// Mass of the group identified by the first `depth` bits `prefix`.
    pub fn mass(&self, depth: u32, prefix: u64) -> f64 {
        self.levels[depth as usize][prefix as usize]
    }

    /// Split of the group whose `depth`-bit prefix has integer value `prefix`.
    pub fn split_at(&self, depth: u32, prefix: u64) -> GroupSplit {
        debug_assert!(depth < self.bit_len);
        let children = &self.levels[depth as usize + 1];
        let i = (prefix as usize) << 1;
        GroupSplit {
            p0: children[i],
            p1: children[i + 1],
        }
    }

    pub fn split(&self, prefix: &[u8]) -> Result<GroupSplit, VocabError> {
        if prefix.len() >= self.bit_len as usize {
            return Err(VocabError::PrefixTooLong {
                got: prefix.len(),
                bit_len: self.bit_len,
            });
        }
        let value = prefix
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b & 1));
        Ok(self.split_at(prefix.len() as u32, value))
    }
}

/// Split of the group named by `prefix` under `dist`.
pub fn split(
    alphabet: &Alphabet,
    dist: &Distribution,
    prefix: &[u8],
) -> Result<GroupSplit, VocabError> {
    GroupTree::new(alphabet, dist)?.split(prefix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_lengths() {
        assert_eq!(Alphabet::new(2).unwrap().bit_len(), 1);
        assert_eq!(Alphabet::new(4).unwrap().bit_len(), 2);
        assert_eq!(Alphabet::new(5).unwrap().bit_len(), 3);
        assert_eq!(Alphabet::new(16).unwrap().bit_len(), 4);
        assert_eq!(Alphabet::new(32000).unwrap().bit_len(), 15);
        assert_eq!(Alphabet::new(151_643).unwrap().bit_len(), 18);
        assert_eq!(Alphabet::new(1), Err(VocabError::TooSmall(1)));
    }

    #[test]
    fn hello_token_binary_form() {
        let a = Alphabet::new(32000).unwrap();
        let bits = a.token_to_bits(10543).unwrap();
        assert_eq!(format_bits(&bits), "010100100101111");
        assert_eq!(
            a.bits_to_token(&parse_bits("010100100101111").unwrap()),
            Ok(10543)
        );
    }

    #[test]
    fn small_alphabet_extremes() {
        let a = Alphabet::new(16).unwrap();
        assert_eq!(format_bits(&a.token_to_bits(0).unwrap()), "0000");
        assert_eq!(format_bits(&a.token_to_bits(15).unwrap()), "1111");
        assert_eq!(a.bits_to_token(&[0, 0, 0, 0]), Ok(0));
        assert!(matches!(
            a.token_to_bits(16),
            Err(VocabError::OutOfRange { .. })
        ));
    }

    #[test]
    fn phantom_token_rejected() {
        let a = Alphabet::new(32000).unwrap();
        let bits: Vec<u8> = (0..15).rev().map(|s| ((32500u32 >> s) & 1) as u8).collect();
        assert_eq!(
            a.bits_to_token(&bits),
            Err(VocabError::OutOfRange {
                id: 32500,
                size: 32000
            })
        );
        assert!(matches!(
            a.bits_to_token(&bits[1..]),
            Err(VocabError::BadWidth { .. })
        ));
    }

    #[test]
    fn parse_bits_rejects_junk() {
        assert_eq!(parse_bits("01 1\n0"), Ok(vec![0, 1, 1, 0]));
        assert_eq!(parse_bits("012"), Err(VocabError::BadBit('2')));
    }

    fn direct_sum(probs: &[f64], lo: usize, hi: usize) -> f64 {
        probs
            .iter()
            .enumerate()
            .filter(|(i, _)| *i >= lo && *i < hi)
            .map(|(_, p)| p)
            .sum()
    }

    #[test]
    fn split_examples() {
        let a = Alphabet::new(4).unwrap();
        let d = Distribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let root = split(&a, &d, &[]).unwrap();
        assert!((root.p0 - direct_sum(d.probs(), 0, 2)).abs() < 1e-15);
        assert!((root.p0 - 0.3).abs() < 1e-12 && (root.p1 - 0.7).abs() < 1e-12);
        let one = split(&a, &d, &[1]).unwrap();
        assert_eq!((one.p0, one.p1), (0.3, 0.4));
        assert!(matches!(
            split(&a, &d, &[1, 0]),
            Err(VocabError::PrefixTooLong { .. })
        ));
    }

    #[test]
    fn point_mass_splits() {
        let a = Alphabet::new(8).unwrap();
        let mut probs = vec![0.0; 8];
        probs[0] = 1.0;
        let d = Distribution::new(probs).unwrap();
        for depth in 0..3 {
            let s = split(&a, &d, &vec![0; depth]).unwrap();
            assert_eq!((s.p0, s.p1), (1.0, 0.0));
        }
    }

    #[test]
    fn phantom_leaves_have_zero_mass() {
        let a = Alphabet::new(5).unwrap();
        let d = Distribution::uniform(5);
        let s = split(&a, &d, &[1]).unwrap();
        assert!((s.p0 - 0.2).abs() < 1e-15);
        assert_eq!(s.p1, 0.0);
        assert_eq!(split(&a, &d, &[1, 0]).unwrap().p1, 0.0);
    }

    #[test]
    fn split_sums_to_parent_mass_exactly() {
        let a = Alphabet::new(7).unwrap();
        let d = Distribution::from_weights(vec![0.3, 0.11, 0.07, 0.2, 0.13, 0.17, 0.02]).unwrap();
        let tree = GroupTree::new(&a, &d).unwrap();
        for depth in 0..3u32 {
            for prefix in 0..(1u64 << depth) {
                let s = tree.split_at(depth, prefix);
                assert_eq!(s.p0 + s.p1, tree.mass(depth, prefix));
            }
        }
    }

    #[test]
    fn distribution_validation() {
        assert!(matches!(
            Distribution::new(vec![0.5, 0.6]),
            Err(VocabError::NotNormalized(_))
        ));
        assert!(matches!(
            Distribution::new(vec![1.5, -0.5]),
            Err(VocabError::BadProbability { index: 1, .. })
        ));
        assert!(matches!(
            Distribution::from_weights(vec![f64::NAN, 1.0]),
            Err(VocabError::BadProbability { index: 0, .. })
        ));
        assert!(Distribution::from_weights(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn temperature_identity_and_limit() {
        let d = Distribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(d.with_temperature(1.0).unwrap(), d);
        let hot = d.with_temperature(1e6).unwrap();
        // Oracle: direct power-and-renormalize.
        let w: Vec<f64> = d.probs().iter().map(|p| p.powf(1e-6)).collect();
        let s: f64 = w.iter().sum();
        for (p, q) in hot.probs().iter().zip(w.iter()) {
            assert!((p - q / s).abs() < 1e-12);
            assert!((p - 0.25).abs() < 1e-3);
        }
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[0.5, 0.5]), 1.0);
        assert_eq!(entropy(&[1.0, 0.0, 0.0]), 0.0);
        let direct = -(0.1f64 * 0.1f64.log2()
            + 0.2 * 0.2f64.log2()
            + 0.3 * 0.3f64.log2()
            + 0.4 * 0.4f64.log2());
        assert!((entropy(&[0.1, 0.2, 0.3, 0.4]) - direct).abs() < 1e-15);
        assert!((direct - 1.84644).abs() < 1e-5);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn token_bits_round_trip(size in 2usize..70_000, frac in 0.0f64..1.0) {
                let a = Alphabet::new(size).unwrap();
                let id = ((size as f64 * frac) as usize).min(size - 1) as TokenId;
                let bits = a.token_to_bits(id).unwrap();
                prop_assert_eq!(bits.len(), a.bit_len() as usize);
                prop_assert_eq!(a.bits_to_token(&bits).unwrap(), id);
            }

            #[test]
            fn leaf_masses_sum_to_one(weights in prop::collection::vec(0.0f64..1.0, 2..300)) {
                prop_assume!(weights.iter().sum::<f64>() > 1e-3);
                let a = Alphabet::new(weights.len()).unwrap();
                let d = Distribution::from_weights(weights).unwrap();
                let tree = GroupTree::new(&a, &d).unwrap();
                let leaves = (0..a.leaves() as u64).map(|v| tree.mass(a.bit_len(), v)).sum::<f64>();
                prop_assert!((leaves - 1.0).abs() < 1e-12);
            }

            #[test]
            fn temperature_does_not_lower_entropy(
                weights in prop::collection::vec(0.01f64..1.0, 2..20),
                t1 in 1.0f64..3.0,
                dt in 0.0f64..3.0,
            ) {
                let d = Distribution::from_weights(weights).unwrap();
                let h1 = d.with_temperature(t1).unwrap().entropy();
                let h2 = d.with_temperature(t1 + dt).unwrap().entropy();
                prop_assert!(h2 >= h1 - 1e-9);
            }
        }
    }
}
