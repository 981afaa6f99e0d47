//! Next-token distribution sources.

mod bridge;
mod fixed;
mod markov;

use std::path::PathBuf;

use thiserror::Error;

use crate::vocab::{Alphabet, Distribution, TokenId, VocabError};

pub use bridge::{BridgeEndpoint, BridgeHello, BridgeProvider, BridgeReply, BridgeRequest};
pub use fixed::{FixedProvider, FixedTable};
pub use markov::MarkovProvider;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("provider configuration: {0}")]
    Config(String),
    #[error("bridge unreachable: {0}")]
    Unreachable(#[source] std::io::Error),
    #[error("bridge timed out")]
    Timeout,
    #[error("bridge protocol violation: {0}")]
    Protocol(String),
    #[error("bridge reported an error for request {id}: {message}")]
    Remote { id: i64, message: String },
    #[error(transparent)]
    Vocab(#[from] VocabError),
}

/// A generative model `M`: history in, next-token distribution out.
pub trait Provider: Send + Sync {
    fn alphabet(&self) -> Alphabet;

    fn temperature(&self) -> f64;

    /// Full, temperature-adjusted, normalized next-token distribution.
    fn next_distribution(&self, history: &[TokenId]) -> Result<Distribution, ProviderError>;

    fn describe(&self) -> String;
}

impl<P: Provider + ?Sized> Provider for Box<P> {
    fn alphabet(&self) -> Alphabet {
        (**self).alphabet()
    }
    fn temperature(&self) -> f64 {
        (**self).temperature()
    }
    fn next_distribution(&self, history: &[TokenId]) -> Result<Distribution, ProviderError> {
        (**self).next_distribution(history)
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

pub(crate) fn check_temperature(t: f64) -> Result<f64, ProviderError> {
    if t > 0.0 && t.is_finite() {
        Ok(t)
    } else {
        Err(ProviderError::Config(format!(
            "temperature must be positive, got {t}"
        )))
    }
}

pub(crate) fn check_history(alphabet: &Alphabet, history: &[TokenId]) -> Result<(), ProviderError> {
    history
        .iter()
        .try_for_each(|&t| alphabet.check(t))
        .map_err(ProviderError::from)
}

/// Parsed `--provider` value.
#[derive(Debug, Clone, PartialEq)]
pub enum ProviderKind {
    /// `fixed:<preset>` or `fixed:file=<path>`
    Fixed(FixedTable),
    /// `markov:<corpus path>[:<order>]`, byte-level tokens.
    Markov { corpus: PathBuf, order: usize },
    /// `bridge:tcp:<host>:<port>` or `bridge:exec:<command line>`
    Bridge(BridgeEndpoint),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub temperature: f64,
}

impl ProviderConfig {
    pub fn parse(spec: &str, temperature: f64) -> Result<Self, ProviderError> {
        check_temperature(temperature)?;
        let (kind, rest) = spec.split_once(':').ok_or_else(|| {
            ProviderError::Config(format!("provider spec `{spec}` lacks a `kind:` prefix"))
        })?;
        let kind = match kind {
            "fixed" => ProviderKind::Fixed(FixedTable::parse(rest)?),
            "markov" => {
                let (path, order) = match rest.rsplit_once(':') {
                    Some((p, o)) if o.chars().all(|c| c.is_ascii_digit()) && !o.is_empty() => {
                        let order = o.parse().map_err(|_| {
                            ProviderError::Config(format!("bad markov order `{o}`"))
                        })?;
                        (p, order)
                    }
                    _ => (rest, 1),
                };
                ProviderKind::Markov {
                    corpus: PathBuf::from(path),
                    order,
                }
            }
            "bridge" => ProviderKind::Bridge(BridgeEndpoint::parse(rest)?),
            other => {
                return Err(ProviderError::Config(format!(
                    "unknown provider kind `{other}`"
                )))
            }
        };
        Ok(Self { kind, temperature })
    }

    pub fn build(&self) -> Result<Box<dyn Provider>, ProviderError> {
        Ok(match &self.kind {
            ProviderKind::Fixed(table) => {
                Box::new(FixedProvider::new(table.clone(), self.temperature)?)
            }
            ProviderKind::Markov { corpus, order } => {
                let bytes = std::fs::read(corpus).map_err(|e| {
                    ProviderError::Config(format!("reading corpus {}: {e}", corpus.display()))
                })?;
                let tokens: Vec<TokenId> = bytes.into_iter().map(TokenId::from).collect();
                let alphabet = Alphabet::new(256)?;
                Box::new(MarkovProvider::train(
                    &tokens,
                    *order,
                    alphabet,
                    self.temperature,
                )?)
            }
            ProviderKind::Bridge(endpoint) => {
                Box::new(BridgeProvider::connect(endpoint, self.temperature)?)
            }
        })
    }
}
