use std::collections::HashMap;

use super::{check_history, check_temperature, Provider, ProviderError};
use crate::vocab::{Alphabet, Distribution, TokenId};

/// Add-one smoothed n-gram model over token IDs.
///
/// Contexts are the last `order` tokens; positions near the start of the
/// corpus contribute shorter contexts, which a short history then matches.
#[derive(Debug, Clone)]
pub struct MarkovProvider {
    alphabet: Alphabet,
    order: usize,
    temperature: f64,
    counts: HashMap<Vec<TokenId>, Vec<u32>>,
}

impl MarkovProvider {
    pub fn train(
        corpus: &[TokenId],
        order: usize,
        alphabet: Alphabet,
        temperature: f64,
    ) -> Result<Self, ProviderError> {
        let temperature = check_temperature(temperature)?;
        if corpus.is_empty() {
            return Err(ProviderError::Config("empty corpus".into()));
        }
        if !(1..=3).contains(&order) {
            return Err(ProviderError::Config(format!(
                "markov order must be 1, 2 or 3, got {order}"
            )));
        }
        check_history(&alphabet, corpus)?;
        let mut counts: HashMap<Vec<TokenId>, Vec<u32>> = HashMap::new();
        for i in 0..corpus.len() {
            let ctx = corpus[i.saturating_sub(order)..i].to_vec();
            counts
                .entry(ctx)
                .or_insert_with(|| vec![0; alphabet.size()])[corpus[i] as usize] += 1;
        }
        Ok(Self {
            alphabet,
            order,
            temperature,
            counts,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Smoothed distribution before temperature.
    pub fn raw_distribution(&self, history: &[TokenId]) -> Distribution {
        let ctx = &history[history.len().saturating_sub(self.order)..];
        match self.counts.get(ctx) {
            Some(row) => {
                Distribution::from_weights(row.iter().map(|&c| f64::from(c) + 1.0).collect())
                    .expect("positive smoothed counts")
            }
            None => Distribution::uniform(self.alphabet.size()),
        }
    }
}

impl Provider for MarkovProvider {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn temperature(&self) -> f64 {
        self.temperature
    }

    fn next_distribution(&self, history: &[TokenId]) -> Result<Distribution, ProviderError> {
        check_history(&self.alphabet, history)?;
        Ok(self
            .raw_distribution(history)
            .with_temperature(self.temperature)?)
    }

    fn describe(&self) -> String {
        format!(
            "markov(order={}, |A|={}, contexts={}, T={})",
            self.order,
            self.alphabet.size(),
            self.counts.len(),
            self.temperature
        )
    }
}
