use std::path::Path;

use serde::Deserialize;

use super::{check_history, check_temperature, Provider, ProviderError};
use crate::vocab::{Alphabet, Distribution, TokenId};

/// A hand-written model: one constant row, or a first-order transition table.
#[derive(Debug, Clone, PartialEq)]
pub enum FixedTable {
    Constant(Vec<f64>),
    /// Row `initial` for the empty history, `rows[t]` after token `t`.
    Transition {
        initial: Vec<f64>,
        rows: Vec<Vec<f64>>,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TableFile {
    Transition {
        initial: Vec<f64>,
        rows: Vec<Vec<f64>>,
    },
    Constant {
        probs: Vec<f64>,
    },
}

impl FixedTable {
    /// Uniform row over `size` tokens; every group split is `(½, ½)` when
    /// `size` is a power of two.
    pub fn balanced(size: usize) -> Self {
        Self::Constant(vec![1.0 / size as f64; size])
    }

    /// `[0.7, 0.1, 0.1, 0.1]`: root split `(0.8, 0.2)`, then `(0.875, 0.125)` or `(½, ½)`.
    pub fn skewed4() -> Self {
        Self::Constant(vec![0.7, 0.1, 0.1, 0.1])
    }

    /// `[0.1, 0.2, 0.3, 0.4]`.
    pub fn ramp4() -> Self {
        Self::Constant(vec![0.1, 0.2, 0.3, 0.4])
    }

    /// Preset name, or `file=<path>` pointing at `{"probs": [...]}` or
    /// `{"initial": [...], "rows": [[...], ...]}`.
    pub fn parse(spec: &str) -> Result<Self, ProviderError> {
        if let Some(path) = spec.strip_prefix("file=") {
            return Self::from_file(Path::new(path));
        }
        match spec {
            "skewed4" => Ok(Self::skewed4()),
            "ramp4" => Ok(Self::ramp4()),
            _ => {
                let n = spec
                    .strip_prefix("balanced")
                    .and_then(|n| n.parse::<usize>().ok())
                    .ok_or_else(|| {
                        ProviderError::Config(format!(
                            "unknown fixed table `{spec}` (try balancedN, skewed4, ramp4, file=PATH)"
                        ))
                    })?;
                Ok(Self::balanced(n))
            }
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProviderError::Config(format!("reading {}: {e}", path.display())))?;
        let parsed: TableFile = serde_json::from_str(&text)
            .map_err(|e| ProviderError::Config(format!("parsing {}: {e}", path.display())))?;
        Ok(match parsed {
            TableFile::Constant { probs } => Self::Constant(probs),
            TableFile::Transition { initial, rows } => Self::Transition { initial, rows },
        })
    }

    fn width(&self) -> usize {
        match self {
            Self::Constant(row) => row.len(),
            Self::Transition { initial, .. } => initial.len(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixedProvider {
    alphabet: Alphabet,
    temperature: f64,
    initial: Distribution,
    rows: Vec<Distribution>,
}

impl FixedProvider {
    pub fn new(table: FixedTable, temperature: f64) -> Result<Self, ProviderError> {
        let temperature = check_temperature(temperature)?;
        let alphabet = Alphabet::new(table.width())?;
        let to_dist = |row: Vec<f64>| -> Result<Distribution, ProviderError> {
            if row.len() != alphabet.size() {
                return Err(ProviderError::Config(format!(
                    "table row has {} entries, expected {}",
                    row.len(),
                    alphabet.size()
                )));
            }
            Ok(Distribution::from_weights(row)?.with_temperature(temperature)?)
        };
        let (initial, rows) = match table {
            FixedTable::Constant(row) => (to_dist(row)?, Vec::new()),
            FixedTable::Transition { initial, rows } => {
                if rows.len() != alphabet.size() {
                    return Err(ProviderError::Config(format!(
                        "transition table needs {} rows, got {}",
                        alphabet.size(),
                        rows.len()
                    )));
                }
                (
                    to_dist(initial)?,
                    rows.into_iter().map(to_dist).collect::<Result<_, _>>()?,
                )
            }
        };
        Ok(Self {
            alphabet,
            temperature,
            initial,
            rows,
        })
    }

    pub fn constant(probs: Vec<f64>) -> Result<Self, ProviderError> {
        Self::new(FixedTable::Constant(probs), 1.0)
    }
}

impl Provider for FixedProvider {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn temperature(&self) -> f64 {
        self.temperature
    }

    fn next_distribution(&self, history: &[TokenId]) -> Result<Distribution, ProviderError> {
        check_history(&self.alphabet, history)?;
        Ok(match (self.rows.is_empty(), history.last()) {
            (false, Some(&last)) => self.rows[last as usize].clone(),
            _ => self.initial.clone(),
        })
    }

    fn describe(&self) -> String {
        format!(
            "fixed(|A|={}, T={})",
            self.alphabet.size(),
            self.temperature
        )
    }
}
