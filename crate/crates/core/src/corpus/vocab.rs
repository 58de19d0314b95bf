use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::documents::{tokenize, Document};

pub const UNK: &str = "<unk>";
pub const DEFAULT_VOCAB_CAP: usize = 50_000;
pub const DEFAULT_MIN_FREQ: usize = 10;

/// Token index with a reserved unknown entry at index 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    tokens: Vec<String>,
}

impl From<VocabRepr> for Vocab {
    fn from(r: VocabRepr) -> Self {
        Vocab::from_tokens(r.tokens.into_iter().filter(|t| t != UNK))
    }
}

impl From<Vocab> for VocabRepr {
    fn from(v: Vocab) -> Self {
        VocabRepr { tokens: v.tokens }
    }
}

impl Vocab {
    /// Builds a vocabulary from tokens in rank order.
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Self {
        let mut all = vec![UNK.to_string()];
        all.extend(tokens);
        let index = all
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { tokens: all, index }
    }

    /// Index of `token`, or `None` for out-of-vocabulary tokens.
    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied().filter(|&i| i != 0)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.get(token).is_some()
    }

    /// Number of retained corpus tokens, the unknown entry excluded.
    pub fn num_tokens(&self) -> usize {
        self.tokens.len() - 1
    }

    /// Retained tokens in rank order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens[1..]
    }
}

/// Ranks tokens by descending frequency (ties lexicographic), keeps those
/// seen at least `min_freq` times, and caps the result at `max_size`.
pub fn build_vocab(docs: &[Document], max_size: usize, min_freq: usize) -> Vocab {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for doc in docs {
        for edu in doc.edus() {
            for tok in tokenize(edu) {
                *counts.entry(tok).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> =
        counts.into_iter().filter(|(_, c)| *c >= min_freq).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_size);
    Vocab::from_tokens(ranked.into_iter().map(|(t, _)| t))
}
