use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{rank_candidates, truncate_ranked, LanguageModel, LmParams};
use crate::error::{Error, LmError, Result};
use crate::model::WordCandidate;

const BOS: &str = "<s>";

/// Splits text into word tokens. Runs of letters and digits (with internal
/// apostrophes or hyphens) form words; `.`, `!` and `?` become a "." token;
/// anything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let chars: Vec<char> = text.chars().collect();
    let flush = |current: &mut String, tokens: &mut Vec<String>| {
        if !current.is_empty() {
            tokens.push(std::mem::take(current));
        }
    };
    for (i, &c) in chars.iter().enumerate() {
        let joiner = matches!(c, '\'' | '-' | '’')
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if c.is_alphanumeric() || joiner {
            current.push(c);
        } else {
            flush(&mut current, &mut tokens);
            if matches!(c, '.' | '!' | '?') && tokens.last().is_some_and(|t| t != ".") {
                tokens.push(".".to_string());
            }
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

/// Word n-gram model with additive smoothing.
///
/// `order` is the number of preceding words conditioned on, so order 1 is a
/// bigram model. Context resets at the start of every line and after each
/// sentence-final ".".
type Counts = HashMap<Vec<String>, BTreeMap<String, u64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NGramLm {
    order: usize,
    smoothing: f64,
    vocab: BTreeSet<String>,
    #[serde(with = "context_map")]
    counts: Counts,
}

impl NGramLm {
    pub fn train(corpus: &str, order: usize, smoothing: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParams(
                "n-gram order must be at least 1".into(),
            ));
        }
        if !(smoothing >= 0.0 && smoothing.is_finite()) {
            return Err(Error::InvalidParams(
                "smoothing must be a finite non-negative number".into(),
            ));
        }
        let mut vocab = BTreeSet::new();
        let mut counts: HashMap<Vec<String>, BTreeMap<String, u64>> = HashMap::new();
        for line in corpus.lines() {
            let mut history = vec![BOS.to_string(); order];
            for token in tokenize(line) {
                *counts
                    .entry(history.clone())
                    .or_default()
                    .entry(token.clone())
                    .or_insert(0) += 1;
                vocab.insert(token.clone());
                if token == "." {
                    history = vec![BOS.to_string(); order];
                } else {
                    history.remove(0);
                    history.push(token);
                }
            }
        }
        if vocab.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(Self {
            order,
            smoothing,
            vocab,
            counts,
        })
    }

    pub fn train_file(path: impl AsRef<Path>, order: usize, smoothing: f64) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::train(&text, order, smoothing)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidParams(format!("{}: {e}", path.display())))
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self).expect("serializable");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    /// The conditioning history for the word following `sentence`.
    pub fn context_of(&self, sentence: &str) -> Vec<String> {
        let tokens = tokenize(sentence);
        let start = tokens.iter().rposition(|t| t == ".").map_or(0, |p| p + 1);
        let mut history = vec![BOS.to_string(); self.order];
        for t in &tokens[start..] {
            history.remove(0);
            history.push(t.clone());
        }
        history
    }

    /// `P(word | context)`; `None` when the context was never seen and no
    /// smoothing mass is available.
    pub fn probability(&self, context: &[String], word: &str) -> Option<f64> {
        let row = self.counts.get(context);
        let total: u64 = row.map_or(0, |r| r.values().sum());
        let denom = total as f64 + self.smoothing * self.vocab.len() as f64;
        if denom <= 0.0 || !self.vocab.contains(word) {
            return None;
        }
        let count = row.and_then(|r| r.get(word)).copied().unwrap_or(0);
        Some((count as f64 + self.smoothing) / denom)
    }

    /// Every vocabulary word with non-zero probability after `context`, in vocabulary order.
    pub fn distribution(&self, context: &[String]) -> Vec<(&str, f64)> {
        self.vocab
            .iter()
            .filter_map(|w| {
                self.probability(context, w)
                    .filter(|&p| p > 0.0)
                    .map(|p| (w.as_str(), p))
            })
            .collect()
    }
}

impl LanguageModel for NGramLm {
    fn call_llm(&self, sentence: &str, params: &LmParams) -> Result<Vec<WordCandidate>, LmError> {
        let context = self.context_of(sentence);
        let mut out: Vec<WordCandidate> = self
            .distribution(&context)
            .into_iter()
            .filter_map(|(w, p)| WordCandidate::from_prob(w, p).ok())
            .collect();
        rank_candidates(&mut out);
        Ok(truncate_ranked(out, params))
    }

    fn conditional_logprob(&self, sentence: &str, word: &str) -> Result<Option<f64>, LmError> {
        let context = self.context_of(sentence);
        Ok(self
            .probability(&context, word)
            .filter(|&p| p > 0.0)
            .map(f64::ln))
    }
}

mod context_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row {
        context: Vec<String>,
        counts: BTreeMap<String, u64>,
    }

    pub fn serialize<S: Serializer>(map: &Counts, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut rows: Vec<Row> = map
            .iter()
            .map(|(context, counts)| Row {
                context: context.clone(),
                counts: counts.clone(),
            })
            .collect();
        rows.sort_by(|a, b| a.context.cmp(&b.context));
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Counts, D::Error> {
        let rows = Vec::<Row>::deserialize(d)?;
        Ok(rows.into_iter().map(|r| (r.context, r.counts)).collect())
    }
}
