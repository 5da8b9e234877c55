use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{rank_candidates, truncate_ranked, LanguageModel, LmParams};
use crate::error::{Error, LmError, Result};
use crate::model::WordCandidate;

/// Fixed next-word distributions keyed by the exact prefix sentence.
///
/// File format: one `prefix<TAB>word<TAB>prob` entry per line, the empty
/// prefix standing for the start of the sentence. Blank lines and lines
/// starting with `#` are ignored.
#[derive(Debug, Clone, Default)]
pub struct TableLm {
    entries: HashMap<String, Vec<WordCandidate>>,
}

const SUM_TOLERANCE: f64 = 1e-9;

impl TableLm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_probs<P, W>(entries: impl IntoIterator<Item = (P, W, f64)>) -> Result<Self>
    where
        P: Into<String>,
        W: Into<String>,
    {
        let mut lm = Self::new();
        for (i, (prefix, word, prob)) in entries.into_iter().enumerate() {
            lm.insert(prefix.into(), word.into(), prob)
                .map_err(|message| Error::TableFormat {
                    path: "<memory>".into(),
                    line: i + 1,
                    message,
                })?;
        }
        Ok(lm)
    }

    fn insert(
        &mut self,
        prefix: String,
        word: String,
        prob: f64,
    ) -> std::result::Result<(), String> {
        if !(prob > 0.0 && prob <= 1.0) {
            return Err(format!("probability {prob} outside (0, 1]"));
        }
        let candidate = WordCandidate::from_prob(word, prob).map_err(|e| e.to_string())?;
        let list = self.entries.entry(prefix.clone()).or_default();
        if list.iter().any(|c| c.text() == candidate.text()) {
            return Err(format!(
                "duplicate word {:?} after {prefix:?}",
                candidate.text()
            ));
        }
        let total: f64 = list.iter().map(WordCandidate::prob).sum::<f64>() + prob;
        if total > 1.0 + SUM_TOLERANCE {
            return Err(format!("probabilities after {prefix:?} sum to {total} > 1"));
        }
        list.push(candidate);
        rank_candidates(list);
        Ok(())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut lm = Self::new();
        for (i, line) in text.lines().enumerate() {
            let err = |message: String| Error::TableFormat {
                path: source.to_string(),
                line: i + 1,
                message,
            };
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [prefix, word, prob] = fields[..] else {
                return Err(err(format!(
                    "expected 3 tab-separated fields, got {}",
                    fields.len()
                )));
            };
            let prob: f64 = prob
                .trim()
                .parse()
                .map_err(|_| err(format!("bad probability {prob:?}")))?;
            lm.insert(prefix.to_string(), word.to_string(), prob)
                .map_err(err)?;
        }
        Ok(lm)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Serializes back to the tab-separated format, prefixes sorted.
    pub fn to_tsv(&self) -> String {
        let mut prefixes: Vec<&String> = self.entries.keys().collect();
        prefixes.sort();
        let mut out = String::new();
        for prefix in prefixes {
            for c in &self.entries[prefix] {
                let _ = writeln!(out, "{prefix}\t{}\t{}", c.text(), c.prob());
            }
        }
        out
    }

    /// The full ranked list at `prefix`.
    pub fn candidates(&self, prefix: &str) -> &[WordCandidate] {
        self.entries.get(prefix).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn num_prefixes(&self) -> usize {
        self.entries.len()
    }
}

impl LanguageModel for TableLm {
    fn call_llm(&self, sentence: &str, params: &LmParams) -> Result<Vec<WordCandidate>, LmError> {
        Ok(truncate_ranked(self.candidates(sentence).to_vec(), params))
    }

    fn conditional_logprob(&self, sentence: &str, word: &str) -> Result<Option<f64>, LmError> {
        Ok(self
            .candidates(sentence)
            .iter()
            .find(|c| c.text() == word)
            .map(WordCandidate::logprob))
    }
}
