//! Next-word prediction and sequence scoring.
//!
//! Three backends share the [`LanguageModel`] interface: a lookup table keyed by
//! exact prefix (test fixtures), an additive-smoothed n-gram model trained from
//! plain text, and a client for a llama.cpp-style completion server.

mod ngram;
mod remote;
mod table;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use ngram::{tokenize, NGramLm};
pub use remote::{RemoteLm, DEFAULT_RESPONSE_PATH, DEFAULT_TIMEOUT_SECS, TIMEOUT_ENV};
pub use table::TableLm;

use crate::error::{Error, LmError, Result};
use crate::model::{render_sentence, WordCandidate};

/// Probability given to a word the model did not propose at its prefix.
pub const PROB_FLOOR: f64 = 1e-10;

/// Sampling parameters forwarded with every prediction request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmParams {
    /// Words kept per domain or beam.
    pub k: usize,
    pub top_k: usize,
    pub top_p: f64,
    pub temperature: f64,
    /// Raw candidates requested per kept word, so that `k` valid words
    /// survive word-level filtering.
    pub oversample: usize,
}

impl Default for LmParams {
    fn default() -> Self {
        Self {
            k: 10,
            top_k: 40,
            top_p: 1.0,
            temperature: 0.8,
            oversample: 4,
        }
    }
}

impl LmParams {
    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    /// Number of raw candidates fetched per call.
    pub fn raw_count(&self) -> usize {
        self.k.saturating_mul(self.oversample)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.k == 0 || self.top_k == 0 || self.oversample == 0 {
            return fail("k, top_k and oversample must be positive");
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return fail("top_p must be in (0, 1]");
        }
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return fail("temperature must be positive");
        }
        if self.k > self.top_k.saturating_mul(self.oversample) {
            return fail("k must not exceed top_k * oversample");
        }
        Ok(())
    }
}

/// A next-word predictor.
///
/// Implementations must be deterministic within a run: the search re-queries
/// the same prefixes after backtracking and relies on getting the same ranking.
pub trait LanguageModel: Send + Sync {
    /// At most `params.raw_count()` candidates for the word following
    /// `sentence`, by decreasing log probability with ties broken by text.
    /// Candidates are unfiltered: fragments and punctuation may appear.
    fn call_llm(&self, sentence: &str, params: &LmParams) -> Result<Vec<WordCandidate>, LmError>;

    /// `ln P(word | sentence)`, or `None` when the model does not propose
    /// `word` after `sentence`.
    fn conditional_logprob(&self, sentence: &str, word: &str) -> Result<Option<f64>, LmError>;
}

impl<T: LanguageModel + ?Sized> LanguageModel for &T {
    fn call_llm(&self, sentence: &str, params: &LmParams) -> Result<Vec<WordCandidate>, LmError> {
        (**self).call_llm(sentence, params)
    }
    fn conditional_logprob(&self, sentence: &str, word: &str) -> Result<Option<f64>, LmError> {
        (**self).conditional_logprob(sentence, word)
    }
}

impl<T: LanguageModel + ?Sized> LanguageModel for Box<T> {
    fn call_llm(&self, sentence: &str, params: &LmParams) -> Result<Vec<WordCandidate>, LmError> {
        (**self).call_llm(sentence, params)
    }
    fn conditional_logprob(&self, sentence: &str, word: &str) -> Result<Option<f64>, LmError> {
        (**self).conditional_logprob(sentence, word)
    }
}

impl<T: LanguageModel + ?Sized> LanguageModel for Arc<T> {
    fn call_llm(&self, sentence: &str, params: &LmParams) -> Result<Vec<WordCandidate>, LmError> {
        (**self).call_llm(sentence, params)
    }
    fn conditional_logprob(&self, sentence: &str, word: &str) -> Result<Option<f64>, LmError> {
        (**self).conditional_logprob(sentence, word)
    }
}

/// Sorts by decreasing log probability, ties by text.
pub fn rank_candidates(candidates: &mut [WordCandidate]) {
    candidates.sort_by(|a, b| {
        b.logprob()
            .total_cmp(&a.logprob())
            .then_with(|| a.text().cmp(b.text()))
    });
}

/// Nucleus then count truncation of an already ranked list.
pub(crate) fn truncate_ranked(
    mut ranked: Vec<WordCandidate>,
    params: &LmParams,
) -> Vec<WordCandidate> {
    if params.top_p < 1.0 {
        let mut mass = 0.0;
        let mut keep = ranked.len();
        for (i, c) in ranked.iter().enumerate() {
            mass += c.prob();
            if mass >= params.top_p {
                keep = i + 1;
                break;
            }
        }
        ranked.truncate(keep);
    }
    ranked.truncate(params.raw_count());
    ranked
}

/// Sum of `ln P(w_i | w_1 .. w_{i-1})`, using [`PROB_FLOOR`] for words the
/// model does not propose.
pub fn sequence_log_prob<L, S>(lm: &L, words: &[S]) -> Result<f64>
where
    L: LanguageModel + ?Sized,
    S: AsRef<str>,
{
    if words.is_empty() {
        return Err(Error::EmptySentence);
    }
    let mut total = 0.0;
    for i in 0..words.len() {
        let prefix = if i == 0 {
            String::new()
        } else {
            render_sentence(&words[..i])?
        };
        let lp = lm
            .conditional_logprob(&prefix, words[i].as_ref())?
            .unwrap_or(PROB_FLOOR.ln());
        total += lp;
    }
    Ok(total)
}

/// `exp(-sequence_log_prob / n)`: the geometric mean of inverse conditional
/// likelihoods.
pub fn perplexity<L, S>(lm: &L, words: &[S]) -> Result<f64>
where
    L: LanguageModel + ?Sized,
    S: AsRef<str>,
{
    let lp = sequence_log_prob(lm, words)?;
    Ok((-lp / words.len() as f64).exp())
}

/// True iff "." is among the first `params.k` raw candidates after `sentence`.
pub fn predicts_period<L>(lm: &L, sentence: &str, params: &LmParams) -> Result<bool, LmError>
where
    L: LanguageModel + ?Sized,
{
    let raw = lm.call_llm(sentence, params)?;
    Ok(raw.iter().take(params.k).any(|c| c.text() == "."))
}
