//! Client for a llama.cpp-style `/completion` endpoint.
//!
//! One POST asks for a single predicted token together with the probabilities
//! of the `n_probs` most likely tokens; those become the word candidates.
//! Responses are memoized per (prompt, parameters) for the lifetime of the
//! client so that repeated prefixes after backtracking see identical rankings
//! and cost no extra request.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use super::{rank_candidates, LanguageModel, LmParams};
use crate::error::{Error, LmError, Result};
use crate::model::WordCandidate;

pub const DEFAULT_TIMEOUT_SECS: u64 = 120;
pub const TIMEOUT_ENV: &str = "GENCP_LM_TIMEOUT_SECS";
pub const DEFAULT_RESPONSE_PATH: &str = "completion_probabilities[0].probs";

#[derive(Debug, Serialize)]
struct CompletionRequest<'a> {
    prompt: &'a str,
    n_predict: u32,
    n_probs: usize,
    temperature: f64,
    top_k: usize,
    top_p: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct MemoKey {
    prompt: String,
    n_probs: usize,
    top_k: usize,
    top_p: u64,
    temperature: u64,
}

impl MemoKey {
    fn new(prompt: &str, params: &LmParams) -> Self {
        Self {
            prompt: prompt.to_string(),
            n_probs: params.raw_count(),
            top_k: params.top_k,
            top_p: params.top_p.to_bits(),
            temperature: params.temperature.to_bits(),
        }
    }
}

pub struct RemoteLm {
    endpoint: String,
    agent: ureq::Agent,
    timeout: Duration,
    response_path: Vec<PathStep>,
    scoring: LmParams,
    memo: RwLock<HashMap<MemoKey, Vec<WordCandidate>>>,
    requests: AtomicU64,
}

impl std::fmt::Debug for RemoteLm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteLm")
            .field("endpoint", &self.endpoint)
            .field("timeout", &self.timeout)
            .finish_non_exhaustive()
    }
}

impl RemoteLm {
    /// A client for `endpoint`. A base URL without a path gets `/completion`
    /// appended. The timeout comes from `GENCP_LM_TIMEOUT_SECS` when set.
    pub fn new(endpoint: &str) -> Result<Self> {
        let timeout = match std::env::var(TIMEOUT_ENV) {
            Ok(v) => {
                let secs: f64 = v.trim().parse().map_err(|_| {
                    Error::InvalidParams(format!("{TIMEOUT_ENV}={v:?} is not a number"))
                })?;
                Duration::from_secs_f64(secs)
            }
            Err(_) => Duration::from_secs(DEFAULT_TIMEOUT_SECS),
        };
        Self::with_timeout(endpoint, timeout)
    }

    pub fn with_timeout(endpoint: &str, timeout: Duration) -> Result<Self> {
        let endpoint = normalize_endpoint(endpoint)?;
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        Ok(Self {
            endpoint,
            agent: ureq::Agent::new_with_config(config),
            timeout,
            response_path: parse_path(DEFAULT_RESPONSE_PATH)?,
            scoring: LmParams::default(),
            memo: RwLock::new(HashMap::new()),
            requests: AtomicU64::new(0),
        })
    }

    /// Where the `{token, prob}` array sits in the response, e.g.
    /// `completion_probabilities[0].probs`.
    pub fn with_response_path(mut self, path: &str) -> Result<Self> {
        self.response_path = parse_path(path)?;
        Ok(self)
    }

    /// Parameters used when scoring a sentence (perplexity).
    pub fn with_scoring_params(mut self, params: LmParams) -> Self {
        self.scoring = params;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    /// Number of HTTP requests issued so far.
    pub fn request_count(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    fn fetch(&self, prompt: &str, params: &LmParams) -> Result<Vec<WordCandidate>, LmError> {
        let body = CompletionRequest {
            prompt,
            n_predict: 1,
            n_probs: params.raw_count(),
            temperature: params.temperature,
            top_k: params.top_k,
            top_p: params.top_p,
        };
        self.requests.fetch_add(1, Ordering::Relaxed);
        let mut response = self
            .agent
            .post(&self.endpoint)
            .send_json(&body)
            .map_err(|e| LmError::Transport(e.to_string()))?;
        let status = response.status();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| LmError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(LmError::Transport(format!(
                "HTTP {status}: {}",
                truncate(&text, 200)
            )));
        }
        let json: Value =
            serde_json::from_str(&text).map_err(|e| LmError::Malformed(e.to_string()))?;
        let mut candidates = parse_token_probs(&json, &self.response_path, prompt.is_empty())?;
        rank_candidates(&mut candidates);
        candidates.truncate(params.raw_count());
        Ok(candidates)
    }
}

impl LanguageModel for RemoteLm {
    fn call_llm(&self, sentence: &str, params: &LmParams) -> Result<Vec<WordCandidate>, LmError> {
        let key = MemoKey::new(sentence, params);
        if let Some(hit) = self.memo.read().expect("memo lock").get(&key) {
            return Ok(hit.clone());
        }
        let fresh = self.fetch(sentence, params)?;
        let mut memo = self.memo.write().expect("memo lock");
        Ok(memo.entry(key).or_insert(fresh).clone())
    }

    fn conditional_logprob(&self, sentence: &str, word: &str) -> Result<Option<f64>, LmError> {
        let candidates = self.call_llm(sentence, &self.scoring)?;
        Ok(candidates
            .iter()
            .find(|c| c.text() == word)
            .map(WordCandidate::logprob))
    }
}

fn normalize_endpoint(endpoint: &str) -> Result<String> {
    let trimmed = endpoint.trim();
    let rest = trimmed
        .strip_prefix("http://")
        .or_else(|| trimmed.strip_prefix("https://"))
        .ok_or_else(|| Error::BackendSpec(format!("remote:{endpoint}")))?;
    if rest.is_empty() {
        return Err(Error::BackendSpec(format!("remote:{endpoint}")));
    }
    if rest.contains('/') && !rest.ends_with('/') {
        Ok(trimmed.to_string())
    } else {
        Ok(format!("{}/completion", trimmed.trim_end_matches('/')))
    }
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum PathStep {
    Key(String),
    Index(usize),
}

fn parse_path(path: &str) -> Result<Vec<PathStep>> {
    let bad = || Error::InvalidParams(format!("bad response path {path:?}"));
    let mut steps = Vec::new();
    for segment in path.split('.') {
        let (name, mut rest) = match segment.find('[') {
            Some(i) => (&segment[..i], &segment[i..]),
            None => (segment, ""),
        };
        if name.is_empty() && rest.is_empty() {
            return Err(bad());
        }
        if !name.is_empty() {
            steps.push(PathStep::Key(name.to_string()));
        }
        while let Some(inner) = rest.strip_prefix('[') {
            let close = inner.find(']').ok_or_else(bad)?;
            let index = inner[..close].parse().map_err(|_| bad())?;
            steps.push(PathStep::Index(index));
            rest = &inner[close + 1..];
        }
        if !rest.is_empty() {
            return Err(bad());
        }
    }
    Ok(steps)
}

/// Turns the `{token, prob}` array at `path` into candidates. Surrounding
/// whitespace is stripped; a token that does not start with whitespace
/// continues the previous word, so it is marked with a leading `##` unless it
/// is the first token of the text or punctuation.
fn parse_token_probs(
    json: &Value,
    path: &[PathStep],
    at_text_start: bool,
) -> Result<Vec<WordCandidate>, LmError> {
    let mut node = json;
    for step in path {
        node = match step {
            PathStep::Key(k) => node.get(k),
            PathStep::Index(i) => node.get(*i),
        }
        .ok_or_else(|| LmError::Malformed(format!("missing {step:?} in response")))?;
    }
    let items = node
        .as_array()
        .ok_or_else(|| LmError::Malformed("token probabilities are not an array".into()))?;
    let mut out: Vec<WordCandidate> = Vec::new();
    for item in items {
        let token = item
            .get("token")
            .or_else(|| item.get("tok_str"))
            .and_then(Value::as_str)
            .ok_or_else(|| LmError::Malformed(format!("entry without token: {item}")))?;
        let logprob = match (
            item.get("prob").and_then(Value::as_f64),
            item.get("logprob").and_then(Value::as_f64),
        ) {
            (Some(p), _) => p.ln(),
            (None, Some(lp)) => lp,
            (None, None) => {
                return Err(LmError::Malformed(format!("entry without prob: {item}")));
            }
        };
        let starts_word = at_text_start || token.starts_with(char::is_whitespace);
        let word = token.trim();
        if word.is_empty() || word.chars().any(char::is_whitespace) || !logprob.is_finite() {
            continue;
        }
        let text = if starts_word || !word.starts_with(char::is_alphanumeric) {
            word.to_string()
        } else {
            format!("##{word}")
        };
        let Ok(candidate) = WordCandidate::new(text, logprob) else {
            continue;
        };
        match out.iter_mut().find(|c| c.text() == candidate.text()) {
            Some(existing) if existing.logprob() < candidate.logprob() => *existing = candidate,
            Some(_) => {}
            None => out.push(candidate),
        }
    }
    Ok(out)
}
