//! Textual constraints and the task definitions built from them.
//!
//! Three views of the same constraint set are provided:
//! - [`word_valid`]: can a word appear anywhere at all;
//! - [`can_extend`] / [`filter_domain`]: can a partial sentence still be
//!   completed, used to prune domains and beams;
//! - [`check_complete`]: does a finished sentence satisfy every constraint.
//!
//! Counting conventions: characters are counted on the rendered sentence,
//! spaces and the terminal period included; the terminal period is not a word.
//! Lexical matches ignore case.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::LmParams;
use crate::model::{content_words, render_sentence, Domain, WordCandidate};
use crate::solver::OrderingStrategy;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintSpec {
    /// The rendered sentence has exactly `n` characters.
    CharCountExact { n: usize },
    /// Between `lo` and `hi` words; no upper bound when `hi` is absent.
    WordCountRange {
        lo: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hi: Option<usize>,
    },
    /// Every word has at most `max` characters.
    MaxWordLen { max: usize },
    /// The word at 1-based `position` is `word`.
    PositionLexical { position: usize, word: String },
    /// Every listed word occurs somewhere.
    MandatoryKeywords { words: BTreeSet<String> },
    /// At least `min_gap` words between any two occurrences of listed words.
    KeywordSeparation {
        words: BTreeSet<String>,
        min_gap: usize,
    },
    /// No word contains any of these characters.
    ForbiddenChars { chars: BTreeSet<char> },
    /// The sentence begins with these words.
    StartsWith { words: Vec<String> },
}

impl ConstraintSpec {
    pub fn forbidden_chars(chars: &str) -> Self {
        ConstraintSpec::ForbiddenChars {
            chars: chars.chars().collect(),
        }
    }

    pub fn keywords<S: AsRef<str>>(words: &[S]) -> Self {
        ConstraintSpec::MandatoryKeywords {
            words: words.iter().map(|w| w.as_ref().to_string()).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConstraint(m));
        match self {
            ConstraintSpec::CharCountExact { n } if *n == 0 => {
                fail("char_count_exact.n must be positive".into())
            }
            ConstraintSpec::WordCountRange { lo, hi: Some(hi) } if lo > hi => {
                fail(format!("word_count_range lo {lo} > hi {hi}"))
            }
            ConstraintSpec::MaxWordLen { max } if *max == 0 => {
                fail("max_word_len.max must be positive".into())
            }
            ConstraintSpec::PositionLexical { position, word }
                if *position == 0 || word.is_empty() =>
            {
                fail("position_lexical needs a 1-based position and a word".into())
            }
            ConstraintSpec::KeywordSeparation { min_gap, .. } if *min_gap == 0 => {
                fail("keyword_separation.min_gap must be at least 1".into())
            }
            ConstraintSpec::MandatoryKeywords { words }
            | ConstraintSpec::KeywordSeparation { words, .. }
                if words
                    .iter()
                    .any(|w| w.is_empty() || w.contains(char::is_whitespace)) =>
            {
                fail("keywords must be single words".into())
            }
            _ => Ok(()),
        }
    }
}

fn eq_ci(a: &str, b: &str) -> bool {
    a == b || a.to_lowercase() == b.to_lowercase()
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn rendered_len<S: AsRef<str>>(words: &[S]) -> usize {
    if words.is_empty() {
        0
    } else {
        words.iter().map(|w| char_len(w.as_ref())).sum::<usize>() + words.len() - 1
    }
}

fn is_keyword(word: &str, set: &BTreeSet<String>) -> bool {
    set.iter().any(|k| eq_ci(k, word))
}

/// True iff `word` on its own violates none of `constraints`. Only the
/// position-independent constraints (forbidden characters, word length)
/// can reject a word here.
pub fn word_valid(word: &str, constraints: &[ConstraintSpec]) -> bool {
    constraints.iter().all(|c| match c {
        ConstraintSpec::ForbiddenChars { chars } => !word.chars().any(|w| {
            chars
                .iter()
                .any(|f| w == *f || w.to_lowercase().eq(f.to_lowercase()))
        }),
        ConstraintSpec::MaxWordLen { max } => char_len(word) <= *max,
        _ => true,
    })
}

/// Whether `text` is a complete word: letters, with apostrophes or hyphens
/// allowed strictly inside.
pub fn is_whole_word(text: &str) -> bool {
    let chars: Vec<char> = text.chars().collect();
    let (Some(first), Some(last)) = (chars.first(), chars.last()) else {
        return false;
    };
    first.is_alphabetic()
        && last.is_alphabetic()
        && chars
            .iter()
            .all(|c| c.is_alphabetic() || matches!(c, '\'' | '-' | '’'))
}

/// Keeps only complete words, dropping sub-word fragments, symbols and the period.
pub fn h_only_words(candidates: Vec<WordCandidate>) -> Vec<WordCandidate> {
    candidates
        .into_iter()
        .filter(|c| is_whole_word(c.text()))
        .collect()
}

/// The first `k` candidates that are whole words and valid on their own.
pub fn valid_words(
    raw: Vec<WordCandidate>,
    constraints: &[ConstraintSpec],
    k: usize,
) -> Vec<WordCandidate> {
    h_only_words(raw)
        .into_iter()
        .filter(|c| word_valid(c.text(), constraints))
        .take(k)
        .collect()
}

/// A necessary condition for `partial` (content words, no period) to be a
/// prefix of, or equal to, a solution of `task`. Never rejects a feasible prefix.
pub fn can_extend<S: AsRef<str>>(partial: &[S], task: &TaskSpec) -> bool {
    let len = partial.len();
    let period = usize::from(task.require_period);
    let used = rendered_len(partial);
    let max_words = task.max_words();
    let char_limit = task.char_target();
    if max_words.is_some_and(|hi| len > hi) {
        return false;
    }
    if char_limit.is_some_and(|n| used + period > n) {
        return false;
    }
    task.constraints.iter().all(|c| match c {
        ConstraintSpec::CharCountExact { .. } | ConstraintSpec::WordCountRange { .. } => true,
        ConstraintSpec::MaxWordLen { .. } | ConstraintSpec::ForbiddenChars { .. } => partial
            .iter()
            .all(|w| word_valid(w.as_ref(), std::slice::from_ref(c))),
        ConstraintSpec::PositionLexical { position, word } => {
            len < *position || eq_ci(partial[position - 1].as_ref(), word)
        }
        ConstraintSpec::StartsWith { words } => {
            partial.iter().zip(words).all(|(p, w)| eq_ci(p.as_ref(), w))
        }
        ConstraintSpec::KeywordSeparation { words, min_gap } => {
            separation_holds(partial, words, *min_gap)
        }
        ConstraintSpec::MandatoryKeywords { words } => {
            let missing: Vec<&String> = words
                .iter()
                .filter(|k| !partial.iter().any(|w| eq_ci(w.as_ref(), k)))
                .collect();
            if missing.is_empty() {
                return true;
            }
            if max_words.is_some_and(|hi| len + missing.len() > hi) {
                return false;
            }
            match char_limit {
                Some(n) => {
                    let spaces = missing.len() - usize::from(len == 0);
                    let needed = missing.iter().map(|k| char_len(k)).sum::<usize>() + spaces;
                    used + needed + period <= n
                }
                None => true,
            }
        }
    })
}

fn separation_holds<S: AsRef<str>>(
    words: &[S],
    keywords: &BTreeSet<String>,
    min_gap: usize,
) -> bool {
    let positions: Vec<usize> = words
        .iter()
        .enumerate()
        .filter(|(_, w)| is_keyword(w.as_ref(), keywords))
        .map(|(i, _)| i)
        .collect();
    positions.windows(2).all(|p| p[1] - p[0] > min_gap)
}

/// Whether appending `word` to `partial` keeps the sentence completable.
pub fn admits<S: AsRef<str>>(partial: &[S], word: &str, task: &TaskSpec) -> bool {
    if !word_valid(word, &task.constraints) {
        return false;
    }
    let mut extended: Vec<&str> = partial.iter().map(AsRef::as_ref).collect();
    extended.push(word);
    can_extend(&extended, task)
}

/// Drops every value whose addition to `partial` could not lead to a
/// solution. Survivors keep their relative order.
pub fn filter_domain<S: AsRef<str>>(partial: &[S], domain: &Domain, task: &TaskSpec) -> Domain {
    Domain::new(
        domain
            .alive_values()
            .filter(|c| admits(partial, c.text(), task))
            .cloned(),
    )
}

/// True iff `words` (with the terminal "." when the task requires one)
/// satisfies every constraint of `task`.
pub fn check_complete<S: AsRef<str>>(words: &[S], task: &TaskSpec) -> bool {
    let has_period = words.last().is_some_and(|w| w.as_ref() == ".");
    if task.require_period && !has_period {
        return false;
    }
    let content = content_words(words);
    if content.is_empty() {
        return false;
    }
    let total_chars = rendered_len(content) + usize::from(has_period);
    task.constraints.iter().all(|c| match c {
        ConstraintSpec::CharCountExact { n } => total_chars == *n,
        ConstraintSpec::WordCountRange { lo, hi } => {
            content.len() >= *lo && hi.is_none_or(|hi| content.len() <= hi)
        }
        ConstraintSpec::MaxWordLen { .. } | ConstraintSpec::ForbiddenChars { .. } => content
            .iter()
            .all(|w| word_valid(w.as_ref(), std::slice::from_ref(c))),
        ConstraintSpec::PositionLexical { position, word } => content
            .get(position - 1)
            .is_some_and(|w| eq_ci(w.as_ref(), word)),
        ConstraintSpec::MandatoryKeywords { words } => words
            .iter()
            .all(|k| content.iter().any(|w| eq_ci(w.as_ref(), k))),
        ConstraintSpec::KeywordSeparation { words, min_gap } => {
            separation_holds(content, words, *min_gap)
        }
        ConstraintSpec::StartsWith { words } => {
            content.len() >= words.len()
                && content.iter().zip(words).all(|(c, w)| eq_ci(c.as_ref(), w))
        }
    })
}

/// A full problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub name: String,
    pub constraints: Vec<ConstraintSpec>,
    /// Words fixed at the start of every sentence.
    pub seed: Vec<String>,
    pub lm_params: LmParams,
    /// Solutions must end with a period the model predicts.
    pub require_period: bool,
    pub ordering: OrderingStrategy,
    pub backtrack_to: Option<usize>,
}

pub const BUILTIN_TASKS: [&str; 6] = ["sent-1", "sent-2", "sent-3", "sent-4", "sent-4*", "demo-60"];

impl TaskSpec {
    pub fn new(name: impl Into<String>, constraints: Vec<ConstraintSpec>) -> Self {
        Self {
            name: name.into(),
            constraints,
            seed: Vec::new(),
            lm_params: LmParams::default(),
            require_period: true,
            ordering: OrderingStrategy::Probability,
            backtrack_to: None,
        }
    }

    pub fn with_seed<S: AsRef<str>>(mut self, seed: &[S]) -> Self {
        self.seed = seed.iter().map(|s| s.as_ref().to_string()).collect();
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.lm_params.k = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.constraints {
            c.validate()?;
        }
        self.lm_params.validate()?;
        for w in &self.seed {
            if w.is_empty() || w.contains(char::is_whitespace) {
                return Err(Error::InvalidTask(format!(
                    "seed word {w:?} is not a single word"
                )));
            }
            if !word_valid(w, &self.constraints) {
                return Err(Error::InvalidTask(format!(
                    "seed word {w:?} violates a word constraint"
                )));
            }
        }
        if self.backtrack_to == Some(0) {
            return Err(Error::InvalidTask("backtrack_to must be at least 1".into()));
        }
        Ok(())
    }

    /// Tightest upper bound on the number of words.
    pub fn max_words(&self) -> Option<usize> {
        self.constraints
            .iter()
            .filter_map(|c| match c {
                ConstraintSpec::WordCountRange { hi, .. } => *hi,
                _ => None,
            })
            .min()
    }

    /// Largest lower bound on the number of words.
    pub fn min_words(&self) -> usize {
        self.constraints
            .iter()
            .filter_map(|c| match c {
                ConstraintSpec::WordCountRange { lo, .. } => Some(*lo),
                _ => None,
            })
            .max()
            .unwrap_or(1)
    }

    /// Smallest exact character target, if any.
    pub fn char_target(&self) -> Option<usize> {
        self.constraints
            .iter()
            .filter_map(|c| match c {
                ConstraintSpec::CharCountExact { n } => Some(*n),
                _ => None,
            })
            .min()
    }

    /// A builtin name, or else a path to a task file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if BUILTIN_TASKS.contains(&name_or_path) {
            return builtin_task(name_or_path);
        }
        let path = Path::new(name_or_path);
        if path.exists() {
            return Self::load(path);
        }
        builtin_task(name_or_path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let default_name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "task".into());
        Self::from_toml(&text, &default_name).map_err(|e| match e {
            Error::TaskFile { message, .. } => Error::TaskFile {
                path: path.to_path_buf(),
                message,
            },
            other => Error::TaskFile {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })
    }

    pub fn from_toml(text: &str, default_name: &str) -> Result<Self> {
        let file: TaskFile = toml::from_str(text).map_err(|e| Error::TaskFile {
            path: default_name.into(),
            message: e.to_string(),
        })?;
        let defaults = LmParams::default();
        let task = TaskSpec {
            name: file.name.unwrap_or_else(|| default_name.to_string()),
            constraints: file.constraints,
            seed: file.seed,
            lm_params: LmParams {
                k: file.k.unwrap_or(defaults.k),
                top_k: file.top_k.unwrap_or(defaults.top_k),
                top_p: file.top_p.unwrap_or(defaults.top_p),
                temperature: file.temperature.unwrap_or(defaults.temperature),
                oversample: file.oversample.unwrap_or(defaults.oversample),
            },
            require_period: file.require_period.unwrap_or(true),
            ordering: match file.ordering {
                Some(o) => o.parse()?,
                None => OrderingStrategy::Probability,
            },
            backtrack_to: file.backtrack_to,
        };
        task.validate()?;
        Ok(task)
    }

    pub fn to_toml(&self) -> String {
        let file = TaskFile {
            name: Some(self.name.clone()),
            constraints: self.constraints.clone(),
            seed: self.seed.clone(),
            k: Some(self.lm_params.k),
            top_k: Some(self.lm_params.top_k),
            top_p: Some(self.lm_params.top_p),
            temperature: Some(self.lm_params.temperature),
            oversample: Some(self.lm_params.oversample),
            require_period: Some(self.require_period),
            ordering: Some(self.ordering.to_string()),
            backtrack_to: self.backtrack_to,
        };
        toml::to_string(&file).expect("task serializes")
    }
}

/// On-disk task description. Every key but `constraints` is optional.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default)]
    seed: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    top_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    top_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    oversample: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    require_period: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ordering: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    backtrack_to: Option<usize>,
    #[serde(default)]
    constraints: Vec<ConstraintSpec>,
}

/// The benchmark sentence tasks and the 60-character modeling example.
pub fn builtin_task(name: &str) -> Result<TaskSpec> {
    let soft_beach_math = || -> BTreeSet<String> {
        ["soft", "beach", "math"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    };
    let lex = |position, word: &str| ConstraintSpec::PositionLexical {
        position,
        word: word.to_string(),
    };
    let constraints = match name {
        "sent-1" => vec![ConstraintSpec::CharCountExact { n: 82 }],
        "sent-2" => vec![
            ConstraintSpec::WordCountRange {
                lo: 10,
                hi: Some(10),
            },
            lex(3, "soft"),
            lex(7, "soft"),
            lex(10, "math"),
        ],
        "sent-3" => vec![
            ConstraintSpec::WordCountRange { lo: 20, hi: None },
            ConstraintSpec::MaxWordLen { max: 6 },
        ],
        "sent-4" => vec![ConstraintSpec::MandatoryKeywords {
            words: soft_beach_math(),
        }],
        "sent-4*" => vec![
            ConstraintSpec::MandatoryKeywords {
                words: soft_beach_math(),
            },
            ConstraintSpec::KeywordSeparation {
                words: soft_beach_math(),
                min_gap: 3,
            },
        ],
        "demo-60" => vec![
            ConstraintSpec::StartsWith {
                words: vec!["The".into()],
            },
            ConstraintSpec::WordCountRange {
                lo: 10,
                hi: Some(15),
            },
            ConstraintSpec::CharCountExact { n: 60 },
        ],
        _ => {
            return Err(Error::UnknownTask {
                name: name.to_string(),
                valid: BUILTIN_TASKS.join(", "),
            })
        }
    };
    let mut task = TaskSpec::new(name, constraints).with_seed(&["The"]);
    if name == "demo-60" {
        task.ordering = OrderingStrategy::CharTarget { pivot: 10 };
    }
    Ok(task)
}

/// Convenience for rendering `content + "."`.
pub fn render_with_period<S: AsRef<str>>(content: &[S]) -> Result<String> {
    let mut words: Vec<&str> = content.iter().map(AsRef::as_ref).collect();
    words.push(".");
    render_sentence(&words)
}
