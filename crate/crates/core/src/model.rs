//! The evolving CSP: sentence-position variables whose domains are filled by a
//! language model, the constraints attached to them, and a chronological trail
//! that makes every mutation undoable.
//!
//! Domains never physically lose values. Filtering and refuted choices mark a
//! value dead, and each mark is recorded in an undo log, so restoring a saved
//! state is a matter of replaying the log backwards to the saved mark.

use std::fmt;

use crate::constraints::ConstraintSpec;
use crate::error::{Error, Result};

/// A predicted word together with the natural-log probability the model gave it.
#[derive(Debug, Clone, PartialEq)]
pub struct WordCandidate {
    text: String,
    logprob: f64,
}

impl WordCandidate {
    /// Fails when `text` is empty or contains whitespace. Positive log
    /// probabilities are clamped to zero.
    pub fn new(text: impl Into<String>, logprob: f64) -> Result<Self> {
        let text = text.into();
        if text.is_empty() || text.chars().any(char::is_whitespace) {
            return Err(Error::InvalidWord(text));
        }
        Ok(Self {
            text,
            logprob: logprob.min(0.0),
        })
    }

    pub fn from_prob(text: impl Into<String>, prob: f64) -> Result<Self> {
        Self::new(text, prob.ln())
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn logprob(&self) -> f64 {
        self.logprob
    }

    pub fn prob(&self) -> f64 {
        self.logprob.exp()
    }
}

impl fmt::Display for WordCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{:.4}", self.text, self.prob())
    }
}

/// The candidate words of one variable, in trial order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Domain {
    values: Vec<WordCandidate>,
    alive: Vec<bool>,
    cursor: Option<usize>,
}

impl Domain {
    /// Builds a domain, dropping later duplicates of an already present text.
    pub fn new(values: impl IntoIterator<Item = WordCandidate>) -> Self {
        let mut kept: Vec<WordCandidate> = Vec::new();
        for value in values {
            if !kept.iter().any(|v| v.text == value.text) {
                kept.push(value);
            }
        }
        let alive = vec![true; kept.len()];
        Self {
            values: kept,
            alive,
            cursor: None,
        }
    }

    pub fn singleton(word: WordCandidate) -> Self {
        let mut d = Self::new([word]);
        d.cursor = Some(0);
        d
    }

    pub fn values(&self) -> &[WordCandidate] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_alive(&self, index: usize) -> bool {
        self.alive.get(index).copied().unwrap_or(false)
    }

    /// Values not yet filtered out or refuted, in order.
    pub fn alive_values(&self) -> impl Iterator<Item = &WordCandidate> + '_ {
        self.values
            .iter()
            .zip(&self.alive)
            .filter_map(|(v, &a)| a.then_some(v))
    }

    pub fn alive_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    /// True when no value remains to be tried.
    pub fn is_exhausted(&self) -> bool {
        self.alive_count() == 0
    }

    pub fn cursor(&self) -> Option<usize> {
        self.cursor
    }

    pub fn assigned(&self) -> Option<&WordCandidate> {
        self.cursor.map(|c| &self.values[c])
    }

    fn first_alive_from(&self, start: usize) -> Option<usize> {
        (start..self.values.len()).find(|&i| self.alive[i])
    }

    /// A new domain holding the alive values in the order given by `cmp`,
    /// with dead values dropped and no cursor.
    pub fn sorted_by<F>(&self, mut cmp: F) -> Domain
    where
        F: FnMut(&WordCandidate, &WordCandidate) -> std::cmp::Ordering,
    {
        let mut values: Vec<WordCandidate> = self.alive_values().cloned().collect();
        values.sort_by(|a, b| cmp(a, b));
        Domain::new(values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    /// 1-based position in the sentence.
    pub index: usize,
    pub domain: Domain,
}

/// A task constraint instantiated for one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveConstraint {
    /// 0-based position of the variable the constraint was generated for.
    pub variable: usize,
    pub spec: ConstraintSpec,
}

/// What a restore needs to bring the model back: the undo-log mark plus the
/// sizes and cursors at save time (kept for verification).
#[derive(Debug, Clone, PartialEq)]
pub struct SavedState {
    pub num_variables: usize,
    pub cursors: Vec<Option<usize>>,
    pub num_constraints: usize,
    undo_mark: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    /// Backtracks that landed on a fresh value.
    pub backtracks: u64,
    pub lm_calls: u64,
}

#[derive(Debug, Clone)]
enum Undo {
    PushVariable,
    Domain {
        var: usize,
        previous: Domain,
    },
    Revive {
        var: usize,
        index: usize,
    },
    Cursor {
        var: usize,
        previous: Option<usize>,
    },
    PushConstraint,
    Truncate {
        variables: Vec<Variable>,
        constraints: Vec<ActiveConstraint>,
    },
}

/// Variables, their domains, the active constraints and the trail of saved
/// states of one search.
#[derive(Debug, Clone, Default)]
pub struct SolverModel {
    variables: Vec<Variable>,
    constraints: Vec<ActiveConstraint>,
    trail: Vec<SavedState>,
    undo: Vec<Undo>,
    stats: SolverStats,
}

impl SolverModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// A model whose first variables are fixed to `seed`, one singleton domain each.
    pub fn with_seed<S: AsRef<str>>(seed: &[S]) -> Result<Self> {
        let mut model = Self::new();
        for word in seed {
            let var =
                model.push_variable(Domain::singleton(WordCandidate::new(word.as_ref(), 0.0)?));
            debug_assert_eq!(model.variables[var].domain.cursor, Some(0));
        }
        Ok(model)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[ActiveConstraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn trail_depth(&self) -> usize {
        self.trail.len()
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    pub fn record_lm_call(&mut self) {
        self.stats.lm_calls += 1;
    }

    pub fn last(&self) -> Option<&Variable> {
        self.variables.last()
    }

    /// Appends a variable and returns its 0-based position.
    pub fn push_variable(&mut self, domain: Domain) -> usize {
        let index = self.variables.len() + 1;
        self.variables.push(Variable { index, domain });
        self.undo.push(Undo::PushVariable);
        index - 1
    }

    pub fn set_domain(&mut self, var: usize, domain: Domain) {
        let previous = std::mem::replace(&mut self.variables[var].domain, domain);
        self.undo.push(Undo::Domain { var, previous });
    }

    /// Marks a value dead. No-op when it already is.
    pub fn remove_value(&mut self, var: usize, index: usize) {
        let domain = &mut self.variables[var].domain;
        if domain.alive[index] {
            domain.alive[index] = false;
            self.undo.push(Undo::Revive { var, index });
        }
    }

    pub fn set_cursor(&mut self, var: usize, cursor: Option<usize>) {
        let domain = &mut self.variables[var].domain;
        if let Some(c) = cursor {
            assert!(c < domain.values.len(), "cursor out of range");
        }
        let previous = std::mem::replace(&mut domain.cursor, cursor);
        self.undo.push(Undo::Cursor { var, previous });
    }

    pub fn push_constraint(&mut self, constraint: ActiveConstraint) {
        self.constraints.push(constraint);
        self.undo.push(Undo::PushConstraint);
    }

    /// Deletes variables after the first `n` and every constraint attached to them.
    pub fn truncate(&mut self, n: usize) {
        if n >= self.variables.len() {
            return;
        }
        let variables = self.variables.split_off(n);
        let constraints = self.constraints.clone();
        self.constraints.retain(|c| c.variable < n);
        self.undo.push(Undo::Truncate {
            variables,
            constraints,
        });
    }

    /// Words of the assigned variables, in sentence order.
    pub fn current_words(&self) -> Vec<&str> {
        self.variables
            .iter()
            .filter_map(|v| v.domain.assigned().map(WordCandidate::text))
            .collect()
    }

    /// The sentence formed by the assigned variables; empty for an empty model.
    pub fn current_sentence(&self) -> String {
        let words = self.current_words();
        if words.is_empty() {
            String::new()
        } else {
            render_sentence(&words).expect("non-empty")
        }
    }

    /// True iff some variable has no value left to try.
    pub fn contains_empty_variable(&self) -> bool {
        self.variables.iter().any(|v| v.domain.is_exhausted())
    }

    pub fn save_state(&mut self) -> SavedState {
        let state = SavedState {
            num_variables: self.variables.len(),
            cursors: self.variables.iter().map(|v| v.domain.cursor).collect(),
            num_constraints: self.constraints.len(),
            undo_mark: self.undo.len(),
        };
        self.trail.push(state.clone());
        state
    }

    /// Pops the most recent saved state and rolls the model back to it.
    pub fn restore(&mut self) -> Result<SavedState> {
        let state = self.trail.pop().ok_or(Error::NoSavedState)?;
        self.rollback(&state);
        Ok(state)
    }

    fn rollback(&mut self, state: &SavedState) {
        while self.undo.len() > state.undo_mark {
            match self.undo.pop().expect("non-empty") {
                Undo::PushVariable => {
                    self.variables.pop();
                }
                Undo::Domain { var, previous } => self.variables[var].domain = previous,
                Undo::Revive { var, index } => self.variables[var].domain.alive[index] = true,
                Undo::Cursor { var, previous } => self.variables[var].domain.cursor = previous,
                Undo::PushConstraint => {
                    self.constraints.pop();
                }
                Undo::Truncate {
                    variables,
                    constraints,
                } => {
                    self.variables.extend(variables);
                    self.constraints = constraints;
                }
            }
        }
        debug_assert_eq!(self.variables.len(), state.num_variables);
        debug_assert_eq!(self.constraints.len(), state.num_constraints);
        debug_assert!(self
            .variables
            .iter()
            .zip(&state.cursors)
            .all(|(v, c)| v.domain.cursor == *c));
    }

    /// Returns to the most recent saved state and moves the variable chosen
    /// there to its next untried value, unwinding further levels while a
    /// level has nothing left. False once the trail is exhausted.
    pub fn backtrack(&mut self) -> bool {
        let found = self.backtrack_inner();
        if found {
            self.stats.backtracks += 1;
        }
        found
    }

    fn backtrack_inner(&mut self) -> bool {
        while let Some(state) = self.trail.pop() {
            let Some(var) = state.num_variables.checked_sub(1) else {
                self.rollback(&state);
                continue;
            };
            let chosen = self.variables.get(var).and_then(|v| v.domain.cursor);
            self.rollback(&state);
            // A level whose choice never got made has nothing left to refute.
            let Some(chosen) = chosen else { continue };
            self.remove_value(var, chosen);
            if let Some(next) = self.variables[var].domain.first_alive_from(0) {
                self.set_cursor(var, Some(next));
                return true;
            }
        }
        false
    }

    /// Deletes `x_{n+1} .. x_m` with their constraints, then backtracks at `x_n`
    /// (or further up when `x_n` has no untried value left).
    pub fn backtrack_to(&mut self, n: usize) -> Result<bool> {
        let len = self.variables.len();
        if n == 0 || n >= len {
            return Err(Error::NothingToDelete { n, len });
        }
        let mut shallowest_deleted = None;
        while self.trail.last().is_some_and(|s| s.num_variables > n) {
            shallowest_deleted = self.trail.pop();
        }
        if let Some(state) = shallowest_deleted {
            self.rollback(&state);
        }
        self.truncate(n);
        let found = self.backtrack_inner();
        if found {
            self.stats.backtracks += 1;
        }
        Ok(found)
    }

    /// Keeps the current value if still alive, otherwise moves to the next
    /// alive one. False when none is left.
    pub fn assign_next_alive(&mut self, var: usize) -> bool {
        let domain = &self.variables[var].domain;
        let next = domain.first_alive_from(domain.cursor.unwrap_or(0));
        match next {
            Some(i) => {
                if domain.cursor != Some(i) {
                    self.set_cursor(var, Some(i));
                }
                true
            }
            None => false,
        }
    }
}

/// One accepted sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRecord {
    pub words: Vec<String>,
    pub sentence: String,
    pub ppl: f64,
    /// Seconds since the search started.
    pub discovered_at: f64,
}

impl SolutionRecord {
    pub fn new(words: Vec<String>, ppl: f64, discovered_at: f64) -> Result<Self> {
        let sentence = render_sentence(&words)?;
        Ok(Self {
            words,
            sentence,
            ppl,
            discovered_at,
        })
    }

    /// Words without the terminal period.
    pub fn content_words(&self) -> &[String] {
        content_words(&self.words)
    }
}

pub(crate) fn content_words<S: AsRef<str>>(words: &[S]) -> &[S] {
    match words.split_last() {
        Some((last, rest)) if last.as_ref() == "." => rest,
        _ => words,
    }
}

/// Joins words with single spaces; a final "." attaches to the previous word.
pub fn render_sentence<S: AsRef<str>>(words: &[S]) -> Result<String> {
    if words.is_empty() {
        return Err(Error::EmptySentence);
    }
    let mut out = String::new();
    for (i, w) in words.iter().enumerate() {
        let w = w.as_ref();
        let is_final_period = i + 1 == words.len() && w == "." && i > 0;
        if i > 0 && !is_final_period {
            out.push(' ');
        }
        out.push_str(w);
    }
    Ok(out)
}

/// Number of positions at which two word sequences differ. Positions past the
/// end of the shorter sequence count as differences.
pub fn variability<A: AsRef<str>, B: AsRef<str>>(a: &[A], b: &[B]) -> usize {
    let common = a.len().min(b.len());
    let differing = a
        .iter()
        .zip(b)
        .filter(|(x, y)| x.as_ref() != y.as_ref())
        .count();
    differing + a.len().max(b.len()) - common
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cands(words: &[&str]) -> Vec<WordCandidate> {
        words
            .iter()
            .map(|w| WordCandidate::new(*w, -1.0).unwrap())
            .collect()
    }

    fn words(s: &str) -> Vec<&str> {
        s.split(' ').collect()
    }

    #[test]
    fn word_candidate_rejects_blank_and_spaced_text() {
        assert!(WordCandidate::new("", -1.0).is_err());
        assert!(WordCandidate::new("a b", -1.0).is_err());
        assert!(WordCandidate::new("tab\t", -1.0).is_err());
        assert_eq!(WordCandidate::new("ok", 0.3).unwrap().logprob(), 0.0);
    }

    #[test]
    fn domain_drops_duplicate_texts() {
        let d = Domain::new(cands(&["a", "b", "a"]));
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn render_examples() {
        assert_eq!(
            render_sentence(&["The", "little", "boy", "is"]).unwrap(),
            "The little boy is"
        );
        assert_eq!(render_sentence(&["A"]).unwrap(), "A");
        let s = words("The new year is here and we are ready to make the next step .");
        assert_eq!(
            render_sentence(&s).unwrap(),
            "The new year is here and we are ready to make the next step."
        );
        assert!(matches!(
            render_sentence::<&str>(&[]),
            Err(Error::EmptySentence)
        ));
    }

    #[test]
    fn current_sentence_of_models() {
        assert_eq!(SolverModel::new().current_sentence(), "");
        let m = SolverModel::with_seed(&["A", "man"]).unwrap();
        assert_eq!(m.current_sentence(), "A man");
        let m = SolverModel::with_seed(&["The"]).unwrap();
        assert_eq!(m.current_sentence(), "The");
    }

    #[test]
    fn current_sentence_skips_unassigned_last_variable() {
        let mut m = SolverModel::with_seed(&["A"]).unwrap();
        m.push_variable(Domain::new(cands(&["man", "boy"])));
        assert_eq!(m.current_sentence(), "A");
    }

    #[test]
    fn save_mutate_restore_round_trip() {
        let mut m = SolverModel::with_seed(&["A", "man"]).unwrap();
        let before_vars = m.variables().to_vec();
        m.save_state();
        let v = m.push_variable(Domain::default());
        m.set_domain(v, Domain::new(cands(&["drinks", "and", "helps"])));
        m.remove_value(v, 2);
        m.set_cursor(v, Some(0));
        m.push_constraint(ActiveConstraint {
            variable: v,
            spec: ConstraintSpec::forbidden_chars("e"),
        });
        m.restore().unwrap();
        assert_eq!(m.variables(), &before_vars[..]);
        assert!(m.constraints().is_empty());
    }

    #[test]
    fn restore_follows_stack_discipline() {
        let mut m = SolverModel::with_seed(&["The", "cat"]).unwrap();
        m.save_state();
        let depth2 = m.variables().to_vec();
        m.push_variable(Domain::new(cands(&["sat"])));
        m.set_cursor(2, Some(0));
        m.save_state();
        m.push_variable(Domain::new(cands(&["down"])));
        m.restore().unwrap();
        m.restore().unwrap();
        assert_eq!(m.variables(), &depth2[..]);
        assert!(matches!(m.restore(), Err(Error::NoSavedState)));
    }

    #[test]
    fn backtrack_reassigns_previous_variable() {
        // x2 = boy leads to an empty x3; backtracking lands on man.
        let mut m = SolverModel::with_seed(&["A"]).unwrap();
        m.save_state();
        let x2 = m.push_variable(Domain::new(cands(&["boy", "man"])));
        m.save_state();
        assert!(m.assign_next_alive(x2));
        assert_eq!(m.current_sentence(), "A boy");
        let x3 = m.push_variable(Domain::default());
        assert!(m.contains_empty_variable());
        let _ = x3;
        assert!(m.backtrack());
        assert_eq!(m.current_sentence(), "A man");
        assert_eq!(m.len(), 2);
        assert_eq!(m.stats().backtracks, 1);
    }

    #[test]
    fn backtrack_with_empty_trail_is_false() {
        let mut m = SolverModel::new();
        assert!(!m.backtrack());
        assert_eq!(m.stats().backtracks, 0);
    }

    #[test]
    fn exhausted_level_unwinds_further() {
        // Two-level table: x1 in {a, b}, x2 in {c, d, e}. Exhaust x2 under a
        // and the next backtrack must move x1 to b.
        let mut m = SolverModel::new();
        let x1 = m.push_variable(Domain::new(cands(&["a", "b"])));
        m.save_state();
        assert!(m.assign_next_alive(x1));
        let x2 = m.push_variable(Domain::new(cands(&["c", "d", "e"])));
        m.save_state();
        assert!(m.assign_next_alive(x2));
        let mut visited = vec![m.current_sentence()];
        while m.backtrack() {
            m.save_state();
            let last = m.len() - 1;
            assert!(m.assign_next_alive(last));
            visited.push(m.current_sentence());
            if m.len() == 1 {
                break;
            }
        }
        assert_eq!(visited, ["a c", "a d", "a e", "b"]);
    }

    #[test]
    fn backtrack_to_deletes_suffix_and_changes_xn() {
        let sentence = words("I like to swim in the summer");
        let mut m = SolverModel::with_seed(&["I"]).unwrap();
        m.save_state();
        for (i, w) in sentence.iter().enumerate().skip(1) {
            let alternatives: Vec<&str> = if i == 1 { vec![w, "want"] } else { vec![w] };
            let v = m.push_variable(Domain::new(cands(&alternatives)));
            m.save_state();
            assert!(m.assign_next_alive(v));
        }
        assert_eq!(m.current_sentence(), "I like to swim in the summer");
        assert!(m.backtrack_to(2).unwrap());
        assert_eq!(m.current_sentence(), "I want");
        assert_eq!(m.len(), 2);
        assert!(matches!(
            m.backtrack_to(2),
            Err(Error::NothingToDelete { n: 2, len: 2 })
        ));
    }

    #[test]
    fn backtrack_to_without_alternative_is_false() {
        let mut m = SolverModel::with_seed(&["Hi"]).unwrap();
        m.save_state();
        let v = m.push_variable(Domain::new(cands(&["there"])));
        m.save_state();
        m.assign_next_alive(v);
        assert!(!m.backtrack_to(1).unwrap());
    }

    #[test]
    fn variability_examples() {
        assert_eq!(
            variability(&words("The little boy is"), &words("The little cat is")),
            1
        );
        assert_eq!(
            variability(&words("My name is John"), &words("John is my name")),
            4
        );
        assert_eq!(variability(&words("a b"), &words("a b")), 0);
        assert_eq!(variability(&words("a b"), &words("a b c d")), 2);
    }
}
