//! On-the-fly constraint search.
//!
//! The model starts from the seed words and grows one variable at a time.
//! Each new variable gets its domain from the language model, conditioned on
//! the sentence built so far, then constraints are generated for it and its
//! domain is filtered. A saved state is pushed before every assignment so a
//! dead end can be undone and the next candidate tried.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::constraints::{check_complete, filter_domain, valid_words, TaskSpec};
use crate::error::{Error, LmError, Result};
use crate::lm::{perplexity, predicts_period, LanguageModel};
use crate::model::{
    render_sentence, ActiveConstraint, Domain, SolutionRecord, SolverModel, SolverStats,
    WordCandidate,
};

/// The order in which a new variable's candidates are tried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrderingStrategy {
    /// As ranked by the model.
    #[default]
    Probability,
    /// Ascending perplexity of the prefix extended by the candidate.
    PplValuation,
    /// Longer words first before position `pivot`, shorter ones from it on.
    /// Useful with an exact character count.
    CharTarget { pivot: usize },
}

pub const DEFAULT_CHAR_PIVOT: usize = 10;

impl OrderingStrategy {
    /// Reorders the alive values of `domain`, the candidates for the word at
    /// 1-based `position`. `prefix_logprob` is the summed log probability of
    /// the words before it.
    pub fn order(&self, domain: &Domain, position: usize, prefix_logprob: f64) -> Domain {
        match *self {
            OrderingStrategy::Probability => domain.sorted_by(|_, _| std::cmp::Ordering::Equal),
            OrderingStrategy::PplValuation => {
                let ppl =
                    |c: &WordCandidate| (-(prefix_logprob + c.logprob()) / position as f64).exp();
                domain.sorted_by(|a, b| {
                    ppl(a)
                        .total_cmp(&ppl(b))
                        .then_with(|| a.text().cmp(b.text()))
                })
            }
            OrderingStrategy::CharTarget { pivot } => domain.sorted_by(|a, b| {
                let (la, lb) = (a.text().chars().count(), b.text().chars().count());
                let by_len = if position < pivot {
                    lb.cmp(&la)
                } else {
                    la.cmp(&lb)
                };
                by_len.then_with(|| a.text().cmp(b.text()))
            }),
        }
    }
}

impl FromStr for OrderingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "probability" => Ok(OrderingStrategy::Probability),
            "ppl" => Ok(OrderingStrategy::PplValuation),
            "char-target" => Ok(OrderingStrategy::CharTarget {
                pivot: DEFAULT_CHAR_PIVOT,
            }),
            other => other
                .strip_prefix("char-target:")
                .and_then(|p| p.parse().ok())
                .map(|pivot| OrderingStrategy::CharTarget { pivot })
                .ok_or_else(|| Error::UnknownOrdering(s.to_string())),
        }
    }
}

impl fmt::Display for OrderingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderingStrategy::Probability => f.write_str("probability"),
            OrderingStrategy::PplValuation => f.write_str("ppl"),
            OrderingStrategy::CharTarget { pivot } => write!(f, "char-target:{pivot}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Stop after this many distinct solutions.
    pub max_solutions: Option<usize>,
    pub time_budget: Option<Duration>,
    /// Hard cap on sentence length, whatever the constraints say.
    pub max_variables: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_solutions: None,
            time_budget: None,
            max_variables: 64,
        }
    }
}

impl SolveOptions {
    pub fn with_max_solutions(mut self, n: usize) -> Self {
        self.max_solutions = Some(n);
        self
    }

    pub fn with_time_budget(mut self, budget: Duration) -> Self {
        self.time_budget = Some(budget);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    /// The search space was fully explored.
    Exhausted,
    SolutionLimit,
    TimeBudget,
    /// The backend failed; the solutions found before are kept.
    LmFailure(String),
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Exhausted => f.write_str("exhausted"),
            Termination::SolutionLimit => f.write_str("solution limit"),
            Termination::TimeBudget => f.write_str("time budget"),
            Termination::LmFailure(m) => write!(f, "LM failure: {m}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solutions: Vec<SolutionRecord>,
    pub stats: SolverStats,
    pub termination: Termination,
    pub elapsed: Duration,
}

impl SolveReport {
    /// True when the backend failed and the solution list may be incomplete.
    pub fn is_partial(&self) -> bool {
        matches!(self.termination, Termination::LmFailure(_))
    }

    pub fn sentences(&self) -> Vec<&str> {
        self.solutions.iter().map(|s| s.sentence.as_str()).collect()
    }
}

/// Searches for solutions of `task`. After each solution the search
/// backtracks (to `task.backtrack_to` when set) so that successive solutions
/// differ; a solution is never extended into a longer one.
pub fn solve<L: LanguageModel + ?Sized>(
    lm: &L,
    task: &TaskSpec,
    options: &SolveOptions,
) -> Result<SolveReport> {
    Search::new(lm, task, options, false)?.run()
}

/// Like [`solve`] but keeps extending past each solution, so that every
/// sentence reachable through the model's top-k domains is reported.
/// `task.backtrack_to` is ignored.
pub fn solve_all<L: LanguageModel + ?Sized>(
    lm: &L,
    task: &TaskSpec,
    options: &SolveOptions,
) -> Result<SolveReport> {
    Search::new(lm, task, options, true)?.run()
}

enum Step {
    Generate,
    Help,
    Propagate,
    Test,
    Backtrack,
}

struct Search<'a, L: ?Sized> {
    lm: &'a L,
    task: &'a TaskSpec,
    options: &'a SolveOptions,
    exhaustive: bool,
    model: SolverModel,
    solutions: Vec<SolutionRecord>,
    seen: HashSet<String>,
    start: Instant,
}

type Flow = std::result::Result<Step, Termination>;

fn lm_failure(e: LmError) -> Termination {
    Termination::LmFailure(e.to_string())
}

impl<'a, L: LanguageModel + ?Sized> Search<'a, L> {
    fn new(
        lm: &'a L,
        task: &'a TaskSpec,
        options: &'a SolveOptions,
        exhaustive: bool,
    ) -> Result<Self> {
        task.validate()?;
        Ok(Self {
            lm,
            task,
            options,
            exhaustive,
            model: SolverModel::with_seed(&task.seed)?,
            solutions: Vec::new(),
            seen: HashSet::new(),
            start: Instant::now(),
        })
    }

    fn run(mut self) -> Result<SolveReport> {
        if self.options.max_solutions == Some(0) {
            return Ok(self.finish(Termination::SolutionLimit));
        }
        // A seeded model already holds assigned variables: go straight to
        // checking them.
        let mut step = if self.model.is_empty() {
            Step::Generate
        } else {
            Step::Help
        };
        loop {
            if self
                .options
                .time_budget
                .is_some_and(|b| self.start.elapsed() >= b)
            {
                return Ok(self.finish(Termination::TimeBudget));
            }
            let next = match step {
                Step::Generate => self.generate(),
                Step::Help => Ok(self.help()),
                Step::Propagate => Ok(self.propagate()),
                Step::Test => self.test(),
                Step::Backtrack => self.backtrack(),
            };
            match next {
                Ok(s) => step = s,
                Err(t) => return Ok(self.finish(t)),
            }
        }
    }

    fn finish(self, termination: Termination) -> SolveReport {
        SolveReport {
            solutions: self.solutions,
            stats: self.model.stats(),
            termination,
            elapsed: self.start.elapsed(),
        }
    }

    fn content(&self) -> Vec<String> {
        self.model
            .current_words()
            .into_iter()
            .map(String::from)
            .collect()
    }

    /// genV, genD and genC for one new variable.
    fn generate(&mut self) -> Flow {
        if self.model.len() >= self.options.max_variables {
            return Ok(Step::Backtrack);
        }
        let partial = self.content();
        let sentence = self.model.current_sentence();
        let var = self.model.push_variable(Domain::default());

        let params = &self.task.lm_params;
        let raw = self.lm.call_llm(&sentence, params).map_err(lm_failure)?;
        self.model.record_lm_call();
        let domain = Domain::new(valid_words(raw, &self.task.constraints, params.k));
        self.model.set_domain(var, domain);

        for spec in &self.task.constraints {
            self.model.push_constraint(ActiveConstraint {
                variable: var,
                spec: spec.clone(),
            });
        }
        let filtered = filter_domain(&partial, &self.model.variables()[var].domain, self.task);
        self.model.set_domain(var, filtered);
        Ok(Step::Help)
    }

    /// Orders a freshly generated domain and saves the state, or gives up on
    /// this branch when some domain is empty.
    fn help(&mut self) -> Step {
        let var = self.model.len() - 1;
        let domain = &self.model.variables()[var].domain;
        if domain.cursor().is_none() {
            let prefix_logprob: f64 = self.model.variables()[..var]
                .iter()
                .filter_map(|v| v.domain.assigned())
                .map(WordCandidate::logprob)
                .sum();
            let ordered = self.task.ordering.order(domain, var + 1, prefix_logprob);
            self.model.set_domain(var, ordered);
        }
        if self.model.contains_empty_variable() {
            return Step::Backtrack;
        }
        self.model.save_state();
        Step::Propagate
    }

    /// Assigns the newest variable its current candidate. Domains were filtered
    /// against the prefix they extend, which stays fixed while they live, so
    /// nothing further needs pruning.
    fn propagate(&mut self) -> Step {
        let var = self.model.len() - 1;
        if self.model.assign_next_alive(var) {
            Step::Test
        } else {
            Step::Backtrack
        }
    }

    fn test(&mut self) -> Flow {
        let content = self.content();
        let mut words = content.clone();
        if self.task.require_period {
            words.push(".".into());
        }
        if !check_complete(&words, self.task) {
            return Ok(Step::Generate);
        }
        if self.task.require_period {
            self.model.record_lm_call();
            let sentence = render_sentence(&content).expect("content is non-empty");
            if !predicts_period(self.lm, &sentence, &self.task.lm_params).map_err(lm_failure)? {
                return Ok(Step::Generate);
            }
        }
        let ppl = perplexity(self.lm, &words).map_err(|e| match e {
            Error::Lm(e) => lm_failure(e),
            other => Termination::LmFailure(other.to_string()),
        })?;
        let record = SolutionRecord::new(words, ppl, self.start.elapsed().as_secs_f64())
            .expect("content is non-empty");
        if self.seen.insert(record.sentence.clone()) {
            self.solutions.push(record);
        }
        if self
            .options
            .max_solutions
            .is_some_and(|n| self.solutions.len() >= n)
        {
            return Err(Termination::SolutionLimit);
        }
        if self.exhaustive {
            return Ok(Step::Generate);
        }
        match self.task.backtrack_to {
            Some(n) if n < self.model.len() => {
                let found = self.model.backtrack_to(n).expect("n < len");
                self.landed(found)
            }
            _ => self.backtrack(),
        }
    }

    fn backtrack(&mut self) -> Flow {
        let found = self.model.backtrack();
        self.landed(found)
    }

    fn landed(&mut self, found: bool) -> Flow {
        if !found {
            return Err(Termination::Exhausted);
        }
        // Re-save the level so that its remaining candidates stay reachable.
        self.model.save_state();
        Ok(Step::Propagate)
    }
}
