//! Constrained beam search baseline.
//!
//! Keeps the `k` most probable partial sentences. At each step every beam is
//! extended by its valid next words, extensions that can no longer satisfy the
//! task are discarded, and the `k` best survivors (by cumulative log
//! probability) form the next generation. A beam that reaches the length limit,
//! or has no admissible extension, dies as a bad output.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::constraints::{admits, can_extend, check_complete, valid_words, TaskSpec};
use crate::error::{Error, LmError, Result};
use crate::lm::{perplexity, predicts_period, sequence_log_prob, LanguageModel};
use crate::model::{render_sentence, SolutionRecord};
use crate::solver::Termination;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BeamMode {
    /// Stop as soon as one beam is a solution; the other beams count as bad outputs.
    #[default]
    FirstSolution,
    /// Set solved beams aside and keep going with the rest.
    AllSolutions,
}

impl FromStr for BeamMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(BeamMode::FirstSolution),
            "all" => Ok(BeamMode::AllSolutions),
            _ => Err(Error::InvalidParams(format!(
                "beam mode {s:?}; expected first or all"
            ))),
        }
    }
}

impl fmt::Display for BeamMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BeamMode::FirstSolution => "first",
            BeamMode::AllSolutions => "all",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Beam {
    /// Content words, no period.
    pub words: Vec<String>,
    pub cum_logprob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamOptions {
    pub mode: BeamMode,
    pub max_words: usize,
    pub time_budget: Option<Duration>,
}

impl Default for BeamOptions {
    fn default() -> Self {
        Self {
            mode: BeamMode::FirstSolution,
            max_words: 64,
            time_budget: None,
        }
    }
}

impl BeamOptions {
    pub fn with_mode(mut self, mode: BeamMode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Debug, Clone)]
pub struct BeamReport {
    pub solutions: Vec<SolutionRecord>,
    pub bad_outputs: u64,
    pub lm_calls: u64,
    pub termination: Termination,
    pub elapsed: Duration,
}

impl BeamReport {
    /// Solutions as a percentage of all outputs; `None` when there were no outputs.
    pub fn satisfaction_rate(&self) -> Option<f64> {
        let total = self.solutions.len() as u64 + self.bad_outputs;
        (total > 0).then(|| 100.0 * self.solutions.len() as f64 / total as f64)
    }

    pub fn sentences(&self) -> Vec<&str> {
        self.solutions.iter().map(|s| s.sentence.as_str()).collect()
    }
}

struct Run<'a, L: ?Sized> {
    lm: &'a L,
    task: &'a TaskSpec,
    lm_calls: u64,
}

impl<L: LanguageModel + ?Sized> Run<'_, L> {
    fn is_solution(&mut self, beam: &Beam) -> std::result::Result<bool, LmError> {
        if beam.words.is_empty() {
            return Ok(false);
        }
        let mut words = beam.words.clone();
        if self.task.require_period {
            words.push(".".into());
        }
        if !check_complete(&words, self.task) {
            return Ok(false);
        }
        if !self.task.require_period {
            return Ok(true);
        }
        self.lm_calls += 1;
        predicts_period(
            self.lm,
            &render_sentence(&beam.words).expect("non-empty"),
            &self.task.lm_params,
        )
    }

    /// Admissible one-word extensions of `beam`, at most `k` of them.
    fn extensions(&mut self, beam: &Beam) -> std::result::Result<Vec<Beam>, LmError> {
        let sentence = if beam.words.is_empty() {
            String::new()
        } else {
            render_sentence(&beam.words).expect("non-empty")
        };
        let params = &self.task.lm_params;
        let raw = self.lm.call_llm(&sentence, params)?;
        self.lm_calls += 1;
        Ok(valid_words(raw, &self.task.constraints, params.k)
            .into_iter()
            .filter(|c| admits(&beam.words, c.text(), self.task))
            .map(|c| {
                let mut words = beam.words.clone();
                words.push(c.text().to_string());
                Beam {
                    words,
                    cum_logprob: beam.cum_logprob + c.logprob(),
                }
            })
            .collect())
    }
}

/// Keeps the `k` best beams by cumulative log probability, ties broken by rendered text.
pub fn select_top_k(beams: Vec<Beam>, k: usize) -> Vec<Beam> {
    let mut keyed: Vec<(String, Beam)> =
        beams.into_iter().map(|b| (b.words.join(" "), b)).collect();
    keyed.sort_by(|(ta, a), (tb, b)| {
        b.cum_logprob
            .total_cmp(&a.cum_logprob)
            .then_with(|| ta.cmp(tb))
    });
    keyed.into_iter().take(k).map(|(_, b)| b).collect()
}

pub fn beam_search<L: LanguageModel + ?Sized>(
    lm: &L,
    task: &TaskSpec,
    options: &BeamOptions,
) -> Result<BeamReport> {
    task.validate()?;
    let start = Instant::now();
    let mut run = Run {
        lm,
        task,
        lm_calls: 0,
    };
    let mut solutions = Vec::new();
    let mut bad_outputs = 0u64;
    let finish = |solutions, bad_outputs, lm_calls, termination| BeamReport {
        solutions,
        bad_outputs,
        lm_calls,
        termination,
        elapsed: start.elapsed(),
    };

    let seed_logprob = if task.seed.is_empty() {
        0.0
    } else {
        sequence_log_prob(lm, &task.seed)?
    };
    let mut beams = vec![Beam {
        words: task.seed.clone(),
        cum_logprob: seed_logprob,
    }];
    let k = task.lm_params.k;

    loop {
        if options.time_budget.is_some_and(|b| start.elapsed() >= b) {
            return Ok(finish(
                solutions,
                bad_outputs,
                run.lm_calls,
                Termination::TimeBudget,
            ));
        }
        let mut pending = Vec::new();
        for beam in beams {
            match run.is_solution(&beam) {
                Err(e) => {
                    return Ok(finish(
                        solutions,
                        bad_outputs,
                        run.lm_calls,
                        Termination::LmFailure(e.to_string()),
                    ))
                }
                Ok(true) => {
                    let mut words = beam.words;
                    if task.require_period {
                        words.push(".".into());
                    }
                    let ppl = match perplexity(lm, &words) {
                        Ok(p) => p,
                        Err(e) => {
                            return Ok(finish(
                                solutions,
                                bad_outputs,
                                run.lm_calls,
                                Termination::LmFailure(e.to_string()),
                            ))
                        }
                    };
                    solutions.push(SolutionRecord::new(
                        words,
                        ppl,
                        start.elapsed().as_secs_f64(),
                    )?);
                }
                Ok(false)
                    if beam.words.len() >= options.max_words || !can_extend(&beam.words, task) =>
                {
                    bad_outputs += 1;
                }
                Ok(false) => pending.push(beam),
            }
        }
        if options.mode == BeamMode::FirstSolution && !solutions.is_empty() {
            bad_outputs += pending.len() as u64;
            return Ok(finish(
                solutions,
                bad_outputs,
                run.lm_calls,
                Termination::SolutionLimit,
            ));
        }
        if pending.is_empty() {
            return Ok(finish(
                solutions,
                bad_outputs,
                run.lm_calls,
                Termination::Exhausted,
            ));
        }
        let mut next = Vec::new();
        for beam in &pending {
            match run.extensions(beam) {
                Ok(ext) if ext.is_empty() => bad_outputs += 1,
                Ok(ext) => next.extend(ext),
                Err(e) => {
                    return Ok(finish(
                        solutions,
                        bad_outputs,
                        run.lm_calls,
                        Termination::LmFailure(e.to_string()),
                    ))
                }
            }
        }
        beams = select_top_k(next, k);
    }
}
