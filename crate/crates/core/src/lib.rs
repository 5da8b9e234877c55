//! Constrained sentence generation by on-the-fly constraint search over
//! language-model predictions, with a beam-search baseline and a benchmark
//! harness comparing the two.
//!
//! ```no_run
//! use gencp::{builtin_task, solve, SolveOptions, TableLm};
//!
//! let lm = TableLm::load("fixtures/demo60.tbl").unwrap();
//! let task = builtin_task("demo-60").unwrap();
//! let report = solve(&lm, &task, &SolveOptions::default().with_max_solutions(4)).unwrap();
//! for s in &report.solutions {
//!     println!("{} (ppl {:.2})", s.sentence, s.ppl);
//! }
//! ```

pub mod beam;
pub mod cli;
pub mod constraints;
pub mod error;
pub mod harness;
pub mod lm;
pub mod model;
pub mod solver;

pub use beam::{beam_search, BeamMode, BeamOptions, BeamReport};
pub use constraints::{
    builtin_task, can_extend, check_complete, filter_domain, h_only_words, word_valid,
    ConstraintSpec, TaskSpec, BUILTIN_TASKS,
};
pub use error::{Error, LmError, Result};
pub use harness::{
    brute_force_oracle, emit_report, run_benchmark, BenchOptions, BenchRow, Method, ReportFormat,
    ReportRow, RowStatus,
};
pub use lm::{
    perplexity, predicts_period, sequence_log_prob, LanguageModel, LmParams, NGramLm, RemoteLm,
    TableLm,
};
pub use model::{render_sentence, variability, Domain, SolutionRecord, SolverModel, WordCandidate};
pub use solver::{solve, solve_all, OrderingStrategy, SolveOptions, SolveReport, Termination};
