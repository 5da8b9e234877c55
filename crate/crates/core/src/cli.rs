//! Command-line front end. [`run`] takes the arguments and output streams so
//! it can be driven from tests.

use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::beam::{beam_search, BeamMode, BeamOptions};
use crate::constraints::{TaskSpec, BUILTIN_TASKS};
use crate::error::{Error, Result};
use crate::harness::{
    brute_force_oracle, emit_report, format_table, run_benchmark, to_csv, to_json, BenchOptions,
    Method, ReportFormat, DEFAULT_ORACLE_NODE_LIMIT,
};
use crate::lm::{LanguageModel, NGramLm, RemoteLm, TableLm};
use crate::model::SolutionRecord;
use crate::solver::{solve, solve_all, OrderingStrategy, SolveOptions, Termination};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BACKEND: i32 = 2;

pub const DEFAULT_NGRAM_ORDER: usize = 2;
pub const DEFAULT_NGRAM_SMOOTHING: f64 = 0.01;

#[derive(Debug, Parser)]
#[command(
    name = "gencp",
    version,
    about = "Constrained sentence generation with language-model domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Search for sentences satisfying a task.
    Solve(SolveArgs),
    /// Run the beam-search baseline on a task.
    Beam(BeamArgs),
    /// Compare methods over tasks and beam widths and write a report.
    Bench(BenchArgs),
    /// Enumerate every reachable solution of a small task.
    Oracle(OracleArgs),
    /// Train an n-gram model from a text corpus and save it as JSON.
    TrainNgram(TrainArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Builtin task name or path to a TOML task file.
    #[arg(long)]
    task: String,
    /// Backend: table:<path>, ngram:<path>[,order[,smoothing]] or remote:<url>.
    #[arg(long)]
    lm: String,
    /// Candidates kept per variable or beam.
    #[arg(long)]
    k: Option<usize>,
    /// Overrides the task's seed words (space separated).
    #[arg(long)]
    seed_words: Option<String>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_budget: Option<f64>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Stop after this many solutions.
    #[arg(long)]
    max_solutions: Option<usize>,
    /// After a solution, change the word at this position instead of the last one.
    #[arg(long)]
    backtrack_to: Option<usize>,
    /// probability, ppl, char-target or char-target:<pivot>.
    #[arg(long)]
    ordering: Option<String>,
    /// Keep extending past solutions to enumerate every reachable one.
    #[arg(long)]
    all: bool,
    /// Longest sentence, in words, the search may build.
    #[arg(long, default_value_t = 64)]
    max_variables: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    First,
    All,
}

#[derive(Debug, Args)]
struct BeamArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "first")]
    mode: ModeArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Tasks to run (repeatable); all builtin tasks by default.
    #[arg(long)]
    task: Vec<String>,
    /// Backend: table:<path>, ngram:<path>[,order[,smoothing]] or remote:<url>.
    #[arg(long)]
    lm: String,
    /// Comma-separated beam widths.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    k: Vec<usize>,
    /// Comma-separated methods: gencp, bs-first, bs-all, oracle.
    #[arg(long, value_delimiter = ',', default_value = "gencp,bs-first,bs-all")]
    method: Vec<String>,
    /// Report file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Per-run wall-clock limit in seconds.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Solution target for gencp when no beam search runs alongside it.
    #[arg(long)]
    max_solutions: Option<usize>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    /// Refuse once this many prefixes have been visited.
    #[arg(long, default_value_t = DEFAULT_ORACLE_NODE_LIMIT)]
    node_limit: u64,
    #[arg(long, default_value_t = 64)]
    max_words: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// UTF-8 plain text.
    #[arg(long)]
    corpus: PathBuf,
    /// Number of preceding words conditioned on.
    #[arg(long, default_value_t = DEFAULT_NGRAM_ORDER)]
    order: usize,
    /// Additive smoothing constant.
    #[arg(long, default_value_t = DEFAULT_NGRAM_SMOOTHING)]
    smoothing: f64,
    /// Where to write the JSON model.
    #[arg(long)]
    out: PathBuf,
}

/// Builds a backend from `table:<path>`, `ngram:<path>[,order[,smoothing]]`
/// (a `.json` path loads a trained model) or `remote:<url>`.
pub fn load_backend(spec: &str) -> Result<Box<dyn LanguageModel>> {
    let bad = || Error::BackendSpec(spec.to_string());
    let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
    match kind {
        "table" if !rest.is_empty() => Ok(Box::new(TableLm::load(rest)?)),
        "ngram" if !rest.is_empty() => {
            let mut parts = rest.split(',');
            let path = parts.next().ok_or_else(bad)?;
            let order = parts
                .next()
                .map(|s| s.trim().parse().map_err(|_| bad()))
                .transpose()?;
            let smoothing = parts
                .next()
                .map(|s| s.trim().parse().map_err(|_| bad()))
                .transpose()?;
            if parts.next().is_some() {
                return Err(bad());
            }
            if path.ends_with(".json") {
                return Ok(Box::new(NGramLm::load_json(path)?));
            }
            Ok(Box::new(NGramLm::train_file(
                path,
                order.unwrap_or(DEFAULT_NGRAM_ORDER),
                smoothing.unwrap_or(DEFAULT_NGRAM_SMOOTHING),
            )?))
        }
        "remote" if !rest.is_empty() => Ok(Box::new(RemoteLm::new(rest)?)),
        _ => Err(bad()),
    }
}

fn budget(secs: Option<f64>) -> Result<Option<Duration>> {
    secs.map(|s| {
        Duration::try_from_secs_f64(s).map_err(|_| Error::InvalidParams(format!("time budget {s}")))
    })
    .transpose()
}

fn load_task(common: &Common) -> Result<TaskSpec> {
    let mut task = TaskSpec::resolve(&common.task)?;
    if let Some(k) = common.k {
        task.lm_params.k = k;
    }
    if let Some(seed) = &common.seed_words {
        task.seed = seed.split_whitespace().map(String::from).collect();
    }
    Ok(task)
}

fn print_solutions(out: &mut dyn Write, solutions: &[SolutionRecord]) -> std::io::Result<()> {
    for s in solutions {
        writeln!(out, "{}\tppl={:.4}", s.sentence, s.ppl)?;
    }
    Ok(())
}

fn exit_for(termination: &Termination) -> i32 {
    match termination {
        Termination::LmFailure(_) => EXIT_BACKEND,
        _ => EXIT_OK,
    }
}

/// Parses `args` (program name first) and runs the command. Returns the exit
/// code: 0 on success, 1 for usage and input errors, 2 when the backend fails.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Lm(_) => EXIT_BACKEND,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let io = |e: std::io::Error| Error::io("<output>", e);
    match cli.command {
        Command::Solve(args) => {
            let mut task = load_task(&args.common)?;
            if let Some(o) = &args.ordering {
                task.ordering = o.parse::<OrderingStrategy>()?;
            }
            if args.backtrack_to.is_some() {
                task.backtrack_to = args.backtrack_to;
            }
            let lm = load_backend(&args.common.lm)?;
            let options = SolveOptions {
                max_solutions: args.max_solutions,
                time_budget: budget(args.common.time_budget)?,
                max_variables: args.max_variables,
            };
            let report = if args.all {
                solve_all(&lm, &task, &options)?
            } else {
                solve(&lm, &task, &options)?
            };
            print_solutions(stdout, &report.solutions).map_err(io)?;
            writeln!(
                stderr,
                "task={} k={} solutions={} backtracks={} lm_calls={} seconds={:.3} end={}",
                task.name,
                task.lm_params.k,
                report.solutions.len(),
                report.stats.backtracks,
                report.stats.lm_calls,
                report.elapsed.as_secs_f64(),
                report.termination
            )
            .map_err(io)?;
            Ok(exit_for(&report.termination))
        }
        Command::Beam(args) => {
            let task = load_task(&args.common)?;
            let lm = load_backend(&args.common.lm)?;
            let mode = match args.mode {
                ModeArg::First => BeamMode::FirstSolution,
                ModeArg::All => BeamMode::AllSolutions,
            };
            let options = BeamOptions {
                mode,
                time_budget: budget(args.common.time_budget)?,
                ..BeamOptions::default()
            };
            let report = beam_search(&lm, &task, &options)?;
            print_solutions(stdout, &report.solutions).map_err(io)?;
            let sat = report
                .satisfaction_rate()
                .map_or_else(|| "-".to_string(), |v| format!("{v:.1}"));
            writeln!(
                stderr,
                "task={} k={} mode={} solutions={} bad_outputs={} sat_pct={} lm_calls={} seconds={:.3} end={}",
                task.name,
                task.lm_params.k,
                mode,
                report.solutions.len(),
                report.bad_outputs,
                sat,
                report.lm_calls,
                report.elapsed.as_secs_f64(),
                report.termination
            )
            .map_err(io)?;
            Ok(exit_for(&report.termination))
        }
        Command::Bench(args) => {
            let names: Vec<String> = if args.task.is_empty() {
                BUILTIN_TASKS.iter().map(|s| s.to_string()).collect()
            } else {
                args.task.clone()
            };
            let tasks = names
                .iter()
                .map(|n| TaskSpec::resolve(n))
                .collect::<Result<Vec<_>>>()?;
            let methods = args
                .method
                .iter()
                .map(|m| m.parse())
                .collect::<Result<Vec<Method>>>()?;
            let lm = load_backend(&args.lm)?;
            let options = BenchOptions {
                time_budget: budget(args.time_budget)?,
                gencp_max_solutions: args.max_solutions,
                ..BenchOptions::default()
            };
            let rows = run_benchmark(&lm, &tasks, &args.k, &methods, &options)?;
            let plain: Vec<_> = rows.iter().map(|r| r.row.clone()).collect();
            let format = match args.format {
                Format::Csv => ReportFormat::Csv,
                Format::Json => ReportFormat::Json,
            };
            match &args.out {
                Some(path) => emit_report(&plain, format, path)?,
                None => {
                    let text = match format {
                        ReportFormat::Csv => to_csv(&plain),
                        ReportFormat::Json => to_json(&plain) + "\n",
                    };
                    stdout.write_all(text.as_bytes()).map_err(io)?
                }
            }
            write!(stderr, "{}", format_table(&rows)).map_err(io)?;
            let failed = rows.iter().any(|r| r.status.is_backend_failure());
            Ok(if failed { EXIT_BACKEND } else { EXIT_OK })
        }
        Command::Oracle(args) => {
            let task = load_task(&args.common)?;
            let lm = load_backend(&args.common.lm)?;
            let solutions = brute_force_oracle(&lm, &task, args.max_words, args.node_limit)?;
            print_solutions(stdout, &solutions).map_err(io)?;
            writeln!(
                stderr,
                "task={} k={} solutions={}",
                task.name,
                task.lm_params.k,
                solutions.len()
            )
            .map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::TrainNgram(args) => {
            let lm = NGramLm::train_file(&args.corpus, args.order, args.smoothing)?;
            lm.save_json(&args.out)?;
            writeln!(
                stderr,
                "trained order-{} model, {} words, saved to {}",
                lm.order(),
                lm.vocab().len(),
                args.out.display()
            )
            .map_err(io)?;
            Ok(EXIT_OK)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("gencp").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn backend_specs() {
        assert!(matches!(
            load_backend("gpt:foo"),
            Err(Error::BackendSpec(_))
        ));
        assert!(matches!(load_backend("table:"), Err(Error::BackendSpec(_))));
        assert!(matches!(
            load_backend("ngram:x.txt,two"),
            Err(Error::BackendSpec(_))
        ));
        assert!(matches!(
            load_backend("table:/no/such/file"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn usage_errors_exit_one() {
        let (code, _, err) = run_capture(&["solve", "--lm", "table:x"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--task"));
        let (code, _, err) = run_capture(&["solve", "--task", "sent-9", "--lm", "table:x"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("sent-4*"));
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("train-ngram"));
    }

    #[test]
    fn unreachable_remote_exits_two() {
        let (code, out, err) = run_capture(&[
            "solve",
            "--task",
            "sent-4",
            "--lm",
            "remote:http://127.0.0.1:9",
        ]);
        assert_eq!(code, EXIT_BACKEND, "{err}");
        assert!(out.is_empty());
    }
}
