//! Benchmark runs comparing the constraint search with beam search, the
//! exhaustive reference enumeration, and the CSV/JSON report formats.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::beam::{beam_search, BeamMode, BeamOptions};
use crate::constraints::{check_complete, valid_words, TaskSpec};
use crate::error::{Error, Result};
use crate::lm::{perplexity, predicts_period, LanguageModel};
use crate::model::{render_sentence, variability, SolutionRecord};
use crate::solver::{solve, SolveOptions, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gencp,
    BsFirst,
    BsAll,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Gencp,
        Method::BsFirst,
        Method::BsAll,
        Method::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gencp => "gencp",
            Method::BsFirst => "bs-first",
            Method::BsAll => "bs-all",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidParams(format!(
                    "unknown method {s:?}; expected gencp, bs-first, bs-all or oracle"
                ))
            })
    }
}

pub const CSV_HEADER: [&str; 10] = [
    "method",
    "task",
    "k",
    "seconds",
    "n_solutions",
    "sat_pct",
    "n_bad_outputs",
    "n_backtracks",
    "mean_ppl",
    "max_variability",
];

/// One (method, task, k) measurement. Fields that do not apply to a method
/// are `None`: empty in CSV, `null` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub task: String,
    pub k: usize,
    pub seconds: f64,
    pub n_solutions: usize,
    pub sat_pct: Option<f64>,
    pub n_bad_outputs: Option<u64>,
    pub n_backtracks: Option<u64>,
    pub mean_ppl: Option<f64>,
    pub max_variability: usize,
}

/// How one benchmark run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Finished(Termination),
    /// The run could not produce a result; the row holds zero solutions.
    Failed {
        backend: bool,
        message: String,
    },
}

impl RowStatus {
    fn failed(e: Error) -> Self {
        RowStatus::Failed {
            backend: matches!(e, Error::Lm(_)),
            message: e.to_string(),
        }
    }

    /// True when the LM backend failed, whether or not partial results were kept.
    pub fn is_backend_failure(&self) -> bool {
        matches!(
            self,
            RowStatus::Finished(Termination::LmFailure(_))
                | RowStatus::Failed { backend: true, .. }
        )
    }
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowStatus::Finished(t) => t.fmt(f),
            RowStatus::Failed { message, .. } => write!(f, "failed: {message}"),
        }
    }
}

/// A report row plus how its run ended.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub row: ReportRow,
    pub status: RowStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::InvalidParams(format!(
                "report format {s:?}; expected csv or json"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    /// Per-run limit for every method.
    pub time_budget: Option<Duration>,
    pub max_variables: usize,
    pub oracle_node_limit: u64,
    /// Solution target for the constraint search when no beam search ran for
    /// the same task and k.
    pub gencp_max_solutions: Option<usize>,
}

pub const DEFAULT_ORACLE_NODE_LIMIT: u64 = 1 << 24;

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            time_budget: None,
            max_variables: 64,
            oracle_node_limit: DEFAULT_ORACLE_NODE_LIMIT,
            gencp_max_solutions: None,
        }
    }
}

/// Greatest pairwise variability among the solutions' content words.
pub fn max_variability(solutions: &[SolutionRecord]) -> usize {
    let mut best = 0;
    for (i, a) in solutions.iter().enumerate() {
        for b in &solutions[i + 1..] {
            best = best.max(variability(a.content_words(), b.content_words()));
        }
    }
    best
}

pub fn mean_ppl(solutions: &[SolutionRecord]) -> Option<f64> {
    (!solutions.is_empty())
        .then(|| solutions.iter().map(|s| s.ppl).sum::<f64>() / solutions.len() as f64)
}

/// How many solutions the constraint search is asked for when paired with a
/// beam search that found `bs_count`: the same number, but at least one.
pub fn solution_target(bs_count: usize) -> usize {
    bs_count.max(1)
}

/// `"found/target"`, e.g. `"0/1"` when the paired beam search found nothing.
pub fn pairing_label(found: usize, target: usize) -> String {
    format!("{found}/{target}")
}

fn base_row(
    method: Method,
    task: &TaskSpec,
    solutions: &[SolutionRecord],
    elapsed: Duration,
) -> ReportRow {
    ReportRow {
        method,
        task: task.name.clone(),
        k: task.lm_params.k,
        seconds: elapsed.as_secs_f64(),
        n_solutions: solutions.len(),
        sat_pct: None,
        n_bad_outputs: None,
        n_backtracks: None,
        mean_ppl: mean_ppl(solutions),
        max_variability: max_variability(solutions),
    }
}

/// Runs every requested method on every task at every k. Beam searches run
/// first so the constraint search can be asked for as many solutions as the
/// beam search found (at least one). Rows come back sorted by task, k, method.
pub fn run_benchmark<L: LanguageModel + ?Sized>(
    lm: &L,
    tasks: &[TaskSpec],
    ks: &[usize],
    methods: &[Method],
    options: &BenchOptions,
) -> Result<Vec<BenchRow>> {
    let methods: BTreeSet<Method> = methods.iter().copied().collect();
    for task in tasks {
        task.validate()?;
    }
    let mut rows = Vec::new();
    for base in tasks {
        for &k in ks {
            let task = base.clone().with_k(k);
            let failed = |method, e| BenchRow {
                row: base_row(method, &task, &[], Duration::ZERO),
                status: RowStatus::failed(e),
            };
            let mut bs_count = None::<usize>;
            for (method, mode) in [
                (Method::BsFirst, BeamMode::FirstSolution),
                (Method::BsAll, BeamMode::AllSolutions),
            ] {
                if !methods.contains(&method) {
                    continue;
                }
                let options = BeamOptions {
                    mode,
                    max_words: options.max_variables,
                    time_budget: options.time_budget,
                };
                match beam_search(lm, &task, &options) {
                    Ok(report) => {
                        bs_count = Some(bs_count.unwrap_or(0).max(report.solutions.len()));
                        let mut row = base_row(method, &task, &report.solutions, report.elapsed);
                        row.sat_pct = report.satisfaction_rate();
                        row.n_bad_outputs = Some(report.bad_outputs);
                        rows.push(BenchRow {
                            row,
                            status: RowStatus::Finished(report.termination),
                        });
                    }
                    Err(e) => rows.push(failed(method, e)),
                }
            }
            if methods.contains(&Method::Gencp) {
                let max_solutions = bs_count
                    .map(solution_target)
                    .or(options.gencp_max_solutions);
                let solve_options = SolveOptions {
                    max_solutions,
                    time_budget: options.time_budget,
                    max_variables: options.max_variables,
                };
                match solve(lm, &task, &solve_options) {
                    Ok(report) => {
                        let mut row =
                            base_row(Method::Gencp, &task, &report.solutions, report.elapsed);
                        row.sat_pct = (!report.solutions.is_empty()).then_some(100.0);
                        row.n_bad_outputs = Some(0);
                        row.n_backtracks = Some(report.stats.backtracks);
                        rows.push(BenchRow {
                            row,
                            status: RowStatus::Finished(report.termination),
                        });
                    }
                    Err(e) => rows.push(failed(Method::Gencp, e)),
                }
            }
            if methods.contains(&Method::Oracle) {
                let start = Instant::now();
                match brute_force_oracle(
                    lm,
                    &task,
                    options.max_variables,
                    options.oracle_node_limit,
                ) {
                    Ok(solutions) => rows.push(BenchRow {
                        row: base_row(Method::Oracle, &task, &solutions, start.elapsed()),
                        status: RowStatus::Finished(Termination::Exhausted),
                    }),
                    Err(e) => rows.push(failed(Method::Oracle, e)),
                }
            }
        }
    }
    rows.sort_by(|a, b| {
        (&a.row.task, a.row.k, a.row.method).cmp(&(&b.row.task, b.row.k, b.row.method))
    });
    Ok(rows)
}

/// Every sentence reachable from the seed by repeatedly appending one of the
/// model's first `k` valid words, that satisfies the task. Plain depth-first
/// enumeration with no pruning, meant as a reference on small models.
/// Fails with [`Error::OracleLimit`] past `node_limit` visited prefixes.
pub fn brute_force_oracle<L: LanguageModel + ?Sized>(
    lm: &L,
    task: &TaskSpec,
    max_words: usize,
    node_limit: u64,
) -> Result<Vec<SolutionRecord>> {
    task.validate()?;
    let start = Instant::now();
    let mut oracle = Oracle {
        lm,
        task,
        max_words,
        node_limit,
        nodes: 0,
        seen: BTreeSet::new(),
        found: Vec::new(),
        start,
    };
    let mut prefix = task.seed.clone();
    oracle.visit(&mut prefix)?;
    Ok(oracle.found)
}

struct Oracle<'a, L: ?Sized> {
    lm: &'a L,
    task: &'a TaskSpec,
    max_words: usize,
    node_limit: u64,
    nodes: u64,
    seen: BTreeSet<String>,
    found: Vec<SolutionRecord>,
    start: Instant,
}

impl<L: LanguageModel + ?Sized> Oracle<'_, L> {
    fn visit(&mut self, prefix: &mut Vec<String>) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.node_limit {
            return Err(Error::OracleLimit {
                limit: self.node_limit,
            });
        }
        let sentence = if prefix.is_empty() {
            String::new()
        } else {
            render_sentence(prefix)?
        };
        if !prefix.is_empty() {
            let mut words = prefix.clone();
            if self.task.require_period {
                words.push(".".into());
            }
            let ok = check_complete(&words, self.task)
                && (!self.task.require_period
                    || predicts_period(self.lm, &sentence, &self.task.lm_params)?);
            if ok {
                let ppl = perplexity(self.lm, &words)?;
                let record = SolutionRecord::new(words, ppl, self.start.elapsed().as_secs_f64())?;
                if self.seen.insert(record.sentence.clone()) {
                    self.found.push(record);
                }
            }
        }
        if prefix.len() >= self.max_words {
            return Ok(());
        }
        let raw = self.lm.call_llm(&sentence, &self.task.lm_params)?;
        for child in valid_words(raw, &self.task.constraints, self.task.lm_params.k) {
            prefix.push(child.text().to_string());
            self.visit(prefix)?;
            prefix.pop();
        }
        Ok(())
    }
}

pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER).map_err(report_err)?;
    for row in rows {
        w.serialize(row).map_err(report_err)?;
    }
    w.flush().map_err(|e| Error::Report(e.to_string()))
}

/// Writes `rows` to `path` in `format`; an empty report is an error.
pub fn emit_report(rows: &[ReportRow], format: ReportFormat, path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    let text = match format {
        ReportFormat::Csv => to_csv(rows),
        ReportFormat::Json => to_json(rows) + "\n",
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Parses a report; the header must match [`CSV_HEADER`] exactly.
pub fn parse_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = r.headers().map_err(report_err)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Report(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(report_err)).collect()
}

pub fn to_json(rows: &[ReportRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize")
}

pub fn parse_json(text: &str) -> Result<Vec<ReportRow>> {
    serde_json::from_str(text).map_err(|e| Error::Report(e.to_string()))
}

fn report_err(e: csv::Error) -> Error {
    Error::Report(e.to_string())
}

/// Human-readable summary table.
pub fn format_table(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<9} {:<10} {:>3} {:>9} {:>7} {:>6} {:>5} {:>6} {:>9} {:>4}  status",
        "method", "task", "k", "seconds", "#sol", "sat%", "#bad", "#bk", "ppl", "var"
    );
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    for BenchRow { row, status } in rows {
        let _ = writeln!(
            out,
            "{:<9} {:<10} {:>3} {:>9.3} {:>7} {:>6} {:>5} {:>6} {:>9} {:>4}  {}",
            row.method.name(),
            row.task,
            row.k,
            row.seconds,
            row.n_solutions,
            opt(row.sat_pct.map(|v| format!("{v:.1}"))),
            opt(row.n_bad_outputs.map(|v| v.to_string())),
            opt(row.n_backtracks.map(|v| v.to_string())),
            opt(row.mean_ppl.map(|v| format!("{v:.2}"))),
            row.max_variability,
            status
        );
    }
    out
}
