//! Runs all methods on two tasks at two widths and writes the report as CSV
//! and JSON next to a printed summary.
//!
//! cargo run --example benchmark_report [out_dir]

use std::path::PathBuf;

use gencp::harness::format_table;
use gencp::{emit_report, run_benchmark, BenchOptions, Method, ReportFormat, TableLm, TaskSpec};

fn main() -> gencp::Result<()> {
    let dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| std::env::temp_dir().display().to_string()),
    );
    let lm = TableLm::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/rank_displacement.tbl"
    ))?;
    let two = TaskSpec::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/tasks/two_words.toml"
    ))?;
    let mut one = two.clone();
    one.name = "one-or-two".into();
    one.constraints = vec![gencp::ConstraintSpec::WordCountRange { lo: 1, hi: Some(2) }];

    let rows = run_benchmark(
        &lm,
        &[two, one],
        &[5, 6],
        &Method::ALL,
        &BenchOptions::default(),
    )?;
    print!("{}", format_table(&rows));

    let plain: Vec<_> = rows.into_iter().map(|r| r.row).collect();
    for (format, name) in [
        (ReportFormat::Csv, "report.csv"),
        (ReportFormat::Json, "report.json"),
    ] {
        let path = dir.join(name);
        emit_report(&plain, format, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
