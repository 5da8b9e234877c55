//! The "no letter e" walk-through: the model proposes [man, house, boy] after
//! "A", the constraint drops "house", "boy" leads nowhere and the search
//! backtracks to "man".
//!
//! cargo run --example fig4_backtracking

use gencp::{solve, SolveOptions, TableLm, TaskSpec};

fn main() -> gencp::Result<()> {
    let lm = TableLm::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/fig4.tbl"))?;
    let task = TaskSpec::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/tasks/fig4.toml"
    ))?;

    let report = solve(&lm, &task, &SolveOptions::default().with_max_solutions(1))?;
    for s in &report.solutions {
        println!("{}  (ppl {:.3})", s.sentence, s.ppl);
    }
    println!(
        "backtracks: {}, LM calls: {}, stopped: {}",
        report.stats.backtracks, report.stats.lm_calls, report.termination
    );
    Ok(())
}
