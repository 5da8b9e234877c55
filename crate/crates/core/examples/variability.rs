//! Plain backtracking changes the last word first, so consecutive solutions
//! are near-duplicates. backtrack_to(n) jumps back to word n after each
//! solution and spreads the solutions out.
//!
//! cargo run --example variability

use gencp::harness::max_variability;
use gencp::{solve, ConstraintSpec, SolveOptions, TableLm, TaskSpec};

fn main() -> gencp::Result<()> {
    let mut rows = Vec::new();
    for first in ["little", "old"] {
        for second in ["boy", "cat", "dog"] {
            for verb in ["is", "was"] {
                for end in ["here", "home"] {
                    rows.push((format!("The {first} {second} {verb}"), end, 0.4));
                }
                rows.push((format!("The {first} {second}"), verb, 0.3));
            }
            rows.push((format!("The {first}"), second, 0.3));
        }
        rows.push(("The".into(), first, 0.4));
    }
    rows.push(("".into(), "The", 1.0));
    for first in ["little", "old"] {
        for second in ["boy", "cat", "dog"] {
            for verb in ["is", "was"] {
                for end in ["here", "home"] {
                    rows.push((format!("The {first} {second} {verb} {end}"), ".", 0.9));
                }
            }
        }
    }
    let lm = TableLm::from_probs(rows)?;
    let base = TaskSpec::new(
        "five",
        vec![ConstraintSpec::WordCountRange { lo: 5, hi: Some(5) }],
    )
    .with_k(3);

    for n in [None, Some(3), Some(2)] {
        let mut task = base.clone();
        task.backtrack_to = n;
        let report = solve(&lm, &task, &SolveOptions::default().with_max_solutions(4))?;
        println!(
            "backtrack_to = {n:?}, max variability {}",
            max_variability(&report.solutions)
        );
        for s in report.sentences() {
            println!("  {s}");
        }
    }
    Ok(())
}
