//! Builds a task in code, prints it as a task file, reads it back and solves
//! it with an n-gram model.
//!
//! cargo run --example custom_task

use gencp::{solve, ConstraintSpec, NGramLm, OrderingStrategy, SolveOptions, TaskSpec};

fn main() -> gencp::Result<()> {
    let lm = NGramLm::train_file(
        concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus.txt"),
        2,
        0.01,
    )?;

    let mut task = TaskSpec::new(
        "sandy",
        vec![
            ConstraintSpec::WordCountRange { lo: 5, hi: Some(9) },
            ConstraintSpec::keywords(&["sand"]),
            ConstraintSpec::MaxWordLen { max: 8 },
            ConstraintSpec::forbidden_chars("z"),
        ],
    )
    .with_seed(&["The"])
    // Kept small: smoothed unseen words tie, and "." sorts first among them.
    .with_k(4);
    task.ordering = OrderingStrategy::PplValuation;

    let text = task.to_toml();
    println!("{text}");
    let task = TaskSpec::from_toml(&text, "sandy.toml")?;

    let report = solve(&lm, &task, &SolveOptions::default().with_max_solutions(3))?;
    for s in &report.solutions {
        println!("{}  (ppl {:.2})", s.sentence, s.ppl);
    }
    println!("stopped: {}", report.termination);
    Ok(())
}
