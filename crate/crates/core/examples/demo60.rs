//! Four sentences starting with "The", 10 to 15 words, exactly 60 characters.
//! backtrack_to(2) forces each new solution to change the second word.
//!
//! cargo run --example demo60

use gencp::{builtin_task, solve, variability, SolveOptions, TableLm};

fn main() -> gencp::Result<()> {
    let lm = TableLm::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/demo60.tbl"))?;
    let mut task = builtin_task("demo-60")?.with_k(10);
    task.backtrack_to = Some(2);

    let report = solve(&lm, &task, &SolveOptions::default().with_max_solutions(4))?;
    for (i, s) in report.solutions.iter().enumerate() {
        println!(
            "{}. {} [{} words, {} chars, ppl {:.2}]",
            i + 1,
            s.sentence,
            s.content_words().len(),
            s.sentence.chars().count(),
            s.ppl
        );
    }
    if let [a, b, ..] = report.solutions.as_slice() {
        println!(
            "variability of the first two: {}",
            variability(a.content_words(), b.content_words())
        );
    }
    println!(
        "{} backtracks in {:?}",
        report.stats.backtracks, report.elapsed
    );
    Ok(())
}
