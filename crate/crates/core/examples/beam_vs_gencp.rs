//! A wider beam is not always better: on this table beam search finds the
//! only solution at k=5 but loses it at k=6, while the constraint search and
//! the exhaustive oracle find it at both widths.
//!
//! cargo run --example beam_vs_gencp

use gencp::{beam_search, brute_force_oracle, solve, BeamOptions, SolveOptions, TableLm, TaskSpec};

fn main() -> gencp::Result<()> {
    let lm = TableLm::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/rank_displacement.tbl"
    ))?;
    let task = TaskSpec::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/tasks/two_words.toml"
    ))?;

    println!("{:>2}  {:<18} {:<18} oracle", "k", "beam search", "gencp");
    for k in 4..=7 {
        let task = task.clone().with_k(k);
        let bs = beam_search(&lm, &task, &BeamOptions::default())?;
        let gencp = solve(&lm, &task, &SolveOptions::default().with_max_solutions(1))?;
        let oracle = brute_force_oracle(&lm, &task, 8, 1 << 20)?;
        println!(
            "{k:>2}  {:<18} {:<18} {}",
            format!("{:?} bad={}", bs.sentences(), bs.bad_outputs),
            format!("{:?}", gencp.sentences()),
            oracle.len()
        );
    }
    Ok(())
}
