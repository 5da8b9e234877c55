//! Cross-checks the exhaustive constraint search against plain depth-first
//! enumeration on a table model.
//!
//! cargo run --example oracle_check

use std::collections::BTreeSet;

use gencp::{brute_force_oracle, solve_all, ConstraintSpec, SolveOptions, TableLm, TaskSpec};

fn main() -> gencp::Result<()> {
    let lm = TableLm::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/fig4.tbl"))?;
    let with_e = vec![ConstraintSpec::WordCountRange { lo: 2, hi: Some(4) }];
    let mut without_e = with_e.clone();
    without_e.push(ConstraintSpec::forbidden_chars("e"));
    for (constraints, k) in [(&with_e, 1), (&with_e, 2), (&with_e, 3), (&without_e, 3)] {
        let task = TaskSpec::new("fig4", constraints.clone())
            .with_seed(&["A"])
            .with_k(k);
        let searched: BTreeSet<String> = solve_all(&lm, &task, &SolveOptions::default())?
            .solutions
            .into_iter()
            .map(|s| s.sentence)
            .collect();
        let enumerated: BTreeSet<String> = brute_force_oracle(&lm, &task, 8, 1 << 20)?
            .into_iter()
            .map(|s| s.sentence)
            .collect();
        println!(
            "k={k} forbid e={}: {searched:?} {}",
            constraints.len() > 1,
            if searched == enumerated {
                "== oracle"
            } else {
                "!= oracle"
            }
        );
    }
    Ok(())
}
