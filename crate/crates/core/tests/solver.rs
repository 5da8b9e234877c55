mod common;

use std::collections::BTreeSet;

use common::{fixture, random_task, random_tree, Table};
use gencp::{
    builtin_task, check_complete, render_sentence, solve, solve_all, ConstraintSpec, LanguageModel,
    NGramLm, OrderingStrategy, SolveOptions, TableLm, TaskSpec, Termination,
};

#[test]
fn fig4_task_file_backtracks_once() {
    let lm = TableLm::load(fixture("fig4.tbl")).unwrap();
    let task = TaskSpec::load(fixture("tasks/fig4.toml")).unwrap();
    let report = solve(&lm, &task, &SolveOptions::default().with_max_solutions(1)).unwrap();
    assert_eq!(report.sentences(), ["A man runs."]);
    assert_eq!(report.stats.backtracks, 1);
    assert_eq!(report.termination, Termination::SolutionLimit);
}

#[test]
fn demo60_returns_the_four_sentences() {
    let lm = TableLm::load(fixture("demo60.tbl")).unwrap();
    let mut task = builtin_task("demo-60").unwrap().with_k(10);
    task.backtrack_to = Some(2);
    let report = solve(&lm, &task, &SolveOptions::default().with_max_solutions(4)).unwrap();
    assert_eq!(report.solutions.len(), 4);
    for s in &report.solutions {
        assert!(s.sentence.starts_with("The "));
        assert_eq!(s.sentence.chars().count(), 60, "{}", s.sentence);
        assert!((10..=15).contains(&s.content_words().len()));
        assert!(s.ppl >= 1.0);
    }
    let distinct: BTreeSet<_> = report.sentences().into_iter().collect();
    assert_eq!(distinct.len(), 4);
}

#[test]
fn ppl_ordering_finds_the_same_first_solution_as_probability() {
    for seed in 0..10 {
        let lm = random_tree(seed, 4, 4);
        let mut task = random_task(seed, 4, 4);
        let one = SolveOptions::default().with_max_solutions(1);
        task.ordering = OrderingStrategy::Probability;
        let by_prob = solve(&lm, &task, &one).unwrap();
        task.ordering = OrderingStrategy::PplValuation;
        let by_ppl = solve(&lm, &task, &one).unwrap();
        assert_eq!(by_prob.sentences(), by_ppl.sentences(), "seed {seed}");
    }
}

#[test]
fn every_solution_of_random_instances_satisfies_the_task() {
    for seed in 0..40 {
        let lm = random_tree(seed, 5, 4);
        let task = random_task(seed, 5, 4);
        let report = solve_all(&lm, &task, &SolveOptions::default()).unwrap();
        for s in &report.solutions {
            assert!(
                check_complete(&s.words, &task),
                "seed {seed}: {}",
                s.sentence
            );
            assert_eq!(render_sentence(&s.words).unwrap(), s.sentence);
        }
        let sentences: BTreeSet<_> = report.sentences().into_iter().collect();
        assert_eq!(
            sentences.len(),
            report.solutions.len(),
            "duplicates for seed {seed}"
        );
    }
}

/// Six three-word sentences under "The"; with backtrack_to(2) each solution
/// moves on to a new second word.
fn branching_lm() -> TableLm {
    let mut table = Table::default();
    table.add("", "The", 1.0);
    for second in ["cat", "dog", "bird"] {
        table.add("The", second, 0.3);
        for third in ["runs", "sits"] {
            table.add(&format!("The {second}"), third, 0.45);
            table.add(&format!("The {second} {third}"), ".", 0.9);
        }
    }
    table.build()
}

#[test]
fn backtrack_to_diversifies_the_second_word() {
    let lm = branching_lm();
    let base = TaskSpec::new(
        "three",
        vec![ConstraintSpec::WordCountRange { lo: 3, hi: Some(3) }],
    )
    .with_k(3);
    let plain = solve(&lm, &base, &SolveOptions::default()).unwrap();
    assert_eq!(plain.solutions.len(), 6);

    let mut task = base.clone();
    task.backtrack_to = Some(2);
    let jumpy = solve(&lm, &task, &SolveOptions::default()).unwrap();
    // Equal probabilities rank lexicographically.
    assert_eq!(
        jumpy.sentences(),
        ["The bird runs.", "The cat runs.", "The dog runs."]
    );
    for pair in jumpy.solutions.windows(2) {
        assert_eq!(pair[0].words[0], pair[1].words[0]);
        assert_ne!(pair[0].words[1], pair[1].words[1]);
    }
}

#[test]
fn larger_k_keeps_earlier_solutions() {
    let lm = branching_lm();
    let task = TaskSpec::new(
        "three",
        vec![ConstraintSpec::WordCountRange { lo: 3, hi: Some(3) }],
    );
    let mut previous = BTreeSet::new();
    for k in 1..=3 {
        let found: BTreeSet<String> =
            solve_all(&lm, &task.clone().with_k(k), &SolveOptions::default())
                .unwrap()
                .sentences()
                .into_iter()
                .map(String::from)
                .collect();
        assert!(previous.is_subset(&found), "k={k}");
        previous = found;
    }
    assert_eq!(previous.len(), 6);
}

#[test]
fn variable_cap_bounds_solution_length() {
    let lm = branching_lm();
    let task = TaskSpec::new(
        "open",
        vec![ConstraintSpec::WordCountRange { lo: 1, hi: None }],
    )
    .with_k(3);
    let options = SolveOptions {
        max_variables: 2,
        ..SolveOptions::default()
    };
    let report = solve_all(&lm, &task, &options).unwrap();
    assert!(report.solutions.is_empty());
    assert_eq!(report.termination, Termination::Exhausted);
    let wider = SolveOptions {
        max_variables: 3,
        ..SolveOptions::default()
    };
    assert_eq!(solve_all(&lm, &task, &wider).unwrap().solutions.len(), 6);
}

#[test]
fn ngram_backend_solves_a_small_task() {
    let lm = NGramLm::train_file(fixture("corpus.txt"), 2, 0.01).unwrap();
    let mut task = TaskSpec::new(
        "short",
        vec![ConstraintSpec::WordCountRange { lo: 4, hi: Some(6) }],
    )
    .with_seed(&["The"])
    .with_k(5);
    task.lm_params.top_p = 1.0;
    let report = solve(&lm, &task, &SolveOptions::default().with_max_solutions(3)).unwrap();
    assert_eq!(report.solutions.len(), 3, "{}", report.termination);
    for s in &report.solutions {
        assert!(check_complete(&s.words, &task));
        assert!(lm
            .call_llm(
                &render_sentence(s.content_words()).unwrap(),
                &task.lm_params
            )
            .is_ok());
    }
}
