mod common;

use common::{fixture, random_task, random_tree};
use gencp::beam::{select_top_k, Beam};
use gencp::{
    beam_search, brute_force_oracle, check_complete, perplexity, predicts_period, render_sentence,
    solve, BeamMode, BeamOptions, SolveOptions, TableLm, TaskSpec, Termination,
};

fn two_words() -> TaskSpec {
    TaskSpec::load(fixture("tasks/two_words.toml")).unwrap()
}

#[test]
fn widening_the_beam_loses_the_solution() {
    let lm = TableLm::load(fixture("rank_displacement.tbl")).unwrap();
    let at5 = beam_search(&lm, &two_words().with_k(5), &BeamOptions::default()).unwrap();
    assert_eq!(at5.sentences(), ["e s."]);
    let at6 = beam_search(&lm, &two_words().with_k(6), &BeamOptions::default()).unwrap();
    assert!(at6.solutions.is_empty());
    assert_eq!(at6.bad_outputs, 6);
    assert_eq!(at6.satisfaction_rate(), Some(0.0));

    let oracle = brute_force_oracle(&lm, &two_words().with_k(6), 64, 1 << 20).unwrap();
    assert!(oracle.iter().any(|s| s.sentence == "e s."));
    let gencp = solve(&lm, &two_words().with_k(6), &SolveOptions::default()).unwrap();
    assert!(gencp.sentences().contains(&"e s."));
}

#[test]
fn greedy_miss_fixture() {
    let lm = TableLm::load(fixture("bs_miss.tbl")).unwrap();
    let task = two_words().with_k(2);
    let bs = beam_search(&lm, &task, &BeamOptions::default()).unwrap();
    assert!(bs.solutions.is_empty());
    assert!(bs.bad_outputs >= 1);
    let gencp = solve(&lm, &task, &SolveOptions::default().with_max_solutions(1)).unwrap();
    assert_eq!(gencp.solutions.len(), 1);
}

#[test]
fn outputs_are_classified_exclusively() {
    for seed in 0..30 {
        let lm = random_tree(seed, 5, 4);
        let task = random_task(seed, 5, 4);
        for mode in [BeamMode::FirstSolution, BeamMode::AllSolutions] {
            let report = beam_search(&lm, &task, &BeamOptions::default().with_mode(mode)).unwrap();
            assert_ne!(report.termination, Termination::TimeBudget);
            for s in &report.solutions {
                assert!(
                    check_complete(&s.words, &task),
                    "seed {seed}: {}",
                    s.sentence
                );
                if task.require_period {
                    let body = render_sentence(s.content_words()).unwrap();
                    assert!(predicts_period(&lm, &body, &task.lm_params).unwrap());
                }
                let expected = perplexity(&lm, &s.words).unwrap();
                assert!((s.ppl - expected).abs() < 1e-9);
            }
            if mode == BeamMode::FirstSolution && !report.solutions.is_empty() {
                assert_eq!(report.termination, Termination::SolutionLimit);
            }
        }
    }
}

#[test]
fn all_mode_finds_at_least_first_mode_solutions() {
    for seed in 0..30 {
        let lm = random_tree(seed, 5, 4);
        let task = random_task(seed, 5, 4);
        let first = beam_search(&lm, &task, &BeamOptions::default()).unwrap();
        let all = beam_search(
            &lm,
            &task,
            &BeamOptions::default().with_mode(BeamMode::AllSolutions),
        )
        .unwrap();
        for s in first.sentences() {
            assert!(all.sentences().contains(&s), "seed {seed}: {s}");
        }
    }
}

#[test]
fn top_k_tie_break_uses_rendered_text() {
    let beam = |words: &[&str], lp: f64| Beam {
        words: words.iter().map(|w| w.to_string()).collect(),
        cum_logprob: lp,
    };
    let got = select_top_k(
        vec![
            beam(&["ab", "c"], -1.0),
            beam(&["a", "b"], -1.0),
            beam(&["z"], -0.5),
        ],
        2,
    );
    assert_eq!(got, [beam(&["z"], -0.5), beam(&["a", "b"], -1.0)]);
    assert!(select_top_k(vec![beam(&["x"], 0.0)], 0).is_empty());
}
