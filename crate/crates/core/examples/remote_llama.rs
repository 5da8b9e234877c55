//! Solves a task against a llama.cpp-style completion server.
//!
//! cargo run --example remote_llama -- http://localhost:8080 [task]
//!
//! The URL may also come from GENCP_LM_URL. GENCP_LM_TIMEOUT_SECS sets the
//! request timeout.

use std::process::ExitCode;

use gencp::{solve, RemoteLm, SolveOptions, TaskSpec};

fn main() -> ExitCode {
    let mut args = std::env::args().skip(1);
    let Some(url) = args.next().or_else(|| std::env::var("GENCP_LM_URL").ok()) else {
        eprintln!("usage: remote_llama <server url> [task]");
        return ExitCode::from(1);
    };
    let task = args.next().unwrap_or_else(|| "sent-4".into());
    match run(&url, &task) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// False when the server failed part way.
fn run(url: &str, task: &str) -> gencp::Result<bool> {
    let lm = RemoteLm::new(url)?;
    let task = TaskSpec::resolve(task)?.with_k(10);
    let report = solve(&lm, &task, &SolveOptions::default().with_max_solutions(3))?;
    for s in &report.solutions {
        println!("{}  (ppl {:.2})", s.sentence, s.ppl);
    }
    println!(
        "{} requests, stopped: {}",
        lm.request_count(),
        report.termination
    );
    if report.is_partial() {
        eprintln!("the server failed; solutions above are partial");
    }
    Ok(!report.is_partial())
}
