//! Trains an n-gram model on a small corpus, lists its next-word predictions
//! and scores a few sentences by perplexity.
//!
//! cargo run --example ngram_perplexity [corpus.txt]

use gencp::{perplexity, LanguageModel, LmParams, NGramLm};

fn main() -> gencp::Result<()> {
    let corpus = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus.txt").to_string());
    let lm = NGramLm::train_file(&corpus, 2, 0.01)?;
    println!("order {} model, {} words", lm.order(), lm.vocab().len());

    let params = LmParams::default().with_k(5);
    for prefix in ["The", "The soft", "on the"] {
        let next: Vec<String> = lm
            .call_llm(prefix, &params)?
            .iter()
            .take(5)
            .map(|c| format!("{} {:.3}", c.text(), c.prob()))
            .collect();
        println!("{prefix:>10} -> {}", next.join(", "));
    }

    for sentence in [
        "The sand was soft .",
        "The beach is a good place .",
        "soft math The was .",
    ] {
        let words: Vec<&str> = sentence.split(' ').collect();
        println!("{:>8.2}  {sentence}", perplexity(&lm, &words)?);
    }
    Ok(())
}
