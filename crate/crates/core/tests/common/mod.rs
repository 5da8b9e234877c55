#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use gencp::{ConstraintSpec, TableLm, TaskSpec};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const VOCAB: [&str; 24] = [
    "cat", "dog", "sun", "red", "blue", "tree", "runs", "sits", "big", "small", "old", "new",
    "sea", "sky", "warm", "cold", "soft", "hard", "math", "beach", "song", "bird", "fish", "moon",
];

/// Builder for prefix-keyed tables with per-prefix probability bookkeeping.
#[derive(Default)]
pub struct Table {
    pub entries: BTreeMap<String, Vec<(String, f64)>>,
}

impl Table {
    pub fn add(&mut self, prefix: &str, word: &str, prob: f64) {
        let row = self.entries.entry(prefix.to_string()).or_default();
        if !row.iter().any(|(w, _)| w == word) {
            row.push((word.to_string(), prob));
        }
    }

    pub fn mass(&self, prefix: &str) -> f64 {
        self.entries
            .get(prefix)
            .map_or(0.0, |r| r.iter().map(|(_, p)| p).sum())
    }

    pub fn build(&self) -> TableLm {
        TableLm::from_probs(self.entries.iter().flat_map(|(prefix, row)| {
            row.iter()
                .map(move |(w, p)| (prefix.clone(), w.clone(), *p))
        }))
        .expect("generated table is valid")
    }
}

fn join(words: &[String]) -> String {
    words.join(" ")
}

/// A random tree-shaped table: every node has 1..=branching word children
/// drawn from [`VOCAB`], sometimes a "." and sometimes a fragment or symbol.
pub fn random_tree(seed: u64, depth: usize, branching: usize) -> TableLm {
    let mut rng = rng(seed);
    let mut table = Table::default();
    let mut stack: Vec<Vec<String>> = vec![vec![]];
    while let Some(prefix) = stack.pop() {
        let n = rng.random_range(1..=branching);
        let words: Vec<&str> = VOCAB.choose_multiple(&mut rng, n).copied().collect();
        let mut children: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        if !prefix.is_empty() && rng.random_bool(0.5) {
            children.push(".".into());
        }
        if rng.random_bool(0.2) {
            children.push(if rng.random_bool(0.5) {
                "##ly".into()
            } else {
                ",".into()
            });
        }
        let weights: Vec<f64> = children
            .iter()
            .map(|_| rng.random_range(1..=20) as f64)
            .collect();
        let total: f64 = weights.iter().sum::<f64>() / 0.95;
        let key = join(&prefix);
        for (c, w) in children.iter().zip(&weights) {
            table.add(&key, c, w / total);
            let is_word = c.chars().all(char::is_alphabetic);
            if is_word && prefix.len() + 1 < depth {
                let mut next = prefix.clone();
                next.push(c.clone());
                stack.push(next);
            }
        }
    }
    table.build()
}

/// A small random task over [`random_tree`] outputs.
pub fn random_task(seed: u64, depth: usize, max_k: usize) -> TaskSpec {
    let mut rng = rng(seed ^ 0x5eed);
    let lo = rng.random_range(1..=depth);
    let hi = rng.random_range(lo..=depth);
    let mut constraints = vec![ConstraintSpec::WordCountRange { lo, hi: Some(hi) }];
    if rng.random_bool(0.4) {
        let c = *['a', 'e', 'o', 's'].choose(&mut rng).unwrap();
        constraints.push(ConstraintSpec::ForbiddenChars {
            chars: BTreeSet::from([c]),
        });
    }
    if rng.random_bool(0.4) {
        constraints.push(ConstraintSpec::keywords(&[*VOCAB
            .choose(&mut rng)
            .unwrap()]));
    }
    if rng.random_bool(0.2) {
        constraints.push(ConstraintSpec::MaxWordLen {
            max: rng.random_range(3..=5),
        });
    }
    if rng.random_bool(0.15) {
        constraints.push(ConstraintSpec::CharCountExact {
            n: rng.random_range(4..=25),
        });
    }
    let mut task =
        TaskSpec::new(format!("random-{seed}"), constraints).with_k(rng.random_range(2..=max_k));
    task.require_period = rng.random_bool(0.8);
    task
}

fn rand_word(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len)
        .map(|_| rng.random_range(b'a'..=b'z') as char)
        .collect()
}

fn rendered_len(words: &[String]) -> usize {
    words.iter().map(|w| w.chars().count()).sum::<usize>() + words.len().saturating_sub(1)
}

/// A sentence (content words, starting with "The") satisfying the named builtin task.
pub fn plant_sentence(task: &str, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut words = vec!["The".to_string()];
    let push_random =
        |words: &mut Vec<String>, n: usize, lo: usize, hi: usize, rng: &mut ChaCha8Rng| {
            for _ in 0..n {
                let len = rng.random_range(lo..=hi);
                words.push(rand_word(rng, len));
            }
        };
    match task {
        "sent-1" => {
            // 82 characters with the period: 81 rendered content characters.
            while 81 - rendered_len(&words) >= 12 {
                push_random(&mut words, 1, 2, 7, rng);
            }
            let last = 81 - rendered_len(&words) - 1;
            words.push(rand_word(rng, last));
        }
        "sent-2" => {
            for i in 2..=10 {
                match i {
                    3 | 7 => words.push("soft".into()),
                    10 => words.push("math".into()),
                    _ => push_random(&mut words, 1, 2, 8, rng),
                }
            }
        }
        "sent-3" => {
            let n = rng.random_range(19..=22);
            push_random(&mut words, n, 2, 6, rng);
        }
        "sent-4" => {
            push_random(&mut words, 6, 2, 8, rng);
            for kw in ["soft", "beach", "math"] {
                let at = rng.random_range(1..=words.len());
                words.insert(at, kw.into());
            }
        }
        "sent-4*" => {
            for kw in ["soft", "beach", "math"] {
                let gap = rng.random_range(3..=4);
                push_random(&mut words, gap, 2, 8, rng);
                words.push(kw.into());
            }
        }
        "demo-60" => {
            // 11 words, 59 rendered characters: 46 letters over 10 words.
            let mut lens = [4usize; 10];
            for _ in 0..6 {
                let i = rng.random_range(0..10);
                lens[i] += 1;
            }
            for len in lens {
                words.push(rand_word(rng, len));
            }
        }
        other => panic!("no planting rule for {other}"),
    }
    words
}

/// A table LM holding one planted solution per builtin task, each path
/// surrounded by distractors that lead nowhere or into short dead ends.
pub fn planted_lm(seed: u64) -> (TableLm, BTreeMap<String, Vec<String>>) {
    let mut rng = rng(seed);
    let mut table = Table::default();
    let mut planted = BTreeMap::new();
    table.add("", "The", 0.5);
    for name in gencp::BUILTIN_TASKS {
        let sentence = loop {
            let s = plant_sentence(name, &mut rng);
            if !table.entries.contains_key(&join(&s[..2])) {
                break s;
            }
        };
        for i in 1..sentence.len() {
            let prefix = join(&sentence[..i]);
            let p = if i == 1 { 0.1 } else { 0.3 };
            table.add(&prefix, &sentence[i], p);
            if i > 1 {
                for _ in 0..3 {
                    let len = rng.random_range(3..=7);
                    let noise = rand_word(&mut rng, len);
                    let taken = table
                        .entries
                        .get(&prefix)
                        .is_some_and(|r| r.iter().any(|(w, _)| *w == noise));
                    if noise == sentence[i] || taken {
                        continue;
                    }
                    table.add(&prefix, &noise, 0.1);
                    let dead_end = format!("{prefix} {noise}");
                    for _ in 0..2 {
                        let len = rng.random_range(2..=5);
                        let w = rand_word(&mut rng, len);
                        table.add(&dead_end, &w, 0.2);
                    }
                }
                table.add(&prefix, "##er", 0.05);
            }
        }
        let full = join(&sentence);
        table.add(&full, ".", 0.5);
        table.add(&full, "then", 0.1);
        planted.insert(name.to_string(), sentence);
    }
    for _ in 0..3 {
        let w = rand_word(&mut rng, 5);
        table.add("The", &w, 0.05);
    }
    assert!(table.mass("The") <= 1.0);
    (table.build(), planted)
}

/// What the stub server does with each request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StubMode {
    Normal,
    ServerError,
    Garbage,
}

pub struct StubServer {
    pub url: String,
    /// JSON bodies of every POST received.
    pub requests: Arc<Mutex<Vec<Value>>>,
}

/// A llama.cpp-like completion server answering from `lm`'s table. Words
/// after a non-empty prompt come back with a leading space; each answer also
/// carries a word-continuation fragment.
pub fn spawn_stub(lm: TableLm, mode: StubMode) -> StubServer {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let requests = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&requests);
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut content_length = 0usize;
            let mut line = String::new();
            loop {
                line.clear();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    break;
                }
                let trimmed = line.trim_end();
                if trimmed.is_empty() {
                    break;
                }
                if let Some((k, v)) = trimmed.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        content_length = v.trim().parse().unwrap_or(0);
                    }
                }
            }
            let mut body = vec![0; content_length];
            if reader.read_exact(&mut body).is_err() {
                continue;
            }
            let request: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
            log.lock().unwrap().push(request.clone());
            let prompt = request["prompt"].as_str().unwrap_or("").to_string();
            let (status, payload) = match mode {
                StubMode::ServerError => (
                    "500 Internal Server Error",
                    "{\"error\":\"boom\"}".to_string(),
                ),
                StubMode::Garbage => ("200 OK", "not json".to_string()),
                StubMode::Normal => {
                    let mut probs: Vec<Value> = lm
                        .candidates(&prompt)
                        .iter()
                        .map(|c| {
                            let token = if prompt.is_empty() || c.text() == "." {
                                c.text().to_string()
                            } else {
                                format!(" {}", c.text())
                            };
                            json!({"token": token, "prob": c.prob()})
                        })
                        .collect();
                    if !prompt.is_empty() {
                        probs.push(json!({"token": "ing", "prob": 0.001}));
                    }
                    let body = json!({"content": "", "completion_probabilities": [{"content": "", "probs": probs}]});
                    ("200 OK", body.to_string())
                }
            };
            let response = format!(
                "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
            let _ = stream.write_all(response.as_bytes());
            let _ = stream.flush();
        }
    });
    StubServer { url, requests }
}

/// Independent re-statement of the builtin tasks' conditions, for checking
/// solver output without going through the library's own checker.
pub fn satisfies_builtin(task: &str, sentence: &str) -> bool {
    let Some(body) = sentence.strip_suffix('.') else {
        return false;
    };
    let words: Vec<&str> = body.split(' ').collect();
    if words.iter().any(|w| w.is_empty()) {
        return false;
    }
    let count = |kw: &str| words.iter().filter(|w| w.eq_ignore_ascii_case(kw)).count();
    let has = |kw: &str| count(kw) > 0;
    match task {
        "sent-1" => sentence.chars().count() == 82,
        "sent-2" => {
            words.len() == 10
                && words[2].eq_ignore_ascii_case("soft")
                && words[6].eq_ignore_ascii_case("soft")
                && words[9].eq_ignore_ascii_case("math")
        }
        "sent-3" => words.len() >= 20 && words.iter().all(|w| w.chars().count() <= 6),
        "sent-4" => has("soft") && has("beach") && has("math"),
        "sent-4*" => {
            let pos: Vec<usize> = words
                .iter()
                .enumerate()
                .filter(|(_, w)| {
                    ["soft", "beach", "math"]
                        .iter()
                        .any(|k| w.eq_ignore_ascii_case(k))
                })
                .map(|(i, _)| i)
                .collect();
            has("soft") && has("beach") && has("math") && pos.windows(2).all(|p| p[1] - p[0] > 3)
        }
        "demo-60" => {
            words[0].eq_ignore_ascii_case("The")
                && (10..=15).contains(&words.len())
                && sentence.chars().count() == 60
        }
        _ => panic!("unknown task {task}"),
    }
}
