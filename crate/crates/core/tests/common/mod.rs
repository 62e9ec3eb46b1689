#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tarsim::{Corpus, Document, ScoredDoc};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const WORDS: [&str; 24] = [
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliet", "kilo", "lima",
    "mike", "november", "oscar", "papa", "quebec", "romeo", "sierra", "tango", "uniform", "victor", "whiskey", "xray",
];

/// Random documents over a small vocabulary, with occasional one-letter and
/// punctuation noise the tokenizer must drop.
pub fn random_corpus(n: usize, vocab: usize, seed: u64) -> Corpus {
    let mut r = rng(seed);
    let docs = (0..n)
        .map(|i| {
            let len = r.random_range(1..30);
            let words: Vec<String> = (0..len)
                .map(|_| match r.random_range(0..20) {
                    0 => "x".to_string(),
                    1 => "--".to_string(),
                    _ => WORDS[..vocab].choose(&mut r).unwrap().to_string(),
                })
                .collect();
            Document::new(format!("doc{i:04}"), words.join(" "), r.random_bool(0.3))
        })
        .collect();
    Corpus::from_documents(docs).unwrap()
}

pub fn pool(scores: &[f64], labels: &[bool]) -> Vec<ScoredDoc> {
    scores
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (&s, &l))| ScoredDoc::new(format!("p{i:05}"), s, l))
        .collect()
}

/// `ceil(num/den * p)` in integers.
pub fn required_exact(num: usize, den: usize, p: usize) -> usize {
    (num * p).div_ceil(den)
}

/// Highest threshold among the pool scores (or +inf) whose pool positives
/// reach `required`, by scanning every candidate.
pub fn brute_cutoff(pool: &[ScoredDoc], required: usize) -> Option<f64> {
    if required == 0 {
        return Some(f64::INFINITY);
    }
    let mut best: Option<f64> = None;
    for cand in pool.iter().map(|d| d.score) {
        let hits = pool.iter().filter(|d| d.label && d.score >= cand).count();
        if hits >= required && best.is_none_or(|b| cand > b) {
            best = Some(cand);
        }
    }
    best
}

/// Minimum number of pool documents a reviewer reads over every feasible
/// threshold.
pub fn brute_min_docs(pool: &[ScoredDoc], required: usize) -> Option<usize> {
    if required == 0 {
        return Some(0);
    }
    pool.iter()
        .map(|d| d.score)
        .filter(|&t| pool.iter().filter(|d| d.label && d.score >= t).count() >= required)
        .map(|t| pool.iter().filter(|d| d.score >= t).count())
        .min()
}

pub fn random_pool(r: &mut ChaCha8Rng, max_len: usize) -> Vec<ScoredDoc> {
    let n = r.random_range(1..=max_len);
    // Coarse scores so ties are common.
    let scores: Vec<f64> = (0..n).map(|_| (r.random_range(1..50) as f64) / 50.0).collect();
    let labels: Vec<bool> = (0..n).map(|_| r.random_bool(0.4)).collect();
    pool(&scores, &labels)
}
