//! Module outputs checked against independent reference computations.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use rand::seq::IndexedRandom;
use rand::Rng;
use tarsim::active_selection::{estimate_cutoff_from_control, select_mid, select_mid_recall, CutoffContext};
use tarsim::featurize::tokenize;
use tarsim::keyword_index::{keyword_report, InvertedIndex};
use tarsim::model::{loss_and_gradient, sigmoid, train_traced, Example};
use tarsim::synthetic::{generate, SyntheticSpec};
use tarsim::{load_corpus, oracle_cutoff, review_at_recall, Hyperparams, KeywordList, Model, SparseVector, Vocabulary};

use common::*;

#[test]
fn generated_file_label_count() {
    let mut r = rng(11);
    let mut expected = 0;
    let mut file = tempfile::NamedTempFile::new().unwrap();
    for i in 0..200 {
        let label = r.random_bool(0.27);
        expected += label as usize;
        let text = format!("record {i} {}", WORDS.choose(&mut r).unwrap());
        writeln!(
            file,
            "{}",
            serde_json::json!({"id": format!("r{i}"), "text": text, "label": label as u8})
        )
        .unwrap();
    }
    let corpus = load_corpus(file.path()).unwrap();
    assert_eq!(corpus.total(), 200);
    assert_eq!(corpus.positives(), expected);
}

#[test]
fn vector_mass_equals_in_vocabulary_share() {
    let corpus = random_corpus(100, 24, 3);
    let vocab = Vocabulary::build(&corpus, 15).unwrap();
    let kept: BTreeSet<&str> = vocab.terms().iter().map(String::as_str).collect();
    for doc in corpus.documents() {
        // Independent recount: split on anything but ASCII alphanumerics.
        let tokens: Vec<String> = doc
            .text
            .split(|c: char| !c.is_ascii_alphanumeric())
            .filter(|t| t.len() > 1)
            .map(str::to_lowercase)
            .collect();
        let v = vocab.vectorize(doc);
        if tokens.is_empty() {
            assert!(v.is_empty());
            continue;
        }
        let inside = tokens.iter().filter(|t| kept.contains(t.as_str())).count();
        let expected = inside as f64 / tokens.len() as f64;
        assert!(
            (v.sum() - expected).abs() < 1e-12,
            "{}: {} vs {}",
            doc.id,
            v.sum(),
            expected
        );
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in &tokens {
            *counts.entry(t).or_default() += 1;
        }
        for (pos, w) in v.entries() {
            let term = vocab.terms()[pos].as_str();
            assert!((w - counts[term] as f64 / tokens.len() as f64).abs() < 1e-15);
        }
    }
}

#[test]
fn postings_match_linear_scan() {
    let corpus = random_corpus(100, 24, 5);
    let index = InvertedIndex::build(&corpus);
    let token_lists: Vec<Vec<String>> = corpus.documents().iter().map(|d| tokenize(&d.text)).collect();
    let mut r = rng(6);
    for _ in 0..20 {
        let token = *WORDS.choose(&mut r).unwrap();
        let scan: Vec<usize> = (0..token_lists.len())
            .filter(|&i| token_lists[i].iter().any(|t| t == token))
            .collect();
        let got: Vec<usize> = index.postings(token).iter().map(|p| p.doc).collect();
        assert_eq!(got, scan, "{token}");
        for p in index.postings(token) {
            let positions: Vec<u32> = token_lists[p.doc]
                .iter()
                .enumerate()
                .filter(|(_, t)| *t == token)
                .map(|(i, _)| i as u32)
                .collect();
            assert_eq!(p.positions, positions);
        }
    }
}

#[test]
fn phrases_match_brute_force() {
    // A small vocabulary makes two-token phrases hit often.
    let corpus = random_corpus(100, 4, 8);
    let index = InvertedIndex::build(&corpus);
    let token_lists: Vec<Vec<String>> = corpus.documents().iter().map(|d| tokenize(&d.text)).collect();
    let mut r = rng(9);
    let mut nonempty = 0;
    for _ in 0..10 {
        let phrase = [WORDS[r.random_range(0..4)], WORDS[r.random_range(0..4)]];
        let scan: Vec<usize> = (0..token_lists.len())
            .filter(|&i| {
                token_lists[i]
                    .windows(2)
                    .any(|w| w[0] == phrase[0] && w[1] == phrase[1])
            })
            .collect();
        nonempty += !scan.is_empty() as usize;
        assert_eq!(index.keyword_hits(&phrase), scan, "{phrase:?}");
    }
    assert!(nonempty > 0);
}

#[test]
fn fifty_of_two_hundred_is_twenty_five_percent() {
    let docs: Vec<Vec<String>> = (0..200)
        .map(|i| {
            let w = if i % 4 == 0 { "attorney client" } else { "status report" };
            tokenize(w)
        })
        .collect();
    let corpus = tarsim::Corpus::from_documents(
        docs.iter()
            .enumerate()
            .map(|(i, t)| tarsim::Document::new(format!("d{i}"), t.join(" "), i % 8 == 0))
            .collect(),
    )
    .unwrap();
    let index = InvertedIndex::from_token_lists(&docs);
    let keywords = KeywordList::from_lines(["attorney client"]).unwrap();
    let report = keyword_report(&index, &keywords, &corpus);
    assert_eq!(report.union_hits, 50);
    assert_eq!(report.union_positive_hits, 25);
    assert_eq!(format!("{:.2}", report.hit_percentage()), "25.00");
}

fn random_sparse(r: &mut impl Rng, dim: usize) -> SparseVector {
    let mut pairs = Vec::new();
    for i in 0..dim as u32 {
        if r.random_bool(0.4) {
            pairs.push((i, r.random_range(0.01..1.0)));
        }
    }
    SparseVector::from_pairs(pairs)
}

/// Central-difference gradient of `loss_and_gradient`'s loss.
fn numeric_gradient(model: &Model, batch: &[Example<'_>], lambda: f64, h: f64) -> (Vec<f64>, f64) {
    let loss = |m: &Model| loss_and_gradient(m, batch, lambda).0;
    let mut gw = Vec::with_capacity(model.weights.len());
    for j in 0..model.weights.len() {
        let mut plus = model.clone();
        plus.weights[j] += h;
        let mut minus = model.clone();
        minus.weights[j] -= h;
        gw.push((loss(&plus) - loss(&minus)) / (2.0 * h));
    }
    let mut plus = model.clone();
    plus.bias += h;
    let mut minus = model.clone();
    minus.bias -= h;
    (gw, (loss(&plus) - loss(&minus)) / (2.0 * h))
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

#[test]
fn gradients_match_finite_differences() {
    let mut r = rng(21);
    for lambda in [0.0, 1e-4, 1e-2] {
        for _ in 0..50 {
            let dim = r.random_range(1..8);
            let xs: Vec<SparseVector> = (0..r.random_range(1..10)).map(|_| random_sparse(&mut r, dim)).collect();
            let batch: Vec<Example<'_>> = xs.iter().map(|x| (x, r.random_bool(0.5))).collect();
            let mut model = Model::zeros(dim, Hyperparams::default());
            model.weights.iter_mut().for_each(|w| *w = r.random_range(-2.0..2.0));
            model.bias = r.random_range(-1.0..1.0);
            let (_, gw, gb) = loss_and_gradient(&model, &batch, lambda);
            let (nw, nb) = numeric_gradient(&model, &batch, lambda, 1e-5);
            for (a, n) in gw.iter().zip(&nw) {
                assert!(relative_error(*a, *n) < 1e-4, "λ={lambda}: {a} vs {n}");
            }
            assert!(relative_error(gb, nb) < 1e-4, "λ={lambda}: bias {gb} vs {nb}");
        }
    }
}

#[test]
fn scores_match_second_dot_product() {
    let mut r = rng(31);
    let dim = 12;
    let xs: Vec<SparseVector> = (0..20).map(|_| random_sparse(&mut r, dim)).collect();
    let mut model = Model::zeros(dim, Hyperparams::default());
    model.weights.iter_mut().for_each(|w| *w = r.random_range(-3.0..3.0));
    model.bias = 0.3;
    let scored = model
        .score(xs.iter().enumerate().map(|(i, x)| (format!("d{i}").into(), x, false)))
        .unwrap();
    for (s, x) in scored.iter().zip(&xs) {
        // Dense expansion, summed in reverse order.
        let mut dense = vec![0.0; dim];
        for (i, v) in x.entries() {
            dense[i] = v;
        }
        let z: f64 = dense.iter().zip(&model.weights).rev().map(|(a, b)| a * b).sum::<f64>() + model.bias;
        let expected = 1.0 / (1.0 + (-z).exp());
        assert!((s.score - expected).abs() < 1e-12);
        assert!((sigmoid(z) - expected).abs() < 1e-12);
    }
}

#[test]
fn training_is_deterministic_and_loss_non_increasing() {
    let s = generate(&SyntheticSpec {
        n_docs: 400,
        ..Default::default()
    })
    .unwrap();
    let vocab = Vocabulary::build(&s.corpus, 20_000).unwrap();
    let xs: Vec<SparseVector> = s.corpus.documents().iter().map(|d| vocab.vectorize(d)).collect();
    let batch: Vec<Example<'_>> = xs.iter().zip(s.corpus.labels()).collect();
    let (a, losses) = train_traced(&batch, vocab.len(), Hyperparams::default()).unwrap();
    let (b, _) = train_traced(&batch, vocab.len(), Hyperparams::default()).unwrap();
    assert_eq!(a, b);
    for w in losses.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{} then {}", w[0], w[1]);
    }
}

#[test]
fn cutoff_matches_threshold_scan_on_small_pools() {
    let mut r = rng(41);
    for _ in 0..300 {
        let p = random_pool(&mut r, 20);
        let pool_pos = p.iter().filter(|d| d.label).count();
        let train_pos = r.random_range(0..5);
        let total = pool_pos + train_pos;
        let ctx = CutoffContext {
            total_positives: total,
            training_positives: train_pos,
            target_recall: 0.75,
        };
        let required = required_exact(3, 4, total).saturating_sub(train_pos);
        match brute_cutoff(&p, required) {
            Some(c) => assert_eq!(oracle_cutoff(&p, &ctx).unwrap(), c),
            None => assert!(oracle_cutoff(&p, &ctx).is_err()),
        }
    }
}

#[test]
fn mid_selection_matches_full_sort() {
    let mut r = rng(51);
    let scores: Vec<f64> = (0..200).map(|_| r.random::<f64>()).collect();
    let labels = vec![false; 200];
    let p = pool(&scores, &labels);
    let mut order: Vec<usize> = (0..200).collect();
    order.sort_by(|&a, &b| {
        let da = (scores[a] - 0.5).abs();
        let db = (scores[b] - 0.5).abs();
        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
    });
    let expected: Vec<String> = order[..50].iter().map(|&i| format!("p{i:05}")).collect();
    let got: Vec<String> = select_mid(&p, 50, 0.5).unwrap().iter().map(|d| d.to_string()).collect();
    assert_eq!(got, expected);
}

#[test]
fn mid_recall_matches_distance_sort_around_brute_cutoff() {
    let mut r = rng(61);
    for _ in 0..20 {
        let scores: Vec<f64> = (0..200).map(|_| (r.random_range(0..1000) as f64) / 1000.0).collect();
        let labels: Vec<bool> = (0..200).map(|_| r.random_bool(0.3)).collect();
        let p = pool(&scores, &labels);
        let pool_pos = labels.iter().filter(|&&l| l).count();
        let ctx = CutoffContext {
            total_positives: pool_pos + 10,
            training_positives: 10,
            target_recall: 0.75,
        };
        let cutoff = brute_cutoff(&p, required_exact(3, 4, pool_pos + 10) - 10).unwrap();
        let mut order: Vec<usize> = (0..200).collect();
        order.sort_by(|&a, &b| {
            (scores[a] - cutoff)
                .abs()
                .partial_cmp(&(scores[b] - cutoff).abs())
                .unwrap()
                .then(a.cmp(&b))
        });
        let expected: Vec<String> = order[..40].iter().map(|&i| format!("p{i:05}")).collect();
        let got: Vec<String> = select_mid_recall(&p, &ctx, 40)
            .unwrap()
            .iter()
            .map(|d| d.to_string())
            .collect();
        assert_eq!(got, expected);
    }
}

#[test]
fn control_cutoff_matches_scan() {
    let mut r = rng(71);
    let scores: Vec<f64> = (0..500).map(|_| r.random::<f64>()).collect();
    let labels: Vec<bool> = (0..500).map(|_| r.random_bool(0.2)).collect();
    let control = pool(&scores, &labels);
    let positives = labels.iter().filter(|&&l| l).count();
    let expected = brute_cutoff(&control, required_exact(3, 4, positives)).unwrap();
    assert_eq!(estimate_cutoff_from_control(&control, 0.75).unwrap(), expected);
}

#[test]
fn review_matches_minimum_over_thresholds() {
    let mut r = rng(81);
    for _ in 0..200 {
        let p = random_pool(&mut r, 50);
        let pool_pos = p.iter().filter(|d| d.label).count();
        let train_pos = r.random_range(0..4);
        let train_size = train_pos + r.random_range(0..10);
        let total_pos = pool_pos + train_pos;
        let n = train_size + p.len() + r.random_range(0..20);
        let required = required_exact(3, 4, total_pos).saturating_sub(train_pos);
        let rec = review_at_recall(0, &p, train_size, train_pos, n, total_pos, 0.75).unwrap();
        let docs = brute_min_docs(&p, required).unwrap();
        assert_eq!(rec.docs_at_or_above_cutoff, docs);
        assert_eq!(rec.review_fraction(), (train_size + docs) as f64 / n as f64);
        if rec.cutoff.is_finite() {
            assert!(rec.recall_achieved() >= 0.75);
        }
    }
}
