//! Synthetic labeled corpora for tests, demos and benchmarks.
//!
//! Documents mix a Zipf-distributed background vocabulary, one of several
//! topics (independent of the label) and a subject passage of varying
//! length. Positives draw subject words from one of several issue facets,
//! negatives from unrelated facets. Some negatives mix in issue vocabulary
//! and a small share of labels is flipped, so the classification problem has
//! a real boundary region.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{Corpus, Document, KeywordList};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_docs: usize,
    /// Fraction of positive documents.
    pub richness: f64,
    pub n_topics: usize,
    pub words_per_topic: usize,
    pub background_vocab: usize,
    /// Relative frequency of each issue facet among positives.
    pub facet_weights: Vec<f64>,
    pub words_per_facet: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Share of tokens drawn from the document's topic.
    pub topic_share: f64,
    /// Range of the subject share of a document's tokens.
    pub subject_share: (f64, f64),
    pub negative_facets: usize,
    /// Fraction of negatives whose subject passage mixes in issue words.
    pub hard_negative_rate: f64,
    /// Share of issue words in a hard negative's subject passage.
    pub hard_negative_mix: f64,
    /// Fraction of labels flipped after generation.
    pub label_noise: f64,
    pub n_keywords: usize,
    /// Richness of keyword-hit documents as a multiple of corpus richness.
    pub keyword_enrichment: f64,
    /// Probability that a positive document contains a keyword phrase.
    pub keyword_rate_positive: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_docs: 2_000,
            richness: 0.15,
            n_topics: 24,
            words_per_topic: 60,
            background_vocab: 4_000,
            facet_weights: vec![0.35, 0.25, 0.18, 0.12, 0.10],
            words_per_facet: 10,
            min_len: 50,
            max_len: 200,
            topic_share: 0.3,
            subject_share: (0.05, 0.2),
            negative_facets: 20,
            hard_negative_rate: 0.2,
            hard_negative_mix: 0.3,
            label_noise: 0.02,
            n_keywords: 12,
            keyword_enrichment: 3.0,
            keyword_rate_positive: 0.6,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let frac = |x: f64| (0.0..=1.0).contains(&x);
        let ok = self.n_docs > 0
            && self.richness > 0.0
            && self.richness < 1.0
            && self.n_topics > 0
            && self.words_per_topic > 0
            && self.background_vocab > 0
            && !self.facet_weights.is_empty()
            && self.facet_weights.iter().all(|w| *w >= 0.0)
            && self.facet_weights.iter().sum::<f64>() > 0.0
            && self.words_per_facet > 0
            && self.min_len >= 1
            && self.min_len <= self.max_len
            && frac(self.topic_share)
            && frac(self.subject_share.0)
            && self.subject_share.0 <= self.subject_share.1
            && frac(self.subject_share.1)
            && self.topic_share + self.subject_share.1 <= 1.0
            && self.negative_facets > 0
            && frac(self.hard_negative_rate)
            && frac(self.hard_negative_mix)
            && frac(self.label_noise)
            && frac(self.keyword_rate_positive)
            && self.keyword_enrichment >= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("invalid synthetic corpus specification".into()))
        }
    }

    /// Probability that a negative contains a keyword phrase, chosen so that
    /// keyword hits have `keyword_enrichment` times the corpus richness.
    pub fn keyword_rate_negative(&self) -> f64 {
        let r = self.richness;
        let h = (self.keyword_enrichment * r).min(0.95);
        if h <= r {
            return self.keyword_rate_positive;
        }
        (r * self.keyword_rate_positive * (1.0 - h) / (h * (1.0 - r))).min(1.0)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub keywords: KeywordList,
}

fn background_word(i: usize) -> String {
    format!("bg{i}")
}

fn topic_word(t: usize, j: usize) -> String {
    format!("tp{t}w{j}")
}

fn facet_word(f: usize, j: usize) -> String {
    format!("is{f}w{j}")
}

fn negative_facet_word(f: usize, j: usize) -> String {
    format!("ot{f}w{j}")
}

fn keyword_phrase(k: usize) -> Vec<String> {
    if k.is_multiple_of(2) {
        vec![format!("kw{k}")]
    } else {
        vec![format!("kw{k}a"), format!("kw{k}b")]
    }
}

fn strength(rng: &mut SimRng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = rng_from_seed(derive_seed(spec.seed, "synthetic", 0));

    let zipf: Vec<f64> = (1..=spec.background_vocab)
        .map(|r| 1.0 / (r as f64).powf(1.07))
        .collect();
    let background = WeightedIndex::new(&zipf).expect("positive weights");
    let facets = WeightedIndex::new(&spec.facet_weights).expect("validated weights");

    let n_pos = ((spec.richness * spec.n_docs as f64).round() as usize).clamp(1, spec.n_docs.saturating_sub(1).max(1));
    let mut labels = vec![false; spec.n_docs];
    labels[..n_pos].iter_mut().for_each(|l| *l = true);
    labels.shuffle(&mut rng);

    let kw_neg = spec.keyword_rate_negative();
    let mut docs = Vec::with_capacity(spec.n_docs);
    for (i, &positive) in labels.iter().enumerate() {
        let len = rng.random_range(spec.min_len..=spec.max_len);
        let topic = rng.random_range(0..spec.n_topics);
        let subject = strength(&mut rng, spec.subject_share);
        let facet = facets.sample(&mut rng);
        let issue_mix = if positive {
            1.0
        } else if rng.random_bool(spec.hard_negative_rate) {
            spec.hard_negative_mix
        } else {
            0.0
        };
        let other = rng.random_range(0..spec.negative_facets);
        let mut tokens: Vec<String> = Vec::with_capacity(len + 2);
        for _ in 0..len {
            let u: f64 = rng.random();
            let word = if u < subject {
                let j = rng.random_range(0..spec.words_per_facet);
                if rng.random_bool(issue_mix) {
                    facet_word(facet, j)
                } else {
                    negative_facet_word(other, j)
                }
            } else if u < subject + spec.topic_share {
                topic_word(topic, rng.random_range(0..spec.words_per_topic))
            } else {
                background_word(background.sample(&mut rng))
            };
            tokens.push(word);
        }
        let kw_rate = if positive { spec.keyword_rate_positive } else { kw_neg };
        if spec.n_keywords > 0 && rng.random_bool(kw_rate) {
            let phrase = keyword_phrase(rng.random_range(0..spec.n_keywords));
            let at = rng.random_range(0..=tokens.len());
            tokens.splice(at..at, phrase);
        }
        let label = if rng.random_bool(spec.label_noise) {
            !positive
        } else {
            positive
        };
        docs.push(Document::new(format!("doc{i:06}"), tokens.join(" "), label));
    }
    let corpus = Corpus::from_documents(docs)?;
    let keywords = KeywordList::from_lines((0..spec.n_keywords.max(1)).map(|k| keyword_phrase(k).join(" ")))?;
    Ok(SyntheticCorpus { corpus, keywords })
}
