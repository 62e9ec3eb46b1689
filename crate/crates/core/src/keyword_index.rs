//! Positional inverted index for keyword phrase hits.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use serde::Serialize;

use crate::corpus::{Corpus, KeywordList};
use crate::error::{Error, Result};
use crate::featurize::tokenize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Posting {
    /// Document position in the corpus.
    pub doc: usize,
    /// Token offsets, ascending.
    pub positions: Vec<u32>,
}

/// Token to postings, ordered by document position.
#[derive(Debug, Clone, Default)]
pub struct InvertedIndex {
    postings: HashMap<String, Vec<Posting>>,
    num_docs: usize,
}

impl InvertedIndex {
    pub fn build(corpus: &Corpus) -> Self {
        let tokens: Vec<Vec<String>> = corpus.documents().iter().map(|d| tokenize(&d.text)).collect();
        Self::from_token_lists(&tokens)
    }

    pub fn from_token_lists(docs: &[Vec<String>]) -> Self {
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        for (doc, tokens) in docs.iter().enumerate() {
            for (pos, t) in tokens.iter().enumerate() {
                let list = postings.entry(t.clone()).or_default();
                match list.last_mut() {
                    Some(p) if p.doc == doc => p.positions.push(pos as u32),
                    _ => list.push(Posting {
                        doc,
                        positions: vec![pos as u32],
                    }),
                }
            }
        }
        InvertedIndex {
            postings,
            num_docs: docs.len(),
        }
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn num_terms(&self) -> usize {
        self.postings.len()
    }

    pub fn postings(&self, token: &str) -> &[Posting] {
        self.postings.get(token).map_or(&[], Vec::as_slice)
    }

    /// Sorted positions of documents containing `phrase` as a contiguous
    /// token sequence.
    pub fn keyword_hits<S: AsRef<str>>(&self, phrase: &[S]) -> Vec<usize> {
        assert!(!phrase.is_empty(), "phrase must be nonempty");
        let lists: Vec<&[Posting]> = phrase.iter().map(|t| self.postings(t.as_ref())).collect();
        if lists.iter().any(|l| l.is_empty()) {
            return Vec::new();
        }
        if lists.len() == 1 {
            return lists[0].iter().map(|p| p.doc).collect();
        }
        let mut cursors = vec![0usize; lists.len()];
        let mut hits = Vec::new();
        'outer: for head in lists[0] {
            let mut rest = Vec::with_capacity(lists.len() - 1);
            for (k, list) in lists.iter().enumerate().skip(1) {
                let c = &mut cursors[k];
                while *c < list.len() && list[*c].doc < head.doc {
                    *c += 1;
                }
                if *c == list.len() {
                    break 'outer;
                }
                if list[*c].doc != head.doc {
                    continue 'outer;
                }
                rest.push(&list[*c].positions);
            }
            let found = head.positions.iter().any(|&p| {
                rest.iter()
                    .enumerate()
                    .all(|(k, pos)| pos.binary_search(&(p + k as u32 + 1)).is_ok())
            });
            if found {
                hits.push(head.doc);
            }
        }
        hits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeywordHits {
    pub keyword: String,
    pub hits: usize,
    pub positive_hits: usize,
}

/// Keyword statistics in the shape of a keyword-hit table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeywordHitReport {
    pub per_keyword: Vec<KeywordHits>,
    pub total_documents: usize,
    pub union_hits: usize,
    pub union_positive_hits: usize,
}

impl KeywordHitReport {
    /// Percentage of the corpus hit by at least one keyword.
    pub fn hit_percentage(&self) -> f64 {
        100.0 * self.union_hits as f64 / self.total_documents as f64
    }

    /// Summary row: `total_documents,keywords,documents_hit,positive_documents_hit,keyword_hit_percentage`.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "total_documents",
            "keywords",
            "documents_hit",
            "positive_documents_hit",
            "keyword_hit_percentage",
        ])?;
        w.write_record([
            self.total_documents.to_string(),
            self.per_keyword.len().to_string(),
            self.union_hits.to_string(),
            self.union_positive_hits.to_string(),
            format!("{:.2}", self.hit_percentage()),
        ])?;
        w.flush().map_err(|e| Error::io("<keyword csv>", e))?;
        Ok(())
    }

    /// One row per keyword: `keyword,documents_hit,positive_documents_hit`.
    pub fn write_keywords_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["keyword", "documents_hit", "positive_documents_hit"])?;
        for k in &self.per_keyword {
            w.write_record([k.keyword.clone(), k.hits.to_string(), k.positive_hits.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<keyword csv>", e))?;
        Ok(())
    }
}

/// Hit sets for every keyword, in keyword order.
pub fn keyword_hit_sets(index: &InvertedIndex, keywords: &KeywordList) -> Vec<Vec<usize>> {
    keywords.phrases().iter().map(|p| index.keyword_hits(p)).collect()
}

pub fn keyword_report(index: &InvertedIndex, keywords: &KeywordList, corpus: &Corpus) -> KeywordHitReport {
    let labels: Vec<bool> = corpus.labels().collect();
    let mut union = BTreeSet::new();
    let per_keyword = keywords
        .phrases()
        .iter()
        .map(|phrase| {
            let hits = index.keyword_hits(phrase);
            let positive_hits = hits.iter().filter(|&&d| labels[d]).count();
            union.extend(hits.iter().copied());
            KeywordHits {
                keyword: phrase.join(" "),
                hits: hits.len(),
                positive_hits,
            }
        })
        .collect();
    KeywordHitReport {
        per_keyword,
        total_documents: corpus.total(),
        union_positive_hits: union.iter().filter(|&&d| labels[d]).count(),
        union_hits: union.len(),
    }
}
