//! Tokenization and normalized-frequency bag-of-words vectors.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use crate::corpus::{Corpus, Document};
use crate::error::{Error, Result};

/// Default vocabulary size.
pub const DEFAULT_MAX_FEATURES: usize = 20_000;

/// Lowercased maximal runs of alphanumeric characters, dropping runs of a
/// single character.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            push_token(&mut tokens, &text[s..i]);
        }
    }
    if let Some(s) = start {
        push_token(&mut tokens, &text[s..]);
    }
    tokens
}

fn push_token(tokens: &mut Vec<String>, run: &str) {
    let mut chars = run.chars();
    if chars.next().is_some() && chars.next().is_some() {
        tokens.push(run.to_lowercase());
    }
}

/// Sparse feature vector with strictly increasing positions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Builds a vector from `(position, weight)` pairs.
    ///
    /// Panics if positions are not strictly increasing.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let (indices, values): (Vec<u32>, Vec<f64>) = pairs.into_iter().unzip();
        assert!(
            indices.windows(2).all(|w| w[0] < w[1]),
            "sparse positions must be strictly increasing"
        );
        SparseVector { indices, values }
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().zip(&self.values).map(|(&i, &v)| (i as usize, v))
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Largest position plus one, or zero for the empty vector.
    pub fn min_dim(&self) -> usize {
        self.indices.last().map_or(0, |&i| i as usize + 1)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Dot product with a dense vector. Positions past `dense.len()` are
    /// ignored.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            if let Some(w) = dense.get(i as usize) {
                acc += v * w;
            }
        }
        acc
    }

    /// `dense += scale * self`
    pub fn add_scaled_to(&self, dense: &mut [f64], scale: f64) {
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            dense[i as usize] += scale * v;
        }
    }

    /// Copy scaled to unit L2 norm; the zero vector stays zero.
    pub fn normalized(&self) -> SparseVector {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        SparseVector {
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v / n).collect(),
        }
    }
}

/// Feature space: the `max_features` tokens with the highest document
/// frequency (ties broken lexicographically).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    document_frequency: Vec<u32>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn build(corpus: &Corpus, max_features: usize) -> Result<Self> {
        let tokens: Vec<Vec<String>> = corpus.documents().iter().map(|d| tokenize(&d.text)).collect();
        Self::from_token_lists(&tokens, max_features)
    }

    /// Builds from pre-tokenized documents.
    pub fn from_token_lists(docs: &[Vec<String>], max_features: usize) -> Result<Self> {
        if max_features == 0 {
            return Err(Error::InvalidConfig("max_features must be at least 1".into()));
        }
        let mut df: HashMap<&str, u32> = HashMap::new();
        let mut seen: HashSet<&str> = HashSet::new();
        for doc in docs {
            seen.clear();
            for t in doc {
                if seen.insert(t.as_str()) {
                    *df.entry(t.as_str()).or_insert(0) += 1;
                }
            }
        }
        if df.is_empty() {
            return Err(Error::NoTokens);
        }
        let mut ranked: Vec<(&str, u32)> = df.into_iter().collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_features);

        let terms: Vec<String> = ranked.iter().map(|(t, _)| t.to_string()).collect();
        let document_frequency = ranked.iter().map(|(_, n)| *n).collect();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Ok(Vocabulary {
            terms,
            document_frequency,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.index.get(term).map(|&i| i as usize)
    }

    pub fn document_frequency(&self, term: &str) -> Option<u32> {
        self.position(term).map(|i| self.document_frequency[i])
    }

    pub fn vectorize(&self, doc: &Document) -> SparseVector {
        self.vectorize_tokens(&tokenize(&doc.text))
    }

    /// Term count over total token count; out-of-vocabulary tokens count
    /// toward the denominator only.
    pub fn vectorize_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> SparseVector {
        if tokens.is_empty() {
            return SparseVector::default();
        }
        let mut positions: Vec<u32> = tokens
            .iter()
            .filter_map(|t| self.index.get(t.as_ref()).copied())
            .collect();
        positions.sort_unstable();
        let total = tokens.len() as f64;
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut iter = positions.into_iter().peekable();
        while let Some(p) = iter.next() {
            let mut count = 1u32;
            while iter.peek() == Some(&p) {
                iter.next();
                count += 1;
            }
            indices.push(p);
            values.push(count as f64 / total);
        }
        SparseVector { indices, values }
    }

    /// Debug dump: `rank,term,document_frequency` with 1-based ranks.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "term", "document_frequency"])?;
        for (i, (t, df)) in self.terms.iter().zip(&self.document_frequency).enumerate() {
            w.write_record([(i + 1).to_string(), t.clone(), df.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<vocabulary csv>", e))?;
        Ok(())
    }
}
