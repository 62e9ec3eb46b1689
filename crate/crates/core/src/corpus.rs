//! Labeled corpora, keyword lists and corpus statistics.
//!
//! A corpus file is line-delimited JSON, one document per line:
//!
//! ```text
//! {"id": "d1", "text": "Please review the attached draft.", "label": 1}
//! ```
//!
//! Every document carries its relevance label because the simulator needs a
//! complete oracle to reveal labels as documents get "reviewed".

use std::borrow::Borrow;
use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::ops::Deref;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::tokenize;

/// Cheaply clonable document identifier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DocId(Arc<str>);

impl DocId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Deref for DocId {
    type Target = str;
    fn deref(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for DocId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for DocId {
    fn from(s: &str) -> Self {
        DocId(Arc::from(s))
    }
}

impl From<String> for DocId {
    fn from(s: String) -> Self {
        DocId(Arc::from(s))
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&*self.0, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: DocId,
    pub text: String,
    /// `true` for positive (responsive or privileged) documents.
    pub label: bool,
}

impl Document {
    pub fn new(id: impl Into<DocId>, text: impl Into<String>, label: bool) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            label,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Record<'a> {
    id: &'a str,
    text: &'a str,
    label: u8,
}

#[derive(Deserialize)]
struct OwnedRecord {
    id: String,
    text: String,
    label: i64,
}

/// An ordered, immutable collection of labeled documents with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    positives: usize,
}

impl Corpus {
    /// Validates ids (nonempty, unique) and counts positives.
    pub fn from_documents(documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut seen = HashSet::with_capacity(documents.len());
        for doc in &documents {
            if doc.id.is_empty() {
                return Err(Error::MalformedRecord {
                    line: 0,
                    reason: "empty document id".into(),
                });
            }
            if !seen.insert(doc.id.clone()) {
                return Err(Error::DuplicateId(doc.id.to_string()));
            }
        }
        let positives = documents.iter().filter(|d| d.label).count();
        Ok(Corpus { documents, positives })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn total(&self) -> usize {
        self.documents.len()
    }

    pub fn positives(&self) -> usize {
        self.positives
    }

    pub fn labels(&self) -> impl Iterator<Item = bool> + '_ {
        self.documents.iter().map(|d| d.label)
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats::new(self.total(), self.positives)
    }

    /// Writes the corpus in the line-delimited input format.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for doc in &self.documents {
            let rec = Record {
                id: &doc.id,
                text: &doc.text,
                label: doc.label as u8,
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n").map_err(|e| Error::io("<writer>", e))?;
        }
        Ok(())
    }

    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_jsonl(&mut out)?;
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Loads a line-delimited JSON corpus. Blank lines are skipped; line numbers
/// in errors are 1-based.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file))
}

pub fn read_corpus<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut documents = Vec::new();
    let mut seen: HashSet<DocId> = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::MalformedRecord {
            line: lineno,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: OwnedRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: lineno,
            reason: e.to_string(),
        })?;
        let label = match rec.label {
            0 => false,
            1 => true,
            other => {
                return Err(Error::MalformedRecord {
                    line: lineno,
                    reason: format!("label must be 0 or 1, got {other}"),
                })
            }
        };
        if rec.id.is_empty() {
            return Err(Error::MalformedRecord {
                line: lineno,
                reason: "empty document id".into(),
            });
        }
        let id = DocId::from(rec.id);
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id.to_string()));
        }
        documents.push(Document {
            id,
            text: rec.text,
            label,
        });
    }
    Corpus::from_documents(documents)
}

/// Keyword phrases, each a nonempty token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordList {
    phrases: Vec<Vec<String>>,
}

impl KeywordList {
    /// Tokenizes each line, dropping comments (`#`), blanks, lines that
    /// tokenize to nothing and duplicates (first occurrence wins).
    pub fn from_lines<I, S>(lines: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut phrases: Vec<Vec<String>> = Vec::new();
        let mut seen = HashSet::new();
        for line in lines {
            let line = line.as_ref().trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens = tokenize(line);
            if tokens.is_empty() {
                continue;
            }
            if seen.insert(tokens.clone()) {
                phrases.push(tokens);
            }
        }
        if phrases.is_empty() {
            return Err(Error::EmptyKeywordList);
        }
        Ok(KeywordList { phrases })
    }

    pub fn phrases(&self) -> &[Vec<String>] {
        &self.phrases
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }
}

pub fn load_keywords(path: impl AsRef<Path>) -> Result<KeywordList> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    KeywordList::from_lines(text.lines())
}

/// Population counts in the shape of a data-set statistics table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub total: usize,
    pub positives: usize,
    pub negatives: usize,
}

impl CorpusStats {
    pub fn new(total: usize, positives: usize) -> Self {
        assert!(positives <= total, "positives exceed total");
        CorpusStats {
            total,
            positives,
            negatives: total - positives,
        }
    }

    /// Positive rate as a percentage, unrounded.
    pub fn richness(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.positives as f64 / self.total as f64
        }
    }

    /// Richness formatted for display, e.g. `"15.14%"`.
    pub fn richness_display(&self) -> String {
        format!("{:.2}%", self.richness())
    }
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    corpus.stats()
}
