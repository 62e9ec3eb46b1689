//! Seed-set selection: random, keyword-stratified and cluster-stratified.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::rng::{sample_without_replacement, SimRng};

pub const DEFAULT_SEED_SIZE: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SeedMethod {
    #[serde(rename = "random")]
    Random,
    /// Equal quota per keyword.
    #[serde(rename = "keyword_method1")]
    KeywordEqual,
    /// Quota proportional to keyword hit count.
    #[serde(rename = "keyword_method2")]
    KeywordWeighted,
    /// Equal quota per cluster leaf.
    #[serde(rename = "cluster_method1")]
    ClusterEqual,
    /// Quota proportional to leaf size.
    #[serde(rename = "cluster_method2")]
    ClusterWeighted,
}

impl SeedMethod {
    pub const ALL: [SeedMethod; 5] = [
        SeedMethod::Random,
        SeedMethod::KeywordEqual,
        SeedMethod::KeywordWeighted,
        SeedMethod::ClusterEqual,
        SeedMethod::ClusterWeighted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SeedMethod::Random => "random",
            SeedMethod::KeywordEqual => "keyword_method1",
            SeedMethod::KeywordWeighted => "keyword_method2",
            SeedMethod::ClusterEqual => "cluster_method1",
            SeedMethod::ClusterWeighted => "cluster_method2",
        }
    }

    pub fn mode(self) -> Option<StratifyMode> {
        match self {
            SeedMethod::Random => None,
            SeedMethod::KeywordEqual | SeedMethod::ClusterEqual => Some(StratifyMode::Equal),
            SeedMethod::KeywordWeighted | SeedMethod::ClusterWeighted => Some(StratifyMode::Weighted),
        }
    }

    pub fn uses_keywords(self) -> bool {
        matches!(self, SeedMethod::KeywordEqual | SeedMethod::KeywordWeighted)
    }

    pub fn uses_clusters(self) -> bool {
        matches!(self, SeedMethod::ClusterEqual | SeedMethod::ClusterWeighted)
    }
}

impl fmt::Display for SeedMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SeedMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SeedMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown seed method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StratifyMode {
    Equal,
    Weighted,
}

/// Where a seed document came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Random,
    Stratum(usize),
    /// Drawn uniformly after every stratum ran dry.
    Backfill,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSet {
    /// Document positions in draw order.
    pub docs: Vec<usize>,
    pub origins: Vec<Origin>,
    /// Requested size exceeded the corpus; the whole corpus was returned.
    pub size_exceeded: bool,
    /// Number of documents drawn from outside every stratum.
    pub backfilled: usize,
}

impl SeedSet {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn positives(&self, corpus: &Corpus) -> usize {
        let docs = corpus.documents();
        self.docs.iter().filter(|&&d| docs[d].label).count()
    }

    /// Positive fraction of the seed.
    pub fn richness(&self, corpus: &Corpus) -> f64 {
        if self.docs.is_empty() {
            0.0
        } else {
            self.positives(corpus) as f64 / self.docs.len() as f64
        }
    }

    /// Audit manifest `doc_id,stratum,label`. `stratum_names[i]` labels
    /// stratum `i`.
    pub fn write_manifest_csv<W: Write>(&self, corpus: &Corpus, stratum_names: &[String], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["doc_id", "stratum", "label"])?;
        for (&d, origin) in self.docs.iter().zip(&self.origins) {
            let doc = &corpus.documents()[d];
            let stratum = match origin {
                Origin::Random => "random".to_string(),
                Origin::Backfill => "backfill".to_string(),
                Origin::Stratum(i) => stratum_names.get(*i).cloned().unwrap_or_else(|| i.to_string()),
            };
            w.write_record([doc.id.as_str(), &stratum, if doc.label { "1" } else { "0" }])?;
        }
        w.flush().map_err(|e| Error::io("<seed manifest>", e))?;
        Ok(())
    }
}

/// Uniform sample without replacement from `0..n_docs`.
pub fn seed_random(n_docs: usize, size: usize, rng: &mut SimRng) -> Result<SeedSet> {
    if size == 0 {
        return Err(Error::InvalidConfig("seed size must be at least 1".into()));
    }
    let pool: Vec<usize> = (0..n_docs).collect();
    let docs = sample_without_replacement(&pool, size, rng);
    Ok(SeedSet {
        origins: vec![Origin::Random; docs.len()],
        docs,
        size_exceeded: size > n_docs,
        backfilled: 0,
    })
}

/// Largest-remainder apportionment of `total` over `weights`; remainder ties
/// go to the earlier entry. Sums exactly to `total` when any weight is
/// positive.
pub fn apportion(weights: &[u64], total: usize) -> Vec<usize> {
    let sum: u128 = weights.iter().map(|&w| w as u128).sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let total128 = total as u128;
    let mut quotas: Vec<usize> = Vec::with_capacity(weights.len());
    let mut remainders: Vec<(u128, usize)> = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let num = total128 * w as u128;
        quotas.push((num / sum) as usize);
        remainders.push((num % sum, i));
    }
    let assigned: usize = quotas.iter().sum();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take(total - assigned) {
        quotas[i] += 1;
    }
    quotas
}

/// Stratified sampling over possibly overlapping strata.
///
/// Quotas are apportioned over nonempty strata (equally, or by stratum
/// size). Documents already drawn are unavailable to later strata. Quota a
/// stratum cannot fill is re-apportioned over strata that still have
/// documents; if all run dry, the rest is backfilled uniformly from documents
/// outside every stratum.
fn stratified(
    strata: &[Vec<usize>],
    n_docs: usize,
    size: usize,
    mode: StratifyMode,
    rng: &mut SimRng,
) -> Result<SeedSet> {
    if size == 0 {
        return Err(Error::InvalidConfig("seed size must be at least 1".into()));
    }
    let mut candidates: Vec<usize> = (0..strata.len()).filter(|&i| !strata[i].is_empty()).collect();
    if candidates.is_empty() {
        return Err(Error::NoKeywordHits);
    }
    let weight = |i: usize| match mode {
        StratifyMode::Equal => 1u64,
        StratifyMode::Weighted => strata[i].len() as u64,
    };

    let mut selected = vec![false; n_docs];
    let mut docs = Vec::with_capacity(size.min(n_docs));
    let mut origins = Vec::with_capacity(size.min(n_docs));
    let mut remaining = size.min(n_docs);

    while remaining > 0 && !candidates.is_empty() {
        let weights: Vec<u64> = candidates.iter().map(|&i| weight(i)).collect();
        let quotas = apportion(&weights, remaining);
        let mut exhausted = Vec::new();
        for (&s, &q) in candidates.iter().zip(&quotas) {
            if q == 0 {
                continue;
            }
            let available: Vec<usize> = strata[s].iter().copied().filter(|&d| !selected[d]).collect();
            let drawn = sample_without_replacement(&available, q, rng);
            for &d in &drawn {
                selected[d] = true;
                docs.push(d);
                origins.push(Origin::Stratum(s));
            }
            remaining -= drawn.len();
            if drawn.len() == available.len() {
                exhausted.push(s);
            }
        }
        candidates.retain(|s| !exhausted.contains(s));
    }

    let mut backfilled = 0;
    if remaining > 0 {
        let pool: Vec<usize> = (0..n_docs).filter(|&d| !selected[d]).collect();
        let drawn = sample_without_replacement(&pool, remaining, rng);
        backfilled = drawn.len();
        for d in drawn {
            docs.push(d);
            origins.push(Origin::Backfill);
        }
    }
    Ok(SeedSet {
        docs,
        origins,
        size_exceeded: size > n_docs,
        backfilled,
    })
}

/// Keyword-stratified seed. `hit_sets[i]` holds the document positions hit
/// by keyword `i`; overlapping hits are drawn at most once.
pub fn seed_keyword_stratified(
    hit_sets: &[Vec<usize>],
    n_docs: usize,
    size: usize,
    mode: StratifyMode,
    rng: &mut SimRng,
) -> Result<SeedSet> {
    if hit_sets.iter().flatten().any(|&d| d >= n_docs) {
        return Err(Error::InvalidConfig("keyword hit outside the corpus".into()));
    }
    stratified(hit_sets, n_docs, size, mode, rng)
}

/// Cluster-stratified seed. `leaves` must partition `0..n_docs`.
pub fn seed_cluster_stratified(
    leaves: &[Vec<usize>],
    n_docs: usize,
    size: usize,
    mode: StratifyMode,
    rng: &mut SimRng,
) -> Result<SeedSet> {
    let mut seen = vec![false; n_docs];
    for &d in leaves.iter().flatten() {
        if d >= n_docs || std::mem::replace(&mut seen[d], true) {
            return Err(Error::InvalidConfig(
                "cluster leaves do not partition the corpus".into(),
            ));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidConfig("cluster leaves do not cover the corpus".into()));
    }
    stratified(leaves, n_docs, size, mode, rng).map_err(|e| match e {
        Error::NoKeywordHits => Error::EmptyCorpus,
        e => e,
    })
}
