//! The simulation loop: seed, train, score the unreviewed pool, measure,
//! select the next batch, reveal its labels, retrain.

pub mod config;
pub mod grid;
pub mod report;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::active_selection::CutoffContext;
use crate::cluster::{build_cluster_tree, ClusterParams, ClusterTree};
use crate::corpus::{Corpus, DocId, KeywordList};
use crate::error::{Error, Result};
use crate::featurize::{tokenize, SparseVector, Vocabulary};
use crate::keyword_index::{keyword_hit_sets, keyword_report, InvertedIndex, KeywordHitReport};
use crate::metrics::{review_at_recall, RoundRecord};
use crate::model::train;
use crate::rng::{derive_seed, rng_from_seed, sample_without_replacement};
use crate::seeding::{seed_cluster_stratified, seed_keyword_stratified, seed_random, Origin, SeedMethod, SeedSet};

pub use config::{ExperimentConfig, GridConfig, RunParams};
pub use grid::{grid_cells, run_grid, GridCell, GridOutcome};
pub use report::{analyze_dir, emit_reports};

/// Documents added per step when the seed holds a single class.
pub const DEGENERATE_TOPUP: usize = 50;

/// Everything derived from the corpus alone, shared read-only by all
/// experiments on it.
#[derive(Debug)]
pub struct PreparedCorpus {
    pub corpus: Corpus,
    pub vocabulary: Vocabulary,
    pub vectors: Vec<SparseVector>,
    pub keywords: Option<KeywordList>,
    pub keyword_hits: Option<Vec<Vec<usize>>>,
    pub keyword_report: Option<KeywordHitReport>,
    pub cluster_tree: Option<ClusterTree>,
    id_index: HashMap<DocId, usize>,
}

/// What to build in [`PreparedCorpus::prepare`].
#[derive(Debug, Clone)]
pub struct PrepareOptions {
    pub max_features: usize,
    /// Build the cluster tree with these parameters and seed.
    pub cluster: Option<(ClusterParams, u64)>,
}

impl PreparedCorpus {
    pub fn prepare(corpus: Corpus, keywords: Option<KeywordList>, options: &PrepareOptions) -> Result<Self> {
        let tokens: Vec<Vec<String>> = corpus.documents().par_iter().map(|d| tokenize(&d.text)).collect();
        let vocabulary = Vocabulary::from_token_lists(&tokens, options.max_features)?;
        let vectors: Vec<SparseVector> = tokens.par_iter().map(|t| vocabulary.vectorize_tokens(t)).collect();

        let (keyword_hits, keyword_report) = match &keywords {
            Some(kw) => {
                let index = InvertedIndex::from_token_lists(&tokens);
                (
                    Some(keyword_hit_sets(&index, kw)),
                    Some(keyword_report(&index, kw, &corpus)),
                )
            }
            None => (None, None),
        };
        drop(tokens);

        let cluster_tree = match options.cluster {
            Some((params, seed)) => {
                let ids: Vec<DocId> = corpus.documents().iter().map(|d| d.id.clone()).collect();
                Some(build_cluster_tree(&vectors, &ids, params, seed)?)
            }
            None => None,
        };
        let id_index = corpus
            .documents()
            .iter()
            .enumerate()
            .map(|(i, d)| (d.id.clone(), i))
            .collect();
        Ok(PreparedCorpus {
            corpus,
            vocabulary,
            vectors,
            keywords,
            keyword_hits,
            keyword_report,
            cluster_tree,
            id_index,
        })
    }

    /// Convenience: loads the corpus (and keywords, if configured) and
    /// builds what the given seed methods need.
    pub fn for_params(params: &RunParams, methods: &[SeedMethod]) -> Result<Self> {
        let corpus = crate::corpus::load_corpus(&params.corpus_path)?;
        let needs_keywords = methods.iter().any(|m| m.uses_keywords());
        let keywords = match &params.keywords_path {
            Some(p) => Some(crate::corpus::load_keywords(p)?),
            None if needs_keywords => {
                return Err(Error::ConfigInconsistent(
                    "keyword seeding requires keywords_path".into(),
                ))
            }
            None => None,
        };
        let cluster = methods
            .iter()
            .any(|m| m.uses_clusters())
            .then(|| (params.cluster_params(), cluster_seed(params.rng_seed)));
        Self::prepare(
            corpus,
            keywords,
            &PrepareOptions {
                max_features: params.max_features,
                cluster,
            },
        )
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    /// Display name of each seeding stratum for the given method.
    pub fn stratum_names(&self, method: SeedMethod) -> Vec<String> {
        if method.uses_keywords() {
            self.keywords
                .as_ref()
                .map(|k| k.phrases().iter().map(|p| p.join(" ")).collect())
                .unwrap_or_default()
        } else if method.uses_clusters() {
            self.cluster_tree
                .as_ref()
                .map(|t| t.leaves().iter().map(|l| l.id.clone()).collect())
                .unwrap_or_default()
        } else {
            Vec::new()
        }
    }
}

/// Seed for the shared cluster tree, derived from the master seed.
pub fn cluster_seed(master: u64) -> u64 {
    derive_seed(master, "cluster-tree", 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Every document ended up in training.
    Exhausted,
    MaxRounds,
    /// The review-percentage stop condition fired.
    TargetMet,
}

/// One batch pick, with the score that got it picked.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRecord {
    pub round: usize,
    pub doc_id: DocId,
    pub score: f64,
    pub label: bool,
}

#[derive(Debug, Clone)]
pub struct SeedRecord {
    pub doc_id: DocId,
    pub stratum: String,
    pub label: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentTrace {
    pub experiment_id: String,
    pub replicate: usize,
    pub config: ExperimentConfig,
    pub seed: Vec<SeedRecord>,
    pub seed_positives: usize,
    /// Seed documents drawn outside every stratum.
    pub seed_backfilled: usize,
    /// Documents added because the seed held a single class.
    pub degenerate_topup: usize,
    pub rounds: Vec<RoundRecord>,
    pub selections: Vec<SelectionRecord>,
    pub termination: Termination,
}

impl ExperimentTrace {
    pub fn seed_richness(&self) -> f64 {
        if self.seed.is_empty() {
            0.0
        } else {
            self.seed_positives as f64 / self.seed.len() as f64
        }
    }
}

fn make_seed(config: &ExperimentConfig, prepared: &PreparedCorpus, rng: &mut crate::rng::SimRng) -> Result<SeedSet> {
    let n = prepared.corpus.total();
    let size = config.params.seed_size;
    let method = config.seed_method;
    match method {
        SeedMethod::Random => seed_random(n, size, rng),
        SeedMethod::KeywordEqual | SeedMethod::KeywordWeighted => {
            let hits = prepared
                .keyword_hits
                .as_ref()
                .ok_or_else(|| Error::ConfigInconsistent(format!("{method} seeding requires a keyword list")))?;
            seed_keyword_stratified(hits, n, size, method.mode().expect("stratified"), rng)
        }
        SeedMethod::ClusterEqual | SeedMethod::ClusterWeighted => {
            let tree = prepared
                .cluster_tree
                .as_ref()
                .ok_or_else(|| Error::ConfigInconsistent(format!("{method} seeding requires a cluster tree")))?;
            seed_cluster_stratified(&tree.leaf_strata(), n, size, method.mode().expect("stratified"), rng)
        }
    }
}

/// Runs one experiment to termination.
///
/// Round `r` trains on the seed plus `r` batches, scores every document not
/// yet in training and records the review cost at the target recall. A
/// round-0 record is always produced.
pub fn run_experiment(config: &ExperimentConfig, prepared: &PreparedCorpus) -> Result<ExperimentTrace> {
    run_experiment_with_id(config, prepared, &default_experiment_id(config, 0), 0)
}

pub fn default_experiment_id(config: &ExperimentConfig, replicate: usize) -> String {
    format!("{}__{}__r{}", config.seed_method.name(), config.al_strategy, replicate)
}

pub fn run_experiment_with_id(
    config: &ExperimentConfig,
    prepared: &PreparedCorpus,
    experiment_id: &str,
    replicate: usize,
) -> Result<ExperimentTrace> {
    config.validate()?;
    let params = &config.params;
    let corpus = &prepared.corpus;
    let docs = corpus.documents();
    let n = corpus.total();
    let total_positives = corpus.positives();
    let dim = prepared.vocabulary.len();
    let hp = params.hyperparams();
    let mut rng = rng_from_seed(params.rng_seed);

    let seed = make_seed(config, prepared, &mut rng)?;
    let names = prepared.stratum_names(config.seed_method);
    let seed_records: Vec<SeedRecord> = seed
        .docs
        .iter()
        .zip(&seed.origins)
        .map(|(&d, origin)| SeedRecord {
            doc_id: docs[d].id.clone(),
            stratum: match origin {
                Origin::Random => "random".into(),
                Origin::Backfill => "backfill".into(),
                Origin::Stratum(i) => names.get(*i).cloned().unwrap_or_else(|| i.to_string()),
            },
            label: docs[d].label,
        })
        .collect();
    let seed_positives = seed.positives(corpus);

    let mut in_training = vec![false; n];
    let mut training: Vec<usize> = Vec::with_capacity(n);
    for &d in &seed.docs {
        in_training[d] = true;
        training.push(d);
    }

    let mut degenerate_topup = 0;
    loop {
        let positives = training.iter().filter(|&&d| docs[d].label).count();
        if positives > 0 && positives < training.len() {
            break;
        }
        let pool: Vec<usize> = (0..n).filter(|&d| !in_training[d]).collect();
        if pool.is_empty() {
            return Err(Error::DegenerateTraining);
        }
        for d in sample_without_replacement(&pool, DEGENERATE_TOPUP, &mut rng) {
            in_training[d] = true;
            training.push(d);
            degenerate_topup += 1;
        }
    }

    let mut rounds = Vec::new();
    let mut selections = Vec::new();
    let termination = 'rounds: loop {
        let round = rounds.len();
        let pool: Vec<usize> = (0..n).filter(|&d| !in_training[d]).collect();
        let train_positives = training.iter().filter(|&&d| docs[d].label).count();

        let scored = if pool.is_empty() {
            Vec::new()
        } else {
            let examples: Vec<(&SparseVector, bool)> = training
                .iter()
                .map(|&d| (&prepared.vectors[d], docs[d].label))
                .collect();
            let model = train(&examples, dim, hp)?;
            model.score(
                pool.iter()
                    .map(|&d| (docs[d].id.clone(), &prepared.vectors[d], docs[d].label)),
            )?
        };
        let record = review_at_recall(
            round,
            &scored,
            training.len(),
            train_positives,
            n,
            total_positives,
            params.target_recall,
        )?;
        let review_pct = record.review_pct();
        rounds.push(record);

        if pool.is_empty() {
            break 'rounds Termination::Exhausted;
        }
        if params.stop_at_review_pct.is_some_and(|t| review_pct <= t) {
            break 'rounds Termination::TargetMet;
        }
        if params.max_rounds.is_some_and(|m| round >= m) {
            break 'rounds Termination::MaxRounds;
        }

        let ctx = CutoffContext {
            total_positives,
            training_positives: train_positives,
            target_recall: params.target_recall,
        };
        let picked = config.al_strategy.select(&scored, params.batch_size, &ctx, &mut rng)?;
        let score_of: HashMap<&DocId, f64> = scored.iter().map(|s| (&s.doc_id, s.score)).collect();
        for id in picked {
            let d = prepared.position(&id).expect("selected id comes from the pool");
            debug_assert!(!in_training[d]);
            selections.push(SelectionRecord {
                round,
                score: score_of[&id],
                label: docs[d].label,
                doc_id: id,
            });
            in_training[d] = true;
            training.push(d);
        }
    };

    Ok(ExperimentTrace {
        experiment_id: experiment_id.to_string(),
        replicate,
        config: config.clone(),
        seed: seed_records,
        seed_positives,
        seed_backfilled: seed.backfilled,
        degenerate_topup,
        rounds,
        selections,
        termination,
    })
}
