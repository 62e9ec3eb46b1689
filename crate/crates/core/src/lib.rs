//! Simulation of active-learning document review.
//!
//! A labeled corpus is featurized, a seed set is drawn (randomly, by keyword
//! strata or by cluster strata), and a logistic-regression model is retrained
//! round after round on batches chosen by an active-learning strategy. Each
//! round records how much of the corpus a reviewer would read to reach a
//! target recall.

pub mod active_selection;
pub mod cluster;
pub mod corpus;
pub mod error;
pub mod featurize;
pub mod harness;
pub mod keyword_index;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod seeding;
pub mod synthetic;

pub use active_selection::{oracle_cutoff, CutoffContext, SelectionStrategy};
pub use cluster::{build_cluster_tree, ClusterParams, ClusterTree};
pub use corpus::{load_corpus, load_keywords, Corpus, CorpusStats, DocId, Document, KeywordList};
pub use error::{Error, ErrorCategory, Result};
pub use featurize::{tokenize, SparseVector, Vocabulary};
pub use harness::{run_experiment, run_grid, ExperimentConfig, ExperimentTrace, GridConfig, PreparedCorpus, RunParams};
pub use keyword_index::InvertedIndex;
pub use metrics::{optimum_analysis, review_at_recall, OptimumReport, RoundRecord, ToleranceMode};
pub use model::{train, Hyperparams, Model, ScoredDoc};
pub use seeding::{SeedMethod, SeedSet};
