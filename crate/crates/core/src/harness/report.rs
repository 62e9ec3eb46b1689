//! Report files for a set of traces, and their recomputation from disk.
//!
//! Everything written here is a pure function of the traces and the run
//! configuration, so a grid produces the same bytes on any number of
//! workers. `analyze_dir` rebuilds `optimum.csv` and `summary.csv` from
//! `experiments.csv` and `rounds.csv` alone.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::active_selection::SelectionStrategy;
use crate::corpus::CorpusStats;
use crate::error::{Error, Result};
use crate::keyword_index::KeywordHitReport;
use crate::metrics::{
    optimum_from_fractions, summary_table_from_points, ToleranceMode, DEFAULT_SUMMARY_ROUNDS, DEFAULT_TOLERANCES,
};
use crate::seeding::SeedMethod;

use super::grid::CellFailure;
use super::{ExperimentTrace, PreparedCorpus};

pub const ROUNDS_FILE: &str = "rounds.csv";
pub const EXPERIMENTS_FILE: &str = "experiments.csv";
pub const OPTIMUM_FILE: &str = "optimum.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const STATS_FILE: &str = "stats.csv";
pub const KEYWORD_STATS_FILE: &str = "keyword_stats.csv";
pub const KEYWORDS_FILE: &str = "keywords.csv";
pub const SEEDS_FILE: &str = "seeds.csv";
pub const SELECTIONS_FILE: &str = "selections.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const ANALYSIS_DIR: &str = "analysis";

const ROUNDS_HEADER: [&str; 8] = [
    "experiment_id",
    "round",
    "train_size",
    "train_positives",
    "cutoff_display",
    "docs_at_cutoff",
    "review_pct",
    "recall_pct",
];
const EXPERIMENTS_HEADER: [&str; 11] = [
    "experiment_id",
    "seed_method",
    "al_strategy",
    "replicate",
    "rng_seed",
    "termination",
    "rounds",
    "seed_size",
    "seed_positives",
    "seed_backfilled",
    "degenerate_topup",
];
const OPTIMUM_HEADER: [&str; 9] = [
    "experiment_id",
    "seed_method",
    "al_strategy",
    "replicate",
    "review_pct",
    "optimum_round",
    "first_within_5pct",
    "first_within_10pct",
    "first_within_15pct",
];
const SUMMARY_HEADER: [&str; 8] = [
    "seed_method",
    "replicate",
    "round",
    "strategy_a",
    "strategy_b",
    "review_pct_a",
    "review_pct_b",
    "difference_pct",
];

/// Corpus-level facts and the configuration recorded alongside the traces.
#[derive(Debug, Clone, Default)]
pub struct ReportContext {
    /// Run or grid configuration as written to the manifest.
    pub config: Value,
    pub stats: Option<CorpusStats>,
    pub keyword_report: Option<KeywordHitReport>,
    pub tolerance_mode: ToleranceMode,
}

impl ReportContext {
    pub fn from_prepared(prepared: &PreparedCorpus, config: Value, tolerance_mode: ToleranceMode) -> Self {
        ReportContext {
            config,
            stats: Some(prepared.corpus.stats()),
            keyword_report: prepared.keyword_report.clone(),
            tolerance_mode,
        }
    }
}

/// Per-experiment summary needed to rebuild the analysis tables.
#[derive(Debug, Clone, PartialEq)]
struct ExperimentRow {
    experiment_id: String,
    seed_method: String,
    al_strategy: String,
    replicate: usize,
    /// `(round, review percentage)` in round order.
    points: Vec<(usize, f64)>,
}

fn strategy_rank(name: &str) -> (usize, String) {
    let pos = SelectionStrategy::DEFAULT_GRID
        .iter()
        .position(|s| s.to_string() == name)
        .unwrap_or(SelectionStrategy::DEFAULT_GRID.len());
    (pos, name.to_string())
}

fn method_rank(name: &str) -> (usize, String) {
    let pos = SeedMethod::ALL
        .iter()
        .position(|m| m.name() == name)
        .unwrap_or(SeedMethod::ALL.len());
    (pos, name.to_string())
}

fn row_key(
    method: &str,
    strategy: &str,
    replicate: usize,
    id: &str,
) -> ((usize, String), usize, (usize, String), String) {
    (method_rank(method), replicate, strategy_rank(strategy), id.to_string())
}

fn sorted_traces(traces: &[ExperimentTrace]) -> Vec<&ExperimentTrace> {
    let mut v: Vec<&ExperimentTrace> = traces.iter().collect();
    v.sort_by_cached_key(|t| {
        row_key(
            t.config.seed_method.name(),
            &t.config.al_strategy.to_string(),
            t.replicate,
            &t.experiment_id,
        )
    });
    v
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create_file(path)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn tolerance_scale(mode: ToleranceMode) -> f64 {
    // Tables are computed on percentages; absolute tolerances are fractions.
    match mode {
        ToleranceMode::Relative => 1.0,
        ToleranceMode::Absolute => 100.0,
    }
}

fn optimum_rows(rows: &[ExperimentRow], mode: ToleranceMode) -> Result<Vec<Vec<String>>> {
    let scale = tolerance_scale(mode);
    let tolerances: Vec<f64> = DEFAULT_TOLERANCES.iter().map(|t| t * scale).collect();
    rows.iter()
        .map(|row| {
            let rep = optimum_from_fractions(&row.points, &tolerances, mode)?;
            let mut out = vec![
                row.experiment_id.clone(),
                row.seed_method.clone(),
                row.al_strategy.clone(),
                row.replicate.to_string(),
                format!("{:.2}", rep.optimum_review),
                rep.optimum_round.to_string(),
            ];
            out.extend(rep.first_within.iter().map(|(_, r)| r.to_string()));
            Ok(out)
        })
        .collect()
}

/// Pairwise strategy comparisons at the sampled rounds, grouped by seed
/// method and replicate. Rounds missing from any trace in a group are
/// skipped.
fn summary_rows(rows: &[ExperimentRow]) -> Result<Vec<Vec<String>>> {
    let mut groups: BTreeMap<((usize, String), usize), Vec<&ExperimentRow>> = BTreeMap::new();
    for row in rows {
        groups
            .entry((method_rank(&row.seed_method), row.replicate))
            .or_default()
            .push(row);
    }
    let mut out = Vec::new();
    for (((_, method), replicate), group) in groups {
        let rounds: Vec<usize> = DEFAULT_SUMMARY_ROUNDS
            .iter()
            .copied()
            .filter(|r| group.iter().all(|g| g.points.iter().any(|p| p.0 == *r)))
            .collect();
        let series: Vec<(String, Vec<(usize, f64)>)> = group
            .iter()
            .map(|g| (g.al_strategy.clone(), g.points.clone()))
            .collect();
        let table = summary_table_from_points(&series, &rounds)?;
        for (ri, round) in table.rounds.iter().enumerate() {
            for (i, j) in table.pairs() {
                out.push(vec![
                    method.clone(),
                    replicate.to_string(),
                    round.to_string(),
                    table.strategies[i].clone(),
                    table.strategies[j].clone(),
                    format!("{:.2}", table.values[ri][i]),
                    format!("{:.2}", table.values[ri][j]),
                    format!("{:.2}", table.difference(ri, i, j)),
                ]);
            }
        }
    }
    Ok(out)
}

fn write_analysis(dir: &Path, rows: &[ExperimentRow], mode: ToleranceMode) -> Result<()> {
    write_rows(&dir.join(OPTIMUM_FILE), &OPTIMUM_HEADER, optimum_rows(rows, mode)?)?;
    write_rows(&dir.join(SUMMARY_FILE), &SUMMARY_HEADER, summary_rows(rows)?)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes every report file for `traces` into `out_dir`.
pub fn emit_reports(
    traces: &[ExperimentTrace],
    failures: &[CellFailure],
    context: &ReportContext,
    out_dir: &Path,
) -> Result<()> {
    create_dir(out_dir)?;
    let traces = sorted_traces(traces);

    write_rows(
        &out_dir.join(ROUNDS_FILE),
        &ROUNDS_HEADER,
        traces.iter().flat_map(|t| {
            t.rounds.iter().map(|r| {
                vec![
                    t.experiment_id.clone(),
                    r.round.to_string(),
                    r.train_size.to_string(),
                    r.train_positives.to_string(),
                    r.cutoff_display(),
                    r.docs_at_or_above_cutoff.to_string(),
                    format!("{}", r.review_pct()),
                    format!("{}", 100.0 * r.recall_achieved()),
                ]
            })
        }),
    )?;
    write_rows(
        &out_dir.join(EXPERIMENTS_FILE),
        &EXPERIMENTS_HEADER,
        traces.iter().map(|t| {
            vec![
                t.experiment_id.clone(),
                t.config.seed_method.name().to_string(),
                t.config.al_strategy.to_string(),
                t.replicate.to_string(),
                t.config.params.rng_seed.to_string(),
                serde_json::to_value(t.termination)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                t.rounds.len().to_string(),
                t.seed.len().to_string(),
                t.seed_positives.to_string(),
                t.seed_backfilled.to_string(),
                t.degenerate_topup.to_string(),
            ]
        }),
    )?;
    write_rows(
        &out_dir.join(SEEDS_FILE),
        &["experiment_id", "doc_id", "stratum", "label"],
        traces.iter().flat_map(|t| {
            t.seed.iter().map(|s| {
                vec![
                    t.experiment_id.clone(),
                    s.doc_id.to_string(),
                    s.stratum.clone(),
                    u8::from(s.label).to_string(),
                ]
            })
        }),
    )?;
    write_rows(
        &out_dir.join(SELECTIONS_FILE),
        &["experiment_id", "round", "doc_id", "score", "label", "strategy"],
        traces.iter().flat_map(|t| {
            let strategy = t.config.al_strategy.to_string();
            t.selections.iter().map(move |s| {
                vec![
                    t.experiment_id.clone(),
                    s.round.to_string(),
                    s.doc_id.to_string(),
                    format!("{}", s.score),
                    u8::from(s.label).to_string(),
                    strategy.clone(),
                ]
            })
        }),
    )?;
    let mut failures: Vec<&CellFailure> = failures.iter().collect();
    failures.sort_by(|a, b| a.experiment_id.cmp(&b.experiment_id));
    write_rows(
        &out_dir.join(FAILURES_FILE),
        &["experiment_id", "exit_code", "error"],
        failures
            .iter()
            .map(|f| vec![f.experiment_id.clone(), f.exit_code.to_string(), f.error.clone()]),
    )?;

    write_rows(
        &out_dir.join(STATS_FILE),
        &[
            "total_documents",
            "positive_documents",
            "negative_documents",
            "richness",
        ],
        context.stats.iter().map(|s| {
            vec![
                s.total.to_string(),
                s.positives.to_string(),
                s.negatives.to_string(),
                s.richness_display(),
            ]
        }),
    )?;
    match &context.keyword_report {
        Some(report) => {
            report.write_summary_csv(create_file(&out_dir.join(KEYWORD_STATS_FILE))?)?;
            report.write_keywords_csv(create_file(&out_dir.join(KEYWORDS_FILE))?)?;
        }
        None => {
            write_rows(
                &out_dir.join(KEYWORD_STATS_FILE),
                &[
                    "total_documents",
                    "keywords",
                    "documents_hit",
                    "positive_documents_hit",
                    "keyword_hit_percentage",
                ],
                std::iter::empty(),
            )?;
            write_rows(
                &out_dir.join(KEYWORDS_FILE),
                &["keyword", "documents_hit", "positive_documents_hit"],
                std::iter::empty(),
            )?;
        }
    }

    let rows: Vec<ExperimentRow> = traces
        .iter()
        .map(|t| ExperimentRow {
            experiment_id: t.experiment_id.clone(),
            seed_method: t.config.seed_method.name().to_string(),
            al_strategy: t.config.al_strategy.to_string(),
            replicate: t.replicate,
            points: t.rounds.iter().map(|r| (r.round, r.review_pct())).collect(),
        })
        .collect();
    write_analysis(out_dir, &rows, context.tolerance_mode)?;

    let manifest = json!({
        "tool": "tarsim",
        "version": env!("CARGO_PKG_VERSION"),
        "config": context.config,
        "tolerance_mode": context.tolerance_mode,
        "corpus": context.stats,
        "experiments": traces.iter().map(|t| t.experiment_id.clone()).collect::<Vec<_>>(),
        "failures": failures.iter().map(|f| f.experiment_id.clone()).collect::<Vec<_>>(),
    });
    let path = out_dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn create_file(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn read_csv(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_reader(fs::File::open(path).map_err(|e| Error::io(path, e))?);
    r.records().map(|rec| rec.map_err(Error::from)).collect()
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, file: &str) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line() as usize);
    rec.get(i)
        .ok_or_else(|| Error::MalformedRecord {
            line,
            reason: format!("{file}: missing column {i}"),
        })?
        .parse()
        .map_err(|_| Error::MalformedRecord {
            line,
            reason: format!("{file}: bad value in column {i}"),
        })
}

/// Recomputes the optimum and summary tables of a trace directory into
/// `<dir>/analysis/` and returns that path.
pub fn analyze_dir(dir: &Path) -> Result<PathBuf> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?)?;
    let mode: ToleranceMode = manifest
        .get("tolerance_mode")
        .cloned()
        .map(serde_json::from_value)
        .transpose()?
        .unwrap_or_default();

    let mut rows: Vec<ExperimentRow> = Vec::new();
    let mut by_id: BTreeMap<String, usize> = BTreeMap::new();
    for rec in read_csv(&dir.join(EXPERIMENTS_FILE))? {
        let id: String = field(&rec, 0, EXPERIMENTS_FILE)?;
        if by_id.insert(id.clone(), rows.len()).is_some() {
            return Err(Error::DuplicateId(id));
        }
        rows.push(ExperimentRow {
            experiment_id: id,
            seed_method: field(&rec, 1, EXPERIMENTS_FILE)?,
            al_strategy: field(&rec, 2, EXPERIMENTS_FILE)?,
            replicate: field(&rec, 3, EXPERIMENTS_FILE)?,
            points: Vec::new(),
        });
    }
    for rec in read_csv(&dir.join(ROUNDS_FILE))? {
        let id: String = field(&rec, 0, ROUNDS_FILE)?;
        let &i = by_id.get(&id).ok_or_else(|| Error::MalformedRecord {
            line: rec.position().map_or(0, |p| p.line() as usize),
            reason: format!("{ROUNDS_FILE}: unknown experiment {id:?}"),
        })?;
        rows[i]
            .points
            .push((field(&rec, 1, ROUNDS_FILE)?, field(&rec, 6, ROUNDS_FILE)?));
    }
    for row in &mut rows {
        row.points.sort_by_key(|p| p.0);
    }
    rows.sort_by_cached_key(|r| row_key(&r.seed_method, &r.al_strategy, r.replicate, &r.experiment_id));
    // Experiments that recorded no rounds cannot be analyzed.
    rows.retain(|r| !r.points.is_empty());

    let out = dir.join(ANALYSIS_DIR);
    create_dir(&out)?;
    write_analysis(&out, &rows, mode)?;
    Ok(out)
}
