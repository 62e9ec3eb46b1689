//! Review-at-recall cost metric and optimum-round analysis.
//!
//! The cost of a round is the share of the corpus a reviewer must read to
//! reach the target recall: every training document plus every scored
//! document at or above the recall cutoff.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::active_selection::{oracle_cutoff, required_positives, CutoffContext};
use crate::error::{Error, Result};
use crate::model::ScoredDoc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 0 is the seed-only model.
    pub round: usize,
    pub train_size: usize,
    pub train_positives: usize,
    /// Probability cutoff; infinite when training alone reaches the target.
    pub cutoff: f64,
    pub docs_at_or_above_cutoff: usize,
    pub positives_at_or_above_cutoff: usize,
    pub total_docs: usize,
    pub total_positives: usize,
}

impl RoundRecord {
    /// `(train_size + docs_at_or_above_cutoff) / N`
    pub fn review_fraction(&self) -> f64 {
        (self.train_size + self.docs_at_or_above_cutoff) as f64 / self.total_docs as f64
    }

    /// `(train_positives + positives_at_or_above_cutoff) / P`
    pub fn recall_achieved(&self) -> f64 {
        if self.total_positives == 0 {
            return 1.0;
        }
        (self.train_positives + self.positives_at_or_above_cutoff) as f64 / self.total_positives as f64
    }

    pub fn review_pct(&self) -> f64 {
        100.0 * self.review_fraction()
    }

    /// Cutoff on the 0-100 display scale; `"inf"` for the sentinel.
    pub fn cutoff_display(&self) -> String {
        if self.cutoff.is_finite() {
            format!("{}", 100.0 * self.cutoff)
        } else {
            "inf".to_string()
        }
    }
}

/// Evaluates one round: finds the highest cutoff reaching `target_recall`
/// and counts the documents a reviewer would read.
#[allow(clippy::too_many_arguments)]
pub fn review_at_recall(
    round: usize,
    scored: &[ScoredDoc],
    train_size: usize,
    train_positives: usize,
    total_docs: usize,
    total_positives: usize,
    target_recall: f64,
) -> Result<RoundRecord> {
    if !(target_recall > 0.0 && target_recall <= 1.0) {
        return Err(Error::InvalidConfig("target recall must be in (0, 1]".into()));
    }
    if train_positives > total_positives || train_size + scored.len() > total_docs {
        return Err(Error::InvalidConfig("round counts exceed corpus totals".into()));
    }
    let ctx = CutoffContext {
        total_positives,
        training_positives: train_positives,
        target_recall,
    };
    let cutoff = oracle_cutoff(scored, &ctx).map_err(|e| match e {
        Error::InsufficientPositives { available, .. } => Error::TargetUnreachable {
            required: required_positives(target_recall, total_positives),
            available: available + train_positives,
        },
        e => e,
    })?;
    let (docs, positives) = scored
        .iter()
        .filter(|d| d.score >= cutoff)
        .fold((0, 0), |(n, p), d| (n + 1, p + d.label as usize));
    Ok(RoundRecord {
        round,
        train_size,
        train_positives,
        cutoff,
        docs_at_or_above_cutoff: docs,
        positives_at_or_above_cutoff: positives,
        total_docs,
        total_positives,
    })
}

/// How "within t of the optimum" is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceMode {
    /// `review <= optimum * (1 + t)`
    #[default]
    Relative,
    /// `review <= optimum + t` (fractions, so 0.05 is five points)
    Absolute,
}

pub const DEFAULT_TOLERANCES: [f64; 3] = [0.05, 0.10, 0.15];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimumReport {
    /// Earliest round attaining the minimum review fraction.
    pub optimum_round: usize,
    pub optimum_review: f64,
    /// `(tolerance, first round within tolerance of the optimum)`.
    pub first_within: Vec<(f64, usize)>,
}

impl OptimumReport {
    pub fn first_within(&self, tolerance: f64) -> Option<usize> {
        self.first_within
            .iter()
            .find(|(t, _)| (t - tolerance).abs() < 1e-12)
            .map(|&(_, r)| r)
    }
}

pub fn optimum_analysis(trace: &[RoundRecord], tolerances: &[f64], mode: ToleranceMode) -> Result<OptimumReport> {
    let points: Vec<(usize, f64)> = trace.iter().map(|r| (r.round, r.review_fraction())).collect();
    optimum_from_fractions(&points, tolerances, mode)
}

/// [`optimum_analysis`] over `(round, review_fraction)` pairs in round order.
pub fn optimum_from_fractions(
    points: &[(usize, f64)],
    tolerances: &[f64],
    mode: ToleranceMode,
) -> Result<OptimumReport> {
    let Some(&(first_round, first_value)) = points.first() else {
        return Err(Error::InvalidConfig("optimum analysis needs a nonempty trace".into()));
    };
    let (optimum_round, optimum_review) =
        points.iter().skip(1).fold(
            (first_round, first_value),
            |best, &(r, v)| if v < best.1 { (r, v) } else { best },
        );
    let first_within = tolerances
        .iter()
        .map(|&t| {
            let bound = match mode {
                ToleranceMode::Relative => optimum_review * (1.0 + t),
                ToleranceMode::Absolute => optimum_review + t,
            };
            let round = points
                .iter()
                .find(|(_, v)| *v <= bound)
                .map_or(optimum_round, |&(r, _)| r);
            (t, round)
        })
        .collect();
    Ok(OptimumReport {
        optimum_round,
        optimum_review,
        first_within,
    })
}

/// Review percentages of several strategies at sampled rounds, with pairwise
/// differences.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub strategies: Vec<String>,
    pub rounds: Vec<usize>,
    /// `values[row][col]`: review percentage of strategy `col` at
    /// `rounds[row]`, unrounded.
    pub values: Vec<Vec<f64>>,
}

impl SummaryTable {
    /// Index pairs `(i, j)`, `i < j`, in column order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.strategies.len();
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
    }

    /// Unrounded `values[row][i] - values[row][j]`.
    pub fn difference(&self, row: usize, i: usize, j: usize) -> f64 {
        self.values[row][i] - self.values[row][j]
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["round".to_string()];
        h.extend(self.strategies.iter().cloned());
        h.extend(
            self.pairs()
                .into_iter()
                .map(|(i, j)| format!("{}-{}", self.strategies[i], self.strategies[j])),
        );
        h
    }

    /// Display rows: percentages rounded to two decimals.
    pub fn display_rows(&self) -> Vec<Vec<String>> {
        self.rounds
            .iter()
            .enumerate()
            .map(|(row, r)| {
                let mut out = vec![r.to_string()];
                out.extend(self.values[row].iter().map(|v| format!("{v:.2}")));
                out.extend(
                    self.pairs()
                        .into_iter()
                        .map(|(i, j)| format!("{:.2}", self.difference(row, i, j))),
                );
                out
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for row in self.display_rows() {
            w.write_record(row)?;
        }
        w.flush().map_err(|e| Error::io("<summary csv>", e))?;
        Ok(())
    }
}

pub const DEFAULT_SUMMARY_ROUNDS: [usize; 5] = [10, 20, 30, 40, 50];

pub fn summary_table(traces: &[(String, &[RoundRecord])], rounds: &[usize]) -> Result<SummaryTable> {
    let series: Vec<(String, Vec<(usize, f64)>)> = traces
        .iter()
        .map(|(name, t)| (name.clone(), t.iter().map(|r| (r.round, r.review_pct())).collect()))
        .collect();
    summary_table_from_points(&series, rounds)
}

/// [`summary_table`] over `(round, review percentage)` series.
pub fn summary_table_from_points(traces: &[(String, Vec<(usize, f64)>)], rounds: &[usize]) -> Result<SummaryTable> {
    let mut values = Vec::with_capacity(rounds.len());
    for &r in rounds {
        let mut row = Vec::with_capacity(traces.len());
        for (name, points) in traces {
            let &(_, v) = points.iter().find(|p| p.0 == r).ok_or_else(|| Error::MissingRound {
                experiment: name.clone(),
                round: r,
            })?;
            row.push(v);
        }
        values.push(row);
    }
    Ok(SummaryTable {
        strategies: traces.iter().map(|(n, _)| n.clone()).collect(),
        rounds: rounds.to_vec(),
        values,
    })
}
