//! Active-learning batch selection over a scored pool.
//!
//! All selectors break ties by ascending document id and return
//! `min(k, pool size)` distinct documents from the pool.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::DocId;
use crate::error::{Error, Result};
use crate::model::ScoredDoc;
use crate::rng::{sample_without_replacement, SimRng};

pub const DEFAULT_BATCH_SIZE: usize = 250;
pub const DEFAULT_TARGET_RECALL: f64 = 0.75;

/// Sentinel cutoff that lies above every score.
pub const CUTOFF_ABOVE_ALL: f64 = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionStrategy {
    /// Highest scores first.
    Top,
    /// Nearest to 0.5.
    Mid50,
    /// Nearest to the cutoff that achieves `target_recall`.
    MidRecall { target_recall: f64 },
    /// Uniform random.
    Rand,
    /// `top_fraction` of the batch from the top, the rest uniformly from
    /// what remains.
    Hybrid { top_fraction: f64 },
}

impl SelectionStrategy {
    /// The six strategies compared in the grid experiments.
    pub const DEFAULT_GRID: [SelectionStrategy; 6] = [
        SelectionStrategy::Top,
        SelectionStrategy::Mid50,
        SelectionStrategy::MidRecall { target_recall: 0.75 },
        SelectionStrategy::Rand,
        SelectionStrategy::Hybrid { top_fraction: 0.8 },
        SelectionStrategy::Hybrid { top_fraction: 0.2 },
    ];

    pub fn validate(&self) -> Result<()> {
        match *self {
            SelectionStrategy::MidRecall { target_recall } if !(target_recall > 0.0 && target_recall <= 1.0) => {
                Err(Error::InvalidConfig("target recall must be in (0, 1]".into()))
            }
            SelectionStrategy::Hybrid { top_fraction } if !(0.0..=1.0).contains(&top_fraction) => {
                Err(Error::InvalidConfig("top fraction must be in [0, 1]".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    /// Picks the next batch. `ctx` is only consulted by [`MidRecall`], which
    /// overrides its target recall with the strategy's own.
    ///
    /// [`MidRecall`]: SelectionStrategy::MidRecall
    pub fn select(&self, scored: &[ScoredDoc], k: usize, ctx: &CutoffContext, rng: &mut SimRng) -> Result<Vec<DocId>> {
        match *self {
            SelectionStrategy::Top => select_top(scored, k),
            SelectionStrategy::Mid50 => select_mid(scored, k, 0.5),
            SelectionStrategy::MidRecall { target_recall } => {
                let ctx = CutoffContext { target_recall, ..*ctx };
                select_mid_recall(scored, &ctx, k)
            }
            SelectionStrategy::Rand => select_random(scored, k, rng),
            SelectionStrategy::Hybrid { top_fraction } => select_hybrid(scored, k, top_fraction, rng),
        }
    }
}

fn pct(f: f64) -> String {
    let p = f * 100.0;
    if (p - p.round()).abs() < 1e-9 {
        format!("{}", p.round() as i64)
    } else {
        format!("{p}")
    }
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SelectionStrategy::Top => f.write_str("TOP"),
            SelectionStrategy::Mid50 => f.write_str("MID_50"),
            SelectionStrategy::MidRecall { target_recall } => write!(f, "MID_{}RC", pct(target_recall)),
            SelectionStrategy::Rand => f.write_str("RAND"),
            SelectionStrategy::Hybrid { top_fraction } => {
                write!(f, "{}TOP{}RD", pct(top_fraction), pct(1.0 - top_fraction))
            }
        }
    }
}

impl FromStr for SelectionStrategy {
    type Err = Error;

    /// Accepts `TOP`, `MID_50` (or `MID-50`), `MID_<p>RC`, `RAND` and
    /// `<a>TOP<b>RD` with `a + b = 100`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown active-learning strategy {s:?}"));
        let upper = s.trim().to_ascii_uppercase().replace('-', "_");
        let parse_pct = |t: &str| -> Result<f64> {
            let v: f64 = t.parse().map_err(|_| bad())?;
            if (0.0..=100.0).contains(&v) {
                Ok(v / 100.0)
            } else {
                Err(bad())
            }
        };
        let strategy = match upper.as_str() {
            "TOP" => SelectionStrategy::Top,
            "MID_50" | "MID50" => SelectionStrategy::Mid50,
            "RAND" | "RANDOM" => SelectionStrategy::Rand,
            other => {
                if let Some(p) = other.strip_prefix("MID_").and_then(|r| r.strip_suffix("RC")) {
                    SelectionStrategy::MidRecall {
                        target_recall: parse_pct(p)?,
                    }
                } else if let Some((a, b)) = other.strip_suffix("RD").and_then(|r| r.split_once("TOP")) {
                    let (a, b) = (parse_pct(a)?, parse_pct(b)?);
                    if (a + b - 1.0).abs() > 1e-9 {
                        return Err(bad());
                    }
                    SelectionStrategy::Hybrid { top_fraction: a }
                } else {
                    return Err(bad());
                }
            }
        };
        strategy.validate()?;
        Ok(strategy)
    }
}

impl Serialize for SelectionStrategy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SelectionStrategy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Quantities needed to place the recall cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffContext {
    /// Positives in the whole corpus.
    pub total_positives: usize,
    /// Positives already in the training set.
    pub training_positives: usize,
    pub target_recall: f64,
}

/// `ceil(rho * p)`, tolerant of representation error in `rho`.
pub fn required_positives(target_recall: f64, positives: usize) -> usize {
    let exact = target_recall * positives as f64;
    (exact - 1e-9 * exact.max(1.0)).ceil().max(0.0) as usize
}

fn by_score_desc(a: &ScoredDoc, b: &ScoredDoc) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id))
}

fn take_sorted_by<F>(scored: &[ScoredDoc], k: usize, mut key: F) -> Result<Vec<DocId>>
where
    F: FnMut(&ScoredDoc, &ScoredDoc) -> Ordering,
{
    if scored.is_empty() {
        return Err(Error::EmptyPool);
    }
    let k = k.min(scored.len());
    let mut order: Vec<&ScoredDoc> = scored.iter().collect();
    if k < order.len() && k > 0 {
        order.select_nth_unstable_by(k - 1, |a, b| key(a, b));
        order.truncate(k);
    }
    order.sort_unstable_by(|a, b| key(a, b));
    Ok(order.into_iter().take(k).map(|d| d.doc_id.clone()).collect())
}

pub fn select_top(scored: &[ScoredDoc], k: usize) -> Result<Vec<DocId>> {
    take_sorted_by(scored, k, by_score_desc)
}

/// Ascending `|score - center|`.
pub fn select_mid(scored: &[ScoredDoc], k: usize, center: f64) -> Result<Vec<DocId>> {
    take_sorted_by(scored, k, |a, b| {
        (a.score - center)
            .abs()
            .total_cmp(&(b.score - center).abs())
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    })
}

/// Highest score `t` such that the pool positives scoring at least `t`,
/// together with the training positives, reach the target recall. Returns
/// [`CUTOFF_ABOVE_ALL`] when training alone already does.
pub fn oracle_cutoff(scored: &[ScoredDoc], ctx: &CutoffContext) -> Result<f64> {
    let required = required_positives(ctx.target_recall, ctx.total_positives).saturating_sub(ctx.training_positives);
    if required == 0 {
        return Ok(CUTOFF_ABOVE_ALL);
    }
    let mut positives: Vec<f64> = scored.iter().filter(|d| d.label).map(|d| d.score).collect();
    if positives.len() < required {
        return Err(Error::InsufficientPositives {
            required,
            available: positives.len(),
        });
    }
    positives.select_nth_unstable_by(required - 1, |a, b| b.total_cmp(a));
    Ok(positives[required - 1])
}

/// Ascending distance to the oracle recall cutoff; degenerates to
/// [`select_top`] when the target is already met.
pub fn select_mid_recall(scored: &[ScoredDoc], ctx: &CutoffContext, k: usize) -> Result<Vec<DocId>> {
    if scored.is_empty() {
        return Err(Error::EmptyPool);
    }
    let cutoff = oracle_cutoff(scored, ctx)?;
    if cutoff.is_infinite() {
        return select_top(scored, k);
    }
    select_mid(scored, k, cutoff)
}

/// Cutoff estimated from a labeled uniform control sample: the score of the
/// `ceil(rho * control positives)`-th highest-scoring control positive.
pub fn estimate_cutoff_from_control(control: &[ScoredDoc], target_recall: f64) -> Result<f64> {
    let mut positives: Vec<f64> = control.iter().filter(|d| d.label).map(|d| d.score).collect();
    if positives.is_empty() {
        return Err(Error::NoPositivesInControl);
    }
    let rank = required_positives(target_recall, positives.len()).clamp(1, positives.len());
    positives.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(positives[rank - 1])
}

pub fn select_random(scored: &[ScoredDoc], k: usize, rng: &mut SimRng) -> Result<Vec<DocId>> {
    if scored.is_empty() {
        return Err(Error::EmptyPool);
    }
    let picks: Vec<usize> = sample_without_replacement(&(0..scored.len()).collect::<Vec<_>>(), k, rng);
    Ok(picks.into_iter().map(|i| scored[i].doc_id.clone()).collect())
}

/// `round_half_up(top_fraction * k)` from the top, the remainder uniformly
/// from the rest of the pool.
pub fn select_hybrid(scored: &[ScoredDoc], k: usize, top_fraction: f64, rng: &mut SimRng) -> Result<Vec<DocId>> {
    if scored.is_empty() {
        return Err(Error::EmptyPool);
    }
    if !(0.0..=1.0).contains(&top_fraction) {
        return Err(Error::InvalidConfig("top fraction must be in [0, 1]".into()));
    }
    let k = k.min(scored.len());
    let k_top = ((top_fraction * k as f64 + 0.5).floor() as usize).min(k);
    let mut picked = if k_top > 0 {
        select_top(scored, k_top)?
    } else {
        Vec::new()
    };
    let k_rand = k - k_top;
    if k_rand > 0 {
        let taken: std::collections::HashSet<&DocId> = picked.iter().collect();
        let rest: Vec<ScoredDoc> = scored.iter().filter(|d| !taken.contains(&d.doc_id)).cloned().collect();
        let extra = select_random(&rest, k_rand, rng)?;
        picked.extend(extra);
    }
    Ok(picked)
}
