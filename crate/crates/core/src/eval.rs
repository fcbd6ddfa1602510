//! Confusion metrics, ROC/AUC, precision at k and the baseline rankers.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::math::percentile_ranks;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Predicted positive iff `probability >= threshold`.
pub fn confusion(predictions: &[f64], labels: &[u8], threshold: f64) -> Result<ConfusionCounts> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(alloc::format!("threshold {threshold} outside [0, 1]")));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p >= threshold, y == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PrfMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when `tp + fp == 0`; precision is reported as 0.
    pub precision_undefined: bool,
    /// Set when `tp + fn == 0`; recall is reported as 0.
    pub recall_undefined: bool,
    /// Set when `2tp + fp + fn == 0`; F1 is reported as 0.
    pub f1_undefined: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Accuracy, precision, recall and F1 = tp / (tp + (fp + fn) / 2).
pub fn prf_metrics(c: &ConfusionCounts) -> Result<PrfMetrics> {
    if c.total() == 0 {
        return Err(Error::InvalidArgument("empty confusion counts".into()));
    }
    let (accuracy, _) = ratio(c.tp + c.tn, c.total());
    let (precision, precision_undefined) = ratio(c.tp, c.tp + c.fp);
    let (recall, recall_undefined) = ratio(c.tp, c.tp + c.fn_);
    let (f1, f1_undefined) = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
    Ok(PrfMetrics {
        accuracy,
        precision,
        recall,
        f1,
        precision_undefined,
        recall_undefined,
        f1_undefined,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores at or above this value are called positive; the first point
    /// uses +inf.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC by sweeping every distinct score from high to low, with equal scores
/// entering together; AUC by the trapezoid rule.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let positives = labels.iter().filter(|&&y| y == 1).count() as f64;
    let negatives = labels.len() as f64 - positives;
    if positives == 0.0 || negatives == 0.0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = alloc::vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]].total_cmp(&s) == Ordering::Equal {
            if labels[order[i]] == 1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        let prev = *points.last().expect("non-empty");
        let point = RocPoint {
            fpr: fp / negatives,
            tpr: tp / positives,
            threshold: s,
        };
        auc += (point.fpr - prev.fpr) * (point.tpr + prev.tpr) / 2.0;
        points.push(point);
    }
    Ok(RocCurve { points, auc })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingMethod {
    Model,
    Ddf,
    Dif,
    LowInDegree,
    Dfm,
}

impl RankingMethod {
    pub const BASELINES: [RankingMethod; 4] = [
        RankingMethod::Ddf,
        RankingMethod::Dif,
        RankingMethod::LowInDegree,
        RankingMethod::Dfm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RankingMethod::Model => "model",
            RankingMethod::Ddf => "ddf",
            RankingMethod::Dif => "dif",
            RankingMethod::LowInDegree => "low_in_degree",
            RankingMethod::Dfm => "dfm",
        }
    }
}

impl fmt::Display for RankingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RankingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [RankingMethod::Model]
            .into_iter()
            .chain(RankingMethod::BASELINES)
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "ranking method",
                value: s.to_string(),
            })
    }
}

/// Users ordered most spammer-like first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub method: RankingMethod,
    pub entries: Vec<(String, f64)>,
}

impl RankingResult {
    /// Sorts by score descending, then user id ascending.
    pub fn from_scores(method: RankingMethod, mut entries: Vec<(String, f64)>) -> Self {
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        RankingResult { method, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Rank (0-based) of a user.
    pub fn position(&self, user_id: &str) -> Option<usize> {
        self.entries.iter().position(|(u, _)| u == user_id)
    }

    fn relevance(&self, labels: &BTreeMap<String, bool>) -> Result<Vec<bool>> {
        self.entries
            .iter()
            .map(|(u, _)| {
                labels
                    .get(u)
                    .copied()
                    .ok_or_else(|| Error::InvalidArgument(alloc::format!("no label for user `{u}`")))
            })
            .collect()
    }
}

fn check_k(k: usize, len: usize) -> Result<()> {
    if k == 0 || k > len {
        return Err(Error::KOutOfRange { k, len });
    }
    Ok(())
}

/// Share of spammers among the first `k` ranked users.
pub fn precision_at_k(ranking: &RankingResult, labels: &BTreeMap<String, bool>, k: usize) -> Result<f64> {
    check_k(k, ranking.len())?;
    let rel = ranking.relevance(labels)?;
    Ok(rel[..k].iter().filter(|r| **r).count() as f64 / k as f64)
}

/// AP@k over a relevance vector: `(1 / min(k, R)) * sum_{i<=k} P@i * rel_i`,
/// where `R` counts all relevant items; 0 when there are none.
pub fn average_precision(relevance: &[bool], k: usize) -> Result<f64> {
    check_k(k, relevance.len())?;
    let total = relevance.iter().filter(|r| **r).count();
    if total == 0 {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &rel) in relevance[..k].iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / k.min(total) as f64)
}

pub fn average_precision_at_k(ranking: &RankingResult, labels: &BTreeMap<String, bool>, k: usize) -> Result<f64> {
    let rel = ranking.relevance(labels)?;
    average_precision(&rel, k)
}

/// `2 |pct - 0.5|`: 1 at either end of the distribution, 0 at the median.
fn extremity(pct: f64) -> f64 {
    2.0 * (pct - 0.5).abs()
}

fn low(pct: &[f64]) -> Vec<f64> {
    pct.iter().map(|p| 1.0 - p).collect()
}

fn mean_of(parts: &[Vec<f64>], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| parts.iter().map(|p| p[i]).sum::<f64>() / parts.len() as f64)
        .collect()
}

/// Scores users with one of the four percentile-based baselines; higher is
/// more spammer-like, every score lies in `[0, 1]`.
///
/// * DDF: extremes of x6 and x7, low values of the other topic-dependent
///   features, and strongly negative replies (x12).
/// * DIF: low values of every topic-independent-capable feature except x6
///   and x7.
/// * low in-degree: few followers.
/// * DFM: low reputation `FOL / (FOL + FRD)`, high URL ratio and high
///   hashtag ratio.
pub fn rank_baseline(method: RankingMethod, matrix: &FeatureMatrix) -> Result<RankingResult> {
    let n = matrix.len();
    let pct = |name: &str| matrix.column_by_name(name).map(|c| percentile_ranks(&c));
    let scores: Vec<f64> = match method {
        RankingMethod::Model => {
            return Err(Error::InvalidArgument("the model ranking comes from predicted probabilities".into()))
        }
        RankingMethod::Ddf => {
            let mut parts = Vec::new();
            parts.push(pct("x6")?.into_iter().map(extremity).collect());
            parts.push(pct("x7")?.into_iter().map(extremity).collect());
            for name in ["x1", "x2", "x3", "x4", "x5", "x8", "x9", "x10", "x11", "x18"] {
                parts.push(low(&pct(name)?));
            }
            let neg: Vec<f64> = matrix.column_by_name("x12")?.iter().map(|v| -v).collect();
            parts.push(percentile_ranks(&neg));
            mean_of(&parts, n)
        }
        RankingMethod::Dif => {
            let mut parts = Vec::new();
            for name in [
                "x1", "x2", "x3", "x4", "x5", "x8", "x9", "x10", "x11", "x12", "x13", "x14", "x15", "x16", "x17",
                "x18",
            ] {
                parts.push(low(&pct(name)?));
            }
            mean_of(&parts, n)
        }
        RankingMethod::LowInDegree => low(&pct("x13")?),
        RankingMethod::Dfm => {
            let fol = matrix.column_by_name("x13")?;
            let frd = matrix.column_by_name("x14")?;
            let urls = matrix.column_by_name("x3")?;
            let unreputable: Vec<f64> = fol
                .iter()
                .zip(&frd)
                .map(|(a, b)| 1.0 - reputation(*a, *b))
                .collect();
            let url_ratio: Vec<f64> = matrix
                .rows
                .iter()
                .zip(&urls)
                .map(|(r, u)| u / r.topic_tweets.max(1) as f64)
                .collect();
            let parts = [unreputable, percentile_ranks(&url_ratio), pct("x18")?];
            mean_of(&parts, n)
        }
    };
    let entries = matrix
        .rows
        .iter()
        .zip(scores)
        .map(|(r, s)| (r.user_id.clone(), s))
        .collect();
    Ok(RankingResult::from_scores(method, entries))
}

/// `FOL / (FOL + FRD)`, 0 when both are 0.
pub fn reputation(followers: f64, friends: f64) -> f64 {
    if followers + friends == 0.0 {
        0.0
    } else {
        followers / (followers + friends)
    }
}
