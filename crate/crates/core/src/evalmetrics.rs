//! Ranking and thresholding metrics plus distance-histogram export.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scores with binary labels (1 = anomalous).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredSet {
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
}

impl ScoredSet {
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<ScoredSet> {
        if scores.len() != labels.len() {
            return Err(Error::Metric(format!(
                "{} scores for {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Metric(format!("label {bad} is not binary")));
        }
        Ok(ScoredSet { scores, labels })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn flipped(&self) -> ScoredSet {
        ScoredSet {
            scores: self.scores.clone(),
            labels: self.labels.iter().map(|l| 1 - l).collect(),
        }
    }
}

/// Smallest sample value `r` with `#{v ≤ r} / N ≥ q`.
pub fn empirical_quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Contract("quantile of an empty sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_of_sorted(&sorted, q))
}

pub(crate) fn quantile_of_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len() as f64;
    let idx = (0..sorted.len())
        .find(|&i| (i + 1) as f64 / n >= q)
        .unwrap_or(sorted.len() - 1);
    sorted[idx]
}

/// Mid-ranks (1-based) of `values`, ties sharing their average rank.
fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Area under the ROC curve via the Mann–Whitney rank-sum identity; ties count 1/2.
pub fn auc(set: &ScoredSet) -> Result<f64> {
    let positives = set.labels.iter().filter(|&&l| l == 1).count();
    let negatives = set.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Metric(format!(
            "AUC needs both classes ({positives} anomalous, {negatives} normal)"
        )));
    }
    let ranks = mid_ranks(&set.scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(&set.labels)
        .filter(|(_, &l)| l == 1)
        .map(|(r, _)| r)
        .sum();
    let (p, n) = (positives as f64, negatives as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub f1: f64,
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub warning: Option<String>,
}

/// F1 of the anomalous class when the top `contamination` fraction of scores
/// (strictly above the `(1 − contamination)` quantile) is flagged.
pub fn f1_at_contamination(set: &ScoredSet, contamination: f64) -> Result<F1Report> {
    if !(contamination > 0.0 && contamination < 1.0) {
        return Err(Error::Metric(format!(
            "contamination {contamination} outside (0, 1)"
        )));
    }
    let threshold = empirical_quantile(&set.scores, 1.0 - contamination)
        .map_err(|_| Error::Metric("F1 of an empty score set".into()))?;
    let warning = set
        .scores
        .iter()
        .all(|&s| s == set.scores[0])
        .then(|| "all scores are equal: nothing is flagged anomalous".to_string());
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&s, &l) in set.scores.iter().zip(&set.labels) {
        match (s > threshold, l == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok(F1Report {
        f1: ratio(2 * tp, 2 * tp + fp + fn_),
        threshold,
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
        warning,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count_normal: usize,
    pub count_anomalous: usize,
    pub prop_normal: f64,
    pub prop_anomalous: f64,
}

/// Equal-width bins spanning `[min, max]`; the last bin is closed.
pub fn distance_histogram(distances: &[f64], labels: &[u8], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::Contract("histogram needs at least one bin".into()));
    }
    if distances.len() != labels.len() {
        return Err(Error::Contract(format!(
            "{} distances for {} labels",
            distances.len(),
            labels.len()
        )));
    }
    let (lo, hi) = distances
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    let (lo, hi) = if distances.is_empty() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![[0usize; 2]; bins];
    for (&d, &l) in distances.iter().zip(labels) {
        let b = (((d - lo) / width).floor() as usize).min(bins - 1);
        counts[b][usize::from(l == 1)] += 1;
    }
    let totals = labels.iter().fold([0usize; 2], |mut t, &l| {
        t[usize::from(l == 1)] += 1;
        t
    });
    let prop = |c: usize, t: usize| if t == 0 { 0.0 } else { c as f64 / t as f64 };
    Ok(counts
        .iter()
        .enumerate()
        .map(|(b, c)| HistogramBin {
            left: lo + b as f64 * width,
            right: if b + 1 == bins { hi } else { lo + (b + 1) as f64 * width },
            count_normal: c[0],
            count_anomalous: c[1],
            prop_normal: prop(c[0], totals[0]),
            prop_anomalous: prop(c[1], totals[1]),
        })
        .collect())
}

pub const HISTOGRAM_HEADER: &str = "bin_left,bin_right,count_normal,count_anomalous,prop_normal,prop_anomalous";

pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from(HISTOGRAM_HEADER);
    out.push('\n');
    for b in bins {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            b.left, b.right, b.count_normal, b.count_anomalous, b.prop_normal, b.prop_anomalous
        )
        .unwrap();
    }
    out
}

pub fn export_distance_histogram(
    distances: &[f64],
    labels: &[u8],
    bins: usize,
    path: impl AsRef<Path>,
) -> Result<Vec<HistogramBin>> {
    let hist = distance_histogram(distances, labels, bins)?;
    let path = path.as_ref();
    fs::write(path, histogram_csv(&hist)).map_err(|e| Error::io(path, e))?;
    Ok(hist)
}
