//! Boundary-detection scores: windowed F-score, normalized RMSE and MAE.
//!
//! Ground-truth and estimated boundaries are matched one-to-one by repeatedly
//! pairing the globally closest unmatched (truth, estimate) pair. An estimate
//! is a true positive only if it is matched and within the window, so a
//! cluster of estimates around one boundary yields one hit and the rest count
//! as false positives.
//!
//! RMSE and MAE score every truth boundary: by its matched estimate when it
//! has one, otherwise (fewer estimates than truths) by its nearest estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryMatch {
    pub truth: usize,
    pub estimate: usize,
    pub error: usize,
}

/// Greedy globally-closest one-to-one matching. Both inputs must be sorted
/// and free of duplicates. Ties prefer the smaller truth, then the smaller
/// estimate. Output is sorted by truth.
pub fn match_boundaries(truth: &[usize], estimate: &[usize]) -> Vec<BoundaryMatch> {
    let mut pairs: Vec<BoundaryMatch> = truth
        .iter()
        .flat_map(|&t| {
            estimate.iter().map(move |&e| BoundaryMatch {
                truth: t,
                estimate: e,
                error: t.abs_diff(e),
            })
        })
        .collect();
    pairs.sort_by_key(|m| (m.error, m.truth, m.estimate));

    let mut used_t = vec![false; truth.len()];
    let mut used_e = vec![false; estimate.len()];
    let mut out = Vec::with_capacity(truth.len().min(estimate.len()));
    for m in pairs {
        if out.len() == used_t.len().min(used_e.len()) {
            break;
        }
        let ti = truth.binary_search(&m.truth).expect("from truth");
        let ei = estimate.binary_search(&m.estimate).expect("from estimate");
        if used_t[ti] || used_e[ei] {
            continue;
        }
        used_t[ti] = true;
        used_e[ei] = true;
        out.push(m);
    }
    out.sort_by_key(|m| m.truth);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FScore {
    pub f_score: f64,
    pub precision: f64,
    pub recall: f64,
    pub true_positives: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f_score(truth: &[usize], estimate: &[usize], window: usize) -> FScore {
    let tp = match_boundaries(truth, estimate)
        .iter()
        .filter(|m| m.error <= window)
        .count();
    let precision = ratio(tp, estimate.len());
    let recall = ratio(tp, truth.len());
    let f_score = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    FScore {
        f_score,
        precision,
        recall,
        true_positives: tp,
    }
}

/// Error of each truth boundary, in truth order.
fn truth_errors(truth: &[usize], estimate: &[usize]) -> Result<Vec<usize>> {
    if truth.is_empty() {
        return Err(Error::EmptyTruth);
    }
    if estimate.is_empty() {
        return Err(Error::EmptyEstimate);
    }
    let matches = match_boundaries(truth, estimate);
    Ok(truth
        .iter()
        .map(|&t| match matches.iter().find(|m| m.truth == t) {
            Some(m) => m.error,
            None => estimate.iter().map(|&e| e.abs_diff(t)).min().expect("non-empty"),
        })
        .collect())
}

/// Root-mean-square boundary error divided by the series length `n`.
pub fn rmse_norm(truth: &[usize], estimate: &[usize], n: usize) -> Result<f64> {
    let errs = truth_errors(truth, estimate)?;
    let ms = errs.iter().map(|&e| (e as f64) * (e as f64)).sum::<f64>() / errs.len() as f64;
    Ok(ms.sqrt() / n as f64)
}

/// Mean absolute boundary error in samples.
pub fn mae(truth: &[usize], estimate: &[usize]) -> Result<f64> {
    let errs = truth_errors(truth, estimate)?;
    Ok(errs.iter().map(|&e| e as f64).sum::<f64>() / errs.len() as f64)
}

/// Window in samples for a window in seconds, or the raw value when no
/// sampling rate is known.
pub fn window_samples(window: f64, sample_rate_hz: Option<f64>) -> usize {
    let w = match sample_rate_hz {
        Some(hz) => window * hz,
        None => window,
    };
    w.max(0.0).round() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub matches: Vec<BoundaryMatch>,
    pub f_score: f64,
    pub precision: f64,
    pub recall: f64,
    pub rmse_norm: f64,
    pub mae_samples: f64,
    pub window_samples: usize,
    /// `empty_estimate` (errors set to their worst case) or `empty_truth`
    /// (errors set to 0).
    pub flags: Vec<String>,
}

fn clean(list: &[usize], n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = list.iter().copied().filter(|&b| b > 0 && b < n).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Scores an estimate against the truth for a series of length `n`. Series
/// endpoints are dropped from both lists.
pub fn evaluate(truth: &[usize], estimate: &[usize], n: usize, window: usize) -> EvalReport {
    let truth = clean(truth, n);
    let estimate = clean(estimate, n);
    let fs = f_score(&truth, &estimate, window);
    let mut flags = Vec::new();
    let (rmse, mae_v) = match (rmse_norm(&truth, &estimate, n), mae(&truth, &estimate)) {
        (Ok(r), Ok(m)) => (r, m),
        (Err(Error::EmptyTruth), _) | (_, Err(Error::EmptyTruth)) => {
            flags.push("empty_truth".to_string());
            (0.0, 0.0)
        }
        _ => {
            flags.push("empty_estimate".to_string());
            (1.0, n as f64)
        }
    };
    EvalReport {
        matches: match_boundaries(&truth, &estimate),
        f_score: fs.f_score,
        precision: fs.precision,
        recall: fs.recall,
        rmse_norm: rmse,
        mae_samples: mae_v,
        window_samples: window,
        flags,
    }
}
