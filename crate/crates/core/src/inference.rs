//! Granger-causal scores read off trained lag matrices, and ranking metrics
//! against a known graph.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::datagen::Adjacency;
use crate::error::{NkdcdError, Result};
use crate::model::LagStack;
use crate::numgrad::Matrix;

/// Edge scores: `scores(i, j)` is the joint norm of all lag blocks `(i, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcScores {
    pub scores: Matrix,
    /// Per-lag block norms, one `n x n` matrix per lag.
    pub per_lag: Vec<Matrix>,
}

impl GcScores {
    pub fn n(&self) -> usize {
        self.scores.rows()
    }

    /// Scores without per-lag detail, e.g. loaded from a file.
    pub fn from_matrix(scores: Matrix) -> Result<Self> {
        if scores.rows() != scores.cols() {
            return Err(NkdcdError::Dimension(format!(
                "score matrix must be square, got {}x{}",
                scores.rows(),
                scores.cols()
            )));
        }
        if scores.data().iter().any(|v| !v.is_finite()) {
            return Err(NkdcdError::Domain("score matrix contains non-finite values".into()));
        }
        Ok(GcScores {
            scores,
            per_lag: Vec::new(),
        })
    }
}

pub fn score_gc(lags: &LagStack) -> GcScores {
    let n = lags.n_series();
    let per_lag: Vec<Matrix> = (0..lags.max_lag())
        .map(|l| Matrix::from_fn(n, n, |i, j| lags.block_norm(l, i, j)))
        .collect();
    let scores = Matrix::from_fn(n, n, |i, j| {
        (0..lags.max_lag()).map(|l| lags.block_sq_norm(l, i, j)).sum::<f64>().sqrt()
    });
    GcScores { scores, per_lag }
}

/// Edge `(i, j)` kept iff `score > epsilon`.
pub fn threshold_adjacency(scores: &GcScores, epsilon: f64) -> Adjacency {
    Adjacency::from_fn(scores.n(), |i, j| scores.scores.get(i, j) > epsilon)
}

/// Per-lag thresholding of the block norms.
pub fn lag_adjacency(scores: &GcScores, lag: usize, epsilon: f64) -> Option<Adjacency> {
    let m = scores.per_lag.get(lag)?;
    Some(Adjacency::from_fn(m.rows(), |i, j| m.get(i, j) > epsilon))
}

/// `(score, is_edge)` for every scored pair.
pub fn labelled_pairs(scores: &GcScores, truth: &Adjacency, include_self: bool) -> Result<Vec<(f64, bool)>> {
    let n = scores.n();
    if truth.n() != n {
        return Err(NkdcdError::Dimension(format!(
            "truth is {0}x{0} but scores are {1}x{1}",
            truth.n(),
            n
        )));
    }
    let mut pairs = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            if include_self || i != j {
                pairs.push((scores.scores.get(i, j), truth.get(i, j)));
            }
        }
    }
    let pos = pairs.iter().filter(|p| p.1).count();
    if pos == 0 || pos == pairs.len() {
        return Err(NkdcdError::UndefinedMetric(format!(
            "need both edges and non-edges, got {pos} edges among {} pairs",
            pairs.len()
        )));
    }
    Ok(pairs)
}

/// Probability that a random edge outscores a random non-edge, ties counted half.
pub fn auroc(scores: &GcScores, truth: &Adjacency, include_self: bool) -> Result<f64> {
    Ok(auroc_pairs(&labelled_pairs(scores, truth, include_self)?))
}

/// Rank-sum form of the Mann-Whitney statistic with average ranks for ties.
pub fn auroc_pairs(pairs: &[(f64, bool)]) -> f64 {
    let mut sorted: Vec<(f64, bool)> = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let n_pos = sorted.iter().filter(|p| p.1).count() as f64;
    let n_neg = sorted.len() as f64 - n_pos;
    let mut rank_sum = 0.0;
    let mut k = 0;
    while k < sorted.len() {
        let mut end = k;
        while end < sorted.len() && sorted[end].0 == sorted[k].0 {
            end += 1;
        }
        // ranks k+1 ..= end share their average
        let avg = (k + 1 + end) as f64 / 2.0;
        rank_sum += avg * sorted[k..end].iter().filter(|p| p.1).count() as f64;
        k = end;
    }
    (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Cumulative `(threshold, tp, fp)` at each distinct score, highest first.
fn cumulative_counts(pairs: &[(f64, bool)]) -> Vec<(f64, usize, usize)> {
    let mut sorted: Vec<(f64, bool)> = pairs.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    let mut out: Vec<(f64, usize, usize)> = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    for (k, &(s, label)) in sorted.iter().enumerate() {
        if label {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_group = k + 1 == sorted.len() || sorted[k + 1].0 != s;
        if last_of_group {
            out.push((s, tp, fp));
        }
    }
    out
}

/// ROC curve from `(0, 0)` to `(1, 1)`, one point per distinct score.
pub fn roc_curve(pairs: &[(f64, bool)]) -> Vec<RocPoint> {
    let n_pos = pairs.iter().filter(|p| p.1).count() as f64;
    let n_neg = pairs.len() as f64 - n_pos;
    let mut pts = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    pts.extend(cumulative_counts(pairs).into_iter().map(|(s, tp, fp)| RocPoint {
        threshold: s,
        fpr: fp as f64 / n_neg,
        tpr: tp as f64 / n_pos,
    }));
    pts
}

/// Trapezoidal area under [`roc_curve`].
pub fn roc_area(curve: &[RocPoint]) -> f64 {
    curve
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

pub fn pr_curve(pairs: &[(f64, bool)]) -> Vec<PrPoint> {
    let n_pos = pairs.iter().filter(|p| p.1).count() as f64;
    cumulative_counts(pairs)
        .into_iter()
        .map(|(s, tp, fp)| PrPoint {
            threshold: s,
            recall: tp as f64 / n_pos,
            precision: tp as f64 / (tp + fp) as f64,
        })
        .collect()
}

/// Step-wise area: precision at each threshold weighted by the recall gained there.
pub fn pr_area(curve: &[PrPoint]) -> f64 {
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    for p in curve {
        area += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    area
}

pub fn aupr(scores: &GcScores, truth: &Adjacency, include_self: bool) -> Result<f64> {
    Ok(pr_area(&pr_curve(&labelled_pairs(scores, truth, include_self)?)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auroc: f64,
    pub aupr: f64,
    pub roc: Vec<RocPoint>,
    pub pr: Vec<PrPoint>,
    pub epsilon: f64,
    pub include_self: bool,
    pub adjacency: Vec<Vec<u8>>,
    pub confusion: Confusion,
}

pub fn evaluate(scores: &GcScores, truth: &Adjacency, epsilon: f64, include_self: bool) -> Result<MetricsReport> {
    let pairs = labelled_pairs(scores, truth, include_self)?;
    let roc = roc_curve(&pairs);
    let pr = pr_curve(&pairs);
    let adjacency = threshold_adjacency(scores, epsilon);
    let mut confusion = Confusion::default();
    let n = truth.n();
    for i in 0..n {
        for j in 0..n {
            if !include_self && i == j {
                continue;
            }
            match (adjacency.get(i, j), truth.get(i, j)) {
                (true, true) => confusion.tp += 1,
                (true, false) => confusion.fp += 1,
                (false, false) => confusion.tn += 1,
                (false, true) => confusion.fn_ += 1,
            }
        }
    }
    Ok(MetricsReport {
        auroc: auroc_pairs(&pairs),
        aupr: pr_area(&pr),
        roc,
        pr,
        epsilon,
        include_self,
        adjacency: adjacency.to_rows(),
        confusion,
    })
}

/// Sample mean and half-width of the two-sided 95% Student-t interval.
/// A single value has zero half-width.
pub fn mean_ci95(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(NkdcdError::UndefinedMetric("mean of no values".into()));
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let t = StudentsT::new(0.0, 1.0, k - 1.0)
        .map_err(|e| NkdcdError::UndefinedMetric(e.to_string()))?
        .inverse_cdf(0.975);
    Ok((mean, t * (var / k).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores_of(rows: &[[f64; 3]]) -> GcScores {
        GcScores::from_matrix(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    fn truth_of(rows: &[[u8; 3]]) -> Adjacency {
        Adjacency::from_fn(3, |i, j| rows[i][j] == 1)
    }

    /// Exhaustive positive x negative pair counting.
    fn brute_auroc(pairs: &[(f64, bool)]) -> f64 {
        let pos: Vec<f64> = pairs.iter().filter(|p| p.1).map(|p| p.0).collect();
        let neg: Vec<f64> = pairs.iter().filter(|p| !p.1).map(|p| p.0).collect();
        let mut wins = 0.0;
        for &p in &pos {
            for &q in &neg {
                wins += if p > q {
                    1.0
                } else if p == q {
                    0.5
                } else {
                    0.0
                };
            }
        }
        wins / (pos.len() * neg.len()) as f64
    }

    #[test]
    fn zero_stack_scores_zero_and_single_entry() {
        let s = LagStack::zeros(8, 2, 3).unwrap();
        assert!(score_gc(&s).scores.data().iter().all(|&v| v == 0.0));

        let mut s = LagStack::zeros(8, 2, 3).unwrap();
        // lag 2, target 3, source 7 (one-based) -> zero-based (1, 2, 6)
        let mut b = Matrix::zeros(2, 2);
        b.set(0, 0, 4.0);
        s.set_block(1, 2, 6, &b).unwrap();
        let g = score_gc(&s);
        assert_eq!(g.scores.get(2, 6), 4.0);
        assert_eq!(g.scores.sum(), 4.0);
        assert_eq!(g.per_lag[1].get(2, 6), 4.0);
        assert_eq!(g.per_lag[0].get(2, 6), 0.0);
    }

    #[test]
    fn thresholding_examples() {
        let s = scores_of(&[[0.1, 0.5, 0.2], [0.3, 0.9, 0.4], [0.6, 0.7, 0.8]]);
        assert_eq!(threshold_adjacency(&s, 0.0).count(), 9);
        assert_eq!(threshold_adjacency(&s, 1.0).count(), 0);
        let a = threshold_adjacency(&s, 0.85);
        assert_eq!(a.count(), 1);
        assert!(a.get(1, 1));
    }

    #[test]
    fn auroc_examples() {
        let truth = truth_of(&[[1, 0, 0], [1, 1, 0], [0, 0, 1]]);
        let perfect = scores_of(&[[0.9, 0.1, 0.2], [0.8, 0.7, 0.3], [0.0, 0.05, 0.6]]);
        assert_eq!(auroc(&perfect, &truth, true).unwrap(), 1.0);
        assert_eq!(aupr(&perfect, &truth, true).unwrap(), 1.0);
        let flat = scores_of(&[[1.0; 3]; 3]);
        assert_eq!(auroc(&flat, &truth, true).unwrap(), 0.5);
        // all tied: precision equals prevalence at the single threshold
        assert!((aupr(&flat, &truth, true).unwrap() - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn auroc_matches_pair_counting_on_hand_case() {
        let truth = truth_of(&[[1, 1, 0], [0, 1, 0], [1, 0, 0]]);
        let s = scores_of(&[[0.5, 0.2, 0.2], [0.6, 0.9, 0.1], [0.3, 0.4, 0.0]]);
        let pairs = labelled_pairs(&s, &truth, true).unwrap();
        // positives 0.5, 0.2, 0.9, 0.3; negatives 0.2, 0.6, 0.1, 0.4, 0.0
        // wins: 0.5 -> 3 (0.2,0.1,0.4,0.0 -> 4) ... counted below
        let expected = brute_auroc(&pairs);
        assert!((auroc(&s, &truth, true).unwrap() - expected).abs() < 1e-15);
        // 0.5 beats {0.2,0.1,0.4,0.0}=4; 0.2 ties 0.2 and beats {0.1,0.0}=2.5;
        // 0.9 beats all 5; 0.3 beats {0.2,0.1,0.0}=3  -> 14.5 / 20
        assert!((expected - 14.5 / 20.0).abs() < 1e-15);
        assert!((roc_area(&roc_curve(&pairs)) - expected).abs() < 1e-15);
    }

    #[test]
    fn aupr_matches_threshold_sweep() {
        let truth = truth_of(&[[1, 0, 1], [0, 1, 0], [0, 1, 0]]);
        let s = scores_of(&[[0.7, 0.8, 0.3], [0.1, 0.9, 0.3], [0.2, 0.4, 0.5]]);
        let pairs = labelled_pairs(&s, &truth, true).unwrap();
        // sweep every distinct threshold from the top
        let mut thresholds: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
        thresholds.dedup();
        let n_pos = pairs.iter().filter(|p| p.1).count() as f64;
        let mut prev = 0.0;
        let mut area = 0.0;
        for t in thresholds {
            let tp = pairs.iter().filter(|p| p.0 >= t && p.1).count() as f64;
            let k = pairs.iter().filter(|p| p.0 >= t).count() as f64;
            area += (tp / n_pos - prev) * tp / k;
            prev = tp / n_pos;
        }
        assert!((aupr(&s, &truth, true).unwrap() - area).abs() < 1e-15);
    }

    #[test]
    fn diagonal_exclusion_and_degenerate_truth() {
        let truth = truth_of(&[[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        let s = scores_of(&[[0.5; 3]; 3]);
        assert!(matches!(auroc(&s, &truth, false), Err(NkdcdError::UndefinedMetric(_))));
        let all = truth_of(&[[1; 3]; 3]);
        assert!(auroc(&s, &all, true).is_err());
        let wrong = Adjacency::empty(2);
        assert!(auroc(&s, &wrong, true).is_err());
    }

    #[test]
    fn t_interval_matches_table_value() {
        // t_{0.975, 4} = 2.776445
        let (m, h) = mean_ci95(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(m, 3.0);
        let se = (2.5f64 / 5.0).sqrt();
        assert!((h - 2.776445 * se).abs() < 1e-5);
        assert_eq!(mean_ci95(&[0.7]).unwrap(), (0.7, 0.0));
        assert!(mean_ci95(&[]).is_err());
    }

    #[test]
    fn confusion_counts() {
        let truth = truth_of(&[[1, 1, 0], [0, 1, 0], [0, 0, 1]]);
        let s = scores_of(&[[0.9, 0.1, 0.8], [0.0, 0.7, 0.0], [0.0, 0.0, 0.6]]);
        let r = evaluate(&s, &truth, 0.5, true).unwrap();
        assert_eq!(r.confusion, Confusion { tp: 3, fp: 1, tn: 4, fn_: 1 });
        assert!(r.auroc > 0.0 && r.auroc <= 1.0);
    }
}
