//! Pairwise classification criteria.
//!
//! Every unordered video pair is labelled different or similar by a two-sided
//! Welch test on the per-video subject scores. A predictor is then judged by
//! two ROC analyses: Different-vs-Similar on `|delta_pred|`, and
//! Better-vs-Worse on `delta_pred` oriented by the sign of `delta_mos` over
//! the different pairs. Better-vs-Worse uses the symmetric construction where
//! each oriented score `s` is a positive and `-s` its mirrored negative.
//!
//! Model comparison is a z-test on the difference of correlated AUCs. The
//! variance for Different-vs-Similar comes from DeLong's structural
//! components; for Better-vs-Worse the positives and negatives are the same
//! sample, so the Hoeffding projection `h(k) = mean_l psi(s_k + s_l > 0)` of
//! the one-sample U-statistic is used instead (`Var ≈ 4/K · Var(h)`).

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::rank::auc;
use crate::error::{Error, Result};

pub const ALPHA: f64 = 0.05;
/// Two-sided 95% normal critical value.
pub const CRITICAL_Z: f64 = 1.959_963_984_540_054;

pub const TASK_DIFFERENT_VS_SIMILAR: &str = "different_vs_similar";
pub const TASK_BETTER_VS_WORSE: &str = "better_vs_worse";

/// Per-video summary of subject scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoStats {
    pub video_id: String,
    pub mean: f64,
    /// Sample standard deviation (`N - 1` denominator).
    pub stddev: f64,
    pub count: usize,
}

impl VideoStats {
    pub fn from_scores(video_id: impl Into<String>, scores: &[f64]) -> Self {
        let n = scores.len();
        let mean = scores.iter().sum::<f64>() / n as f64;
        let stddev = if n > 1 {
            (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        VideoStats {
            video_id: video_id.into(),
            mean,
            stddev,
            count: n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Significance {
    Different,
    Similar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ABetter,
    BBetter,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoPair {
    pub video_a: String,
    pub video_b: String,
    pub significance: Significance,
    pub direction: Direction,
    /// `mos(a) - mos(b)`.
    pub delta_mos: f64,
    /// `pred(a) - pred(b)`; zero until predictions are attached.
    pub delta_pred: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPartition {
    pub pairs: Vec<VideoPair>,
}

/// Two-sided Welch test p-value. Both variances zero: equal means give 1,
/// distinct means give 0.
pub fn welch_p_value(a: &VideoStats, b: &VideoStats) -> f64 {
    let va = a.stddev * a.stddev / a.count as f64;
    let vb = b.stddev * b.stddev / b.count as f64;
    let se2 = va + vb;
    let diff = a.mean - b.mean;
    if se2 == 0.0 {
        return if diff == 0.0 { 1.0 } else { 0.0 };
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (va * va / (a.count - 1) as f64 + vb * vb / (b.count - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.cdf(-t.abs())).min(1.0)
}

pub fn partition_pairs(videos: &[VideoStats]) -> Result<PairPartition> {
    if let Some(v) = videos.iter().find(|v| v.count < 2) {
        return Err(Error::invalid(format!(
            "video {} has {} rater(s); pair tests need at least 2",
            v.video_id, v.count
        )));
    }
    let pairs = (0..videos.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            (i + 1..videos.len()).map(move |j| {
                let (a, b) = (&videos[i], &videos[j]);
                let p_value = welch_p_value(a, b);
                let delta_mos = a.mean - b.mean;
                let (significance, direction) = if p_value < ALPHA {
                    let dir = if delta_mos > 0.0 {
                        Direction::ABetter
                    } else {
                        Direction::BBetter
                    };
                    (Significance::Different, dir)
                } else {
                    (Significance::Similar, Direction::None)
                };
                VideoPair {
                    video_a: a.video_id.clone(),
                    video_b: b.video_id.clone(),
                    significance,
                    direction,
                    delta_mos,
                    delta_pred: 0.0,
                    p_value,
                }
            })
        })
        .collect();
    Ok(PairPartition { pairs })
}

impl PairPartition {
    /// Copy of the partition with `delta_pred` filled from `scores`.
    pub fn with_predictions(&self, scores: &HashMap<String, f64>) -> Result<PairPartition> {
        let lookup = |id: &str| {
            scores
                .get(id)
                .copied()
                .ok_or_else(|| Error::invalid(format!("no prediction for video {id}")))
        };
        let pairs = self
            .pairs
            .iter()
            .map(|p| {
                Ok(VideoPair {
                    delta_pred: lookup(&p.video_a)? - lookup(&p.video_b)?,
                    ..p.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PairPartition { pairs })
    }

    pub fn count(&self, significance: Significance) -> usize {
        self.pairs
            .iter()
            .filter(|p| p.significance == significance)
            .count()
    }

    fn different_vs_similar(&self) -> (Vec<f64>, Vec<f64>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for p in &self.pairs {
            match p.significance {
                Significance::Different => pos.push(p.delta_pred.abs()),
                Significance::Similar => neg.push(p.delta_pred.abs()),
            }
        }
        (pos, neg)
    }

    /// `delta_pred` signed so that a positive value agrees with the MOS order.
    fn oriented(&self) -> Vec<f64> {
        self.pairs
            .iter()
            .filter_map(|p| match p.direction {
                Direction::ABetter => Some(p.delta_pred),
                Direction::BBetter => Some(-p.delta_pred),
                Direction::None => None,
            })
            .collect()
    }

    fn same_pairs(&self, other: &PairPartition) -> bool {
        self.pairs.len() == other.pairs.len()
            && self.pairs.iter().zip(&other.pairs).all(|(a, b)| {
                a.video_a == b.video_a
                    && a.video_b == b.video_b
                    && a.significance == b.significance
                    && a.direction == b.direction
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucReport {
    pub auc_different_vs_similar: f64,
    pub auc_better_vs_worse: f64,
    pub different_pairs: usize,
    pub similar_pairs: usize,
}

pub fn auc_analysis(partition: &PairPartition) -> Result<AucReport> {
    let (pos, neg) = partition.different_vs_similar();
    let dvs = auc(&pos, &neg).ok_or_else(|| Error::UndefinedAuc {
        task: TASK_DIFFERENT_VS_SIMILAR,
        reason: empty_reason(pos.len(), neg.len(), "different", "similar"),
    })?;
    let oriented = partition.oriented();
    let mirrored: Vec<f64> = oriented.iter().map(|s| -s).collect();
    let bvw = auc(&oriented, &mirrored).ok_or_else(|| Error::UndefinedAuc {
        task: TASK_BETTER_VS_WORSE,
        reason: "no significantly different pairs".into(),
    })?;
    Ok(AucReport {
        auc_different_vs_similar: dvs,
        auc_better_vs_worse: bvw,
        different_pairs: pos.len(),
        similar_pairs: neg.len(),
    })
}

fn empty_reason(pos: usize, neg: usize, pos_name: &str, neg_name: &str) -> String {
    match (pos, neg) {
        (0, 0) => "no pairs".into(),
        (0, _) => format!("no {pos_name} pairs"),
        _ => format!("no {neg_name} pairs"),
    }
}

/// `#{v in sorted : v < x} + 0.5 * #{v == x}`.
fn placement(sorted: &[f64], x: f64) -> f64 {
    let below = sorted.partition_point(|&v| v < x);
    let not_above = sorted.partition_point(|&v| v <= x);
    below as f64 + 0.5 * (not_above - below) as f64
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}

fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    if n < 2 {
        return 0.0;
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / (n - 1) as f64
}

/// DeLong structural components for one model.
fn delong_components(pos: &[f64], neg: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let sp = sorted(pos);
    let sn = sorted(neg);
    let v10 = pos
        .iter()
        .map(|&x| placement(&sn, x) / neg.len() as f64)
        .collect();
    // psi(x > y) seen from each negative: count of positives above y
    let v01 = neg
        .iter()
        .map(|&y| (pos.len() as f64 - placement(&sp, y)) / pos.len() as f64)
        .collect();
    (v10, v01)
}

/// Hoeffding projection of the symmetric Better-vs-Worse statistic.
fn symmetric_components(oriented: &[f64]) -> Vec<f64> {
    let mirrored = sorted(&oriented.iter().map(|s| -s).collect::<Vec<_>>());
    oriented
        .iter()
        .map(|&s| placement(&mirrored, s) / oriented.len() as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Better,
    Worse,
    Indistinguishable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCell {
    pub verdict: Verdict,
    /// z statistic of `auc(row) - auc(column)`; infinite when the variance
    /// of the difference vanishes.
    pub z: f64,
}

/// Verdicts for every ordered model pair: entry `[i][j]` says whether model
/// `i` is better than, worse than or indistinguishable from model `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub models: Vec<String>,
    pub aucs: Vec<AucReport>,
    pub different_vs_similar: Vec<Vec<ComparisonCell>>,
    pub better_vs_worse: Vec<Vec<ComparisonCell>>,
}

fn cell(diff: f64, var: f64) -> ComparisonCell {
    let z = if var > 0.0 {
        diff / var.sqrt()
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    let verdict = if z > CRITICAL_Z {
        Verdict::Better
    } else if z < -CRITICAL_Z {
        Verdict::Worse
    } else {
        Verdict::Indistinguishable
    };
    ComparisonCell { verdict, z }
}

/// Compares models scored on the same partition (see [`PairPartition::with_predictions`]).
pub fn compare_models(models: &[(String, PairPartition)]) -> Result<ModelComparison> {
    if models.len() < 2 {
        return Err(Error::invalid("model comparison needs at least 2 models"));
    }
    let base = &models[0].1;
    if let Some((name, _)) = models[1..].iter().find(|(_, p)| !base.same_pairs(p)) {
        return Err(Error::invalid(format!(
            "model {name} was scored on a different pair set than {}",
            models[0].0
        )));
    }
    let aucs = models
        .iter()
        .map(|(_, p)| auc_analysis(p))
        .collect::<Result<Vec<_>>>()?;

    let dvs: Vec<(Vec<f64>, Vec<f64>)> = models
        .iter()
        .map(|(_, p)| {
            let (pos, neg) = p.different_vs_similar();
            delong_components(&pos, &neg)
        })
        .collect();
    let bvw: Vec<Vec<f64>> = models
        .iter()
        .map(|(_, p)| symmetric_components(&p.oriented()))
        .collect();

    let k = models.len();
    let mut dvs_matrix = vec![Vec::with_capacity(k); k];
    let mut bvw_matrix = vec![Vec::with_capacity(k); k];
    for i in 0..k {
        for j in 0..k {
            let (v10i, v01i) = &dvs[i];
            let (v10j, v01j) = &dvs[j];
            let m = v10i.len() as f64;
            let n = v01i.len() as f64;
            let var = (covariance(v10i, v10i) + covariance(v10j, v10j)
                - 2.0 * covariance(v10i, v10j))
                / m
                + (covariance(v01i, v01i) + covariance(v01j, v01j) - 2.0 * covariance(v01i, v01j))
                    / n;
            let diff = aucs[i].auc_different_vs_similar - aucs[j].auc_different_vs_similar;
            dvs_matrix[i].push(cell(diff, var.max(0.0)));

            let (hi, hj) = (&bvw[i], &bvw[j]);
            let kk = hi.len() as f64;
            let var =
                4.0 / kk * (covariance(hi, hi) + covariance(hj, hj) - 2.0 * covariance(hi, hj));
            let diff = aucs[i].auc_better_vs_worse - aucs[j].auc_better_vs_worse;
            bvw_matrix[i].push(cell(diff, var.max(0.0)));
        }
    }
    Ok(ModelComparison {
        models: models.iter().map(|(n, _)| n.clone()).collect(),
        aucs,
        different_vs_similar: dvs_matrix,
        better_vs_worse: bvw_matrix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(id: &str, scores: &[f64]) -> VideoStats {
        VideoStats::from_scores(id, scores)
    }

    #[test]
    fn identical_score_sets_are_similar() {
        let s = [2.0, 3.0, 4.0, 3.0];
        let p = partition_pairs(&[stats("a", &s), stats("b", &s)]).unwrap();
        assert_eq!(p.pairs[0].significance, Significance::Similar);
        assert_eq!(p.pairs[0].direction, Direction::None);
        assert_eq!(p.pairs[0].p_value, 1.0);
    }

    #[test]
    fn maximal_separation() {
        let p = partition_pairs(&[stats("a", &[5.0; 20]), stats("b", &[1.0; 20])]).unwrap();
        assert_eq!(p.pairs[0].significance, Significance::Different);
        assert_eq!(p.pairs[0].direction, Direction::ABetter);
    }

    #[test]
    fn single_rater_is_rejected() {
        let err = partition_pairs(&[stats("a", &[5.0]), stats("b", &[1.0, 2.0])]).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    fn scored(mos: &[f64], pred: &[f64]) -> PairPartition {
        let videos: Vec<VideoStats> = mos
            .iter()
            .enumerate()
            .map(|(i, &m)| stats(&format!("v{i}"), &[m - 0.1, m, m + 0.1]))
            .collect();
        let scores = pred
            .iter()
            .enumerate()
            .map(|(i, &p)| (format!("v{i}"), p))
            .collect();
        partition_pairs(&videos)
            .unwrap()
            .with_predictions(&scores)
            .unwrap()
    }

    #[test]
    fn mos_as_predictor_orders_perfectly() {
        let mos = [1.0, 1.05, 2.0, 3.0, 4.5, 4.55];
        let r = auc_analysis(&scored(&mos, &mos)).unwrap();
        assert_eq!(r.auc_better_vs_worse, 1.0);
    }

    #[test]
    fn constant_predictor_is_chance() {
        let mos = [1.0, 1.05, 2.0, 3.0, 4.5, 4.55];
        let r = auc_analysis(&scored(&mos, &[7.0; 6])).unwrap();
        assert_eq!(r.auc_better_vs_worse, 0.5);
        assert_eq!(r.auc_different_vs_similar, 0.5);
    }

    #[test]
    fn missing_class_names_the_task() {
        let mos = [1.0, 2.0, 3.0];
        match auc_analysis(&scored(&mos, &mos)) {
            Err(Error::UndefinedAuc { task, .. }) => assert_eq!(task, TASK_DIFFERENT_VS_SIMILAR),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn comparison_verdicts() {
        let mos: Vec<f64> = (0..40).map(|i| 1.0 + (i / 2) as f64 * 0.2).collect();
        let perfect = scored(&mos, &mos);
        let constant = scored(&mos, &[1.0; 40]);
        let c =
            compare_models(&[("mos".into(), perfect.clone()), ("flat".into(), constant)]).unwrap();
        assert_eq!(c.better_vs_worse[0][1].verdict, Verdict::Better);
        assert_eq!(c.better_vs_worse[1][0].verdict, Verdict::Worse);
        assert_eq!(c.different_vs_similar[0][1].verdict, Verdict::Better);
        assert_eq!(c.better_vs_worse[0][0].verdict, Verdict::Indistinguishable);
        assert_eq!(
            c.different_vs_similar[1][1].verdict,
            Verdict::Indistinguishable
        );
    }

    #[test]
    fn mismatched_partitions() {
        let a = scored(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        let b = scored(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(
            compare_models(&[("a".into(), a), ("b".into(), b)]),
            Err(Error::InvalidArgument(_))
        ));
    }
}
