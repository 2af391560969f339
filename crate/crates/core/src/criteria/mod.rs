//! Model evaluation against MOS: correlation metrics after logistic mapping,
//! pairwise significance partitions, ROC analysis and model comparison.

mod logistic;
mod pairs;
mod rank;
mod report;

pub use logistic::{fit_logistic, FitDiagnostics, LogisticFit, LogisticParams, MIN_SAMPLES};
pub use pairs::{
    auc_analysis, compare_models, partition_pairs, welch_p_value, AucReport, ComparisonCell,
    Direction, ModelComparison, PairPartition, Significance, Verdict, VideoPair, VideoStats, ALPHA,
    CRITICAL_Z, TASK_BETTER_VS_WORSE, TASK_DIFFERENT_VS_SIMILAR,
};
pub use rank::{auc, average_ranks, krcc, pearson, srcc};
pub use report::{
    evaluate_models, parse_scores, read_scores, EvaluationReport, MethodNotes, ModelReport,
    PairCounts, SCORES_HEADER,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// Pearson correlation after logistic mapping.
    pub plcc: f64,
    /// Spearman correlation on raw predictions.
    pub srcc: f64,
    /// Kendall tau-b on raw predictions.
    pub krcc: f64,
    /// RMSE after logistic mapping, in MOS units.
    pub rmse: f64,
    pub params: LogisticParams,
    pub diagnostics: FitDiagnostics,
}

pub fn correlations(pred: &[f64], mos: &[f64]) -> Result<CorrelationReport> {
    let fit = fit_logistic(pred, mos)?;
    let mapped = fit.params.map(pred);
    let rmse = (mapped
        .iter()
        .zip(mos)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / mos.len() as f64)
        .sqrt();
    Ok(CorrelationReport {
        plcc: pearson(&mapped, mos),
        srcc: srcc(pred, mos),
        krcc: krcc(pred, mos),
        rmse,
        params: fit.params,
        diagnostics: fit.diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictor() {
        let mos = [1.0, 2.0, 3.0, 4.0, 5.0, 2.5];
        let r = correlations(&mos, &mos).unwrap();
        assert!((r.plcc - 1.0).abs() < 1e-9);
        assert_eq!(r.srcc, 1.0);
        assert_eq!(r.krcc, 1.0);
        assert!(r.rmse < 1e-6);
    }

    #[test]
    fn reversed_predictor_still_maps() {
        let mos = [1.0, 2.0, 3.0, 4.0, 5.0, 2.5];
        let pred: Vec<f64> = mos.iter().map(|m| -m).collect();
        let r = correlations(&pred, &mos).unwrap();
        assert_eq!(r.srcc, -1.0);
        assert!((r.plcc - 1.0).abs() < 1e-9);
    }
}
