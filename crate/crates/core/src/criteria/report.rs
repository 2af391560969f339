//! Full evaluation of one or more predictors against a MOS table.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pairs::{
    auc_analysis, compare_models, partition_pairs, AucReport, ModelComparison, Significance, ALPHA,
    CRITICAL_Z,
};
use super::{correlations, CorrelationReport};
use crate::error::{Error, Result};
use crate::subjective::{MosTable, RESCALE_DESCRIPTION};

pub const SCORES_HEADER: &str = "video_id,score";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodNotes {
    pub pair_test: String,
    pub alpha: f64,
    pub auc_estimator: String,
    pub auc_comparison: String,
    pub critical_z: f64,
    pub krcc_variant: String,
    pub rank_correlations_on: String,
    pub mapping: String,
    pub fit: String,
    pub mos_rescale: String,
    pub subject_rejection: String,
}

impl Default for MethodNotes {
    fn default() -> Self {
        MethodNotes {
            pair_test: "two-sided Welch unequal-variance t-test on per-video rescaled scores \
                        (stand-in; the original significance method is unspecified)"
                .into(),
            alpha: ALPHA,
            auc_estimator: "normalized Mann-Whitney U, ties counted 1/2; better-vs-worse uses \
                            oriented delta_pred as positives and its negation as negatives"
                .into(),
            auc_comparison: "correlated-AUC z-test: DeLong covariance for different-vs-similar, \
                             Hoeffding projection of the symmetric statistic for better-vs-worse"
                .into(),
            critical_z: CRITICAL_Z,
            krcc_variant: "tau_b".into(),
            rank_correlations_on: "raw predictions".into(),
            mapping: "xi1 * (1/2 - 1/(1 + exp(xi2 * (p - xi3)))) + xi4 * p + xi5".into(),
            fit: "Levenberg-Marquardt on standardized data over xi2 and xi3 with the linear \
                  terms projected out, up to 5 restarts, least-squares line kept as a candidate, \
                  gradient tolerance 1e-8, relative cost tolerance 1e-12, at most 500 iterations"
                .into(),
            mos_rescale: RESCALE_DESCRIPTION.into(),
            subject_rejection: "ITU-R BT.500-11 Annex 2 on raw scores".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub name: String,
    pub correlations: CorrelationReport,
    pub auc: AucReport,
    pub scored_videos: usize,
    /// Predictions for videos absent from the MOS table.
    pub ignored_predictions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCounts {
    pub total: usize,
    pub different: usize,
    pub similar: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub methods: MethodNotes,
    pub videos: usize,
    pub pairs: PairCounts,
    pub models: Vec<ModelReport>,
    /// Present when at least two models are evaluated.
    pub comparison: Option<ModelComparison>,
}

/// Scores every model on every video of `mos`. Each model must cover all
/// MOS videos; extra predictions are ignored and counted.
pub fn evaluate_models(
    mos: &MosTable,
    models: &[(String, HashMap<String, f64>)],
) -> Result<EvaluationReport> {
    if models.is_empty() {
        return Err(Error::invalid("no models to evaluate"));
    }
    let partition = partition_pairs(&mos.stats())?;
    let mos_values: Vec<f64> = mos.rows.iter().map(|r| r.mos).collect();
    let mut reports = Vec::with_capacity(models.len());
    let mut scored = Vec::with_capacity(models.len());
    for (name, scores) in models {
        let pred = mos
            .rows
            .iter()
            .map(|r| {
                scores.get(&r.video_id).copied().ok_or_else(|| {
                    Error::invalid(format!(
                        "model {name} has no score for video {}",
                        r.video_id
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let with_pred = partition.with_predictions(scores)?;
        reports.push(ModelReport {
            name: name.clone(),
            correlations: correlations(&pred, &mos_values)?,
            auc: auc_analysis(&with_pred)?,
            scored_videos: pred.len(),
            ignored_predictions: scores.len() - pred.len(),
        });
        scored.push((name.clone(), with_pred));
    }
    let comparison = if scored.len() >= 2 {
        Some(compare_models(&scored)?)
    } else {
        None
    };
    Ok(EvaluationReport {
        methods: MethodNotes::default(),
        videos: mos.rows.len(),
        pairs: PairCounts {
            total: partition.pairs.len(),
            different: partition.count(Significance::Different),
            similar: partition.count(Significance::Similar),
        },
        models: reports,
        comparison,
    })
}

/// Parses a `video_id,score` predictor file.
pub fn parse_scores(text: &str) -> Result<HashMap<String, f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header != ["video_id", "score"] {
        return Err(Error::parse(1, format!("expected header {SCORES_HEADER}")));
    }
    let mut out = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let id = rec.get(0).unwrap_or_default().to_string();
        let score: f64 = rec
            .get(1)
            .unwrap_or_default()
            .parse()
            .map_err(|e| Error::parse(line, format!("bad score: {e}")))?;
        if !score.is_finite() {
            return Err(Error::parse(line, "score is not finite"));
        }
        if out.insert(id.clone(), score).is_some() {
            return Err(Error::parse(line, format!("duplicate video {id}")));
        }
    }
    Ok(out)
}

pub fn read_scores(path: &Path) -> Result<HashMap<String, f64>> {
    parse_scores(&std::fs::read_to_string(path)?)
}
