//! Subjective scores to MOS.
//!
//! Raw ratings are screened with the BT.500 Annex 2 observer rejection rule,
//! z-scored per subject, mapped to `[1, 5]` with `1 + 4 (z + 3) / 6` (clamped)
//! and averaged per video.

mod bt500;
mod factors;
mod io;

pub use bt500::{reject_subjects, Rejection, SubjectScreening};
pub use factors::{factor_summary, render_factor_summary, FactorGroup, VideoFactors, FACTORS};
pub use io::{
    append_rating, parse_mos, parse_ratings, read_mos, read_ratings, render_mos, write_mos,
    MOS_HEADER, RATINGS_HEADER,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::criteria::{srcc, VideoStats};
use crate::error::{Error, Result};

/// One rating row as stored in the ratings file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub subject_id: String,
    pub video_id: String,
    pub score: f64,
    pub timestamp: Option<String>,
}

/// Subject × video score matrix with a missing mask. Subjects and videos are
/// kept in sorted id order.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsMatrix {
    subjects: Vec<String>,
    videos: Vec<String>,
    scores: Vec<Vec<Option<f64>>>,
}

impl RatingsMatrix {
    pub fn from_ratings(ratings: &[Rating]) -> Result<Self> {
        let subjects: BTreeSet<&str> = ratings.iter().map(|r| r.subject_id.as_str()).collect();
        let videos: BTreeSet<&str> = ratings.iter().map(|r| r.video_id.as_str()).collect();
        let subjects: Vec<String> = subjects.into_iter().map(String::from).collect();
        let videos: Vec<String> = videos.into_iter().map(String::from).collect();
        let mut scores = vec![vec![None; videos.len()]; subjects.len()];
        for r in ratings {
            check_score(r.score, &r.subject_id, &r.video_id)?;
            let i = subjects.binary_search(&r.subject_id).unwrap();
            let j = videos.binary_search(&r.video_id).unwrap();
            if scores[i][j].replace(r.score).is_some() {
                return Err(Error::invalid(format!(
                    "duplicate rating of {} by {}",
                    r.video_id, r.subject_id
                )));
            }
        }
        Ok(RatingsMatrix {
            subjects,
            videos,
            scores,
        })
    }

    /// Builds a matrix from dense rows. Ids are sorted and rows reordered to match.
    pub fn from_rows(
        subjects: Vec<String>,
        videos: Vec<String>,
        rows: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if rows.len() != subjects.len() || rows.iter().any(|r| r.len() != videos.len()) {
            return Err(Error::invalid("score rows do not match the id lists"));
        }
        let mut ratings = Vec::new();
        for (s, row) in subjects.iter().zip(&rows) {
            for (v, score) in videos.iter().zip(row) {
                if let Some(score) = score {
                    ratings.push(Rating {
                        subject_id: s.clone(),
                        video_id: v.clone(),
                        score: *score,
                        timestamp: None,
                    });
                }
            }
        }
        let mut m = Self::from_ratings(&ratings)?;
        // keep subjects or videos that have no ratings at all
        for s in subjects {
            if let Err(pos) = m.subjects.binary_search(&s) {
                m.subjects.insert(pos, s);
                m.scores.insert(pos, vec![None; m.videos.len()]);
            }
        }
        for v in videos {
            if let Err(pos) = m.videos.binary_search(&v) {
                m.videos.insert(pos, v);
                for row in &mut m.scores {
                    row.insert(pos, None);
                }
            }
        }
        Ok(m)
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn videos(&self) -> &[String] {
        &self.videos
    }

    pub fn score(&self, subject: usize, video: usize) -> Option<f64> {
        self.scores[subject][video]
    }

    pub fn row(&self, subject: usize) -> &[Option<f64>] {
        &self.scores[subject]
    }

    /// `N_i`: ratings given by subject `i`.
    pub fn subject_count(&self, subject: usize) -> usize {
        self.scores[subject].iter().flatten().count()
    }

    /// `M_j`: ratings received by video `j`.
    pub fn video_count(&self, video: usize) -> usize {
        self.scores.iter().filter(|r| r[video].is_some()).count()
    }

    pub fn video_scores(&self, video: usize) -> Vec<f64> {
        self.scores.iter().filter_map(|r| r[video]).collect()
    }

    /// Matrix restricted to the listed subjects (unknown ids are ignored).
    pub fn with_subjects<S: AsRef<str>>(&self, keep: &[S]) -> RatingsMatrix {
        let keep: BTreeSet<&str> = keep.iter().map(|s| s.as_ref()).collect();
        let (subjects, scores) = self
            .subjects
            .iter()
            .zip(&self.scores)
            .filter(|(s, _)| keep.contains(s.as_str()))
            .map(|(s, r)| (s.clone(), r.clone()))
            .unzip();
        RatingsMatrix {
            subjects,
            videos: self.videos.clone(),
            scores,
        }
    }
}

fn check_score(score: f64, subject: &str, video: &str) -> Result<()> {
    if !(1.0..=5.0).contains(&score) {
        return Err(Error::invalid(format!(
            "score {score} by {subject} for {video} is outside [1, 5]"
        )));
    }
    Ok(())
}

/// Per-subject z-scores; rows follow `subjects`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZScores {
    pub subjects: Vec<String>,
    pub z: Vec<Vec<Option<f64>>>,
    /// Subjects left out because fewer than two ratings or zero variance.
    pub degenerate: Vec<String>,
}

pub fn zscore_normalize(ratings: &RatingsMatrix) -> ZScores {
    let mut out = ZScores {
        subjects: Vec::new(),
        z: Vec::new(),
        degenerate: Vec::new(),
    };
    for (subject, row) in ratings.subjects.iter().zip(&ratings.scores) {
        let present: Vec<f64> = row.iter().flatten().copied().collect();
        let n = present.len();
        if n < 2 {
            out.degenerate.push(subject.clone());
            continue;
        }
        let mean = present.iter().sum::<f64>() / n as f64;
        let var = present.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        if var == 0.0 {
            out.degenerate.push(subject.clone());
            continue;
        }
        let sd = var.sqrt();
        out.subjects.push(subject.clone());
        out.z
            .push(row.iter().map(|m| m.map(|m| (m - mean) / sd)).collect());
    }
    out
}

/// Linear map of `z ∈ [-3, 3]` onto `[1, 5]`, clamped.
pub fn rescale(z: f64) -> f64 {
    (1.0 + 4.0 * (z + 3.0) / 6.0).clamp(1.0, 5.0)
}

pub const RESCALE_DESCRIPTION: &str = "clamp(1 + 4 * (z + 3) / 6, 1, 5)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosRow {
    pub video_id: String,
    pub mos: f64,
    pub rater_count: usize,
    /// Sample standard deviation of the rescaled scores; 0 for one rater.
    pub stddev: f64,
    /// Rescaled z-scores of the retained raters.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scores: Vec<f64>,
}

impl MosRow {
    pub fn stats(&self) -> VideoStats {
        VideoStats {
            video_id: self.video_id.clone(),
            mean: self.mos,
            stddev: self.stddev,
            count: self.rater_count,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MosTable {
    pub rows: Vec<MosRow>,
    pub degenerate_subjects: Vec<String>,
    /// Videos without any retained rating.
    pub excluded_videos: Vec<String>,
}

impl MosTable {
    pub fn get(&self, video_id: &str) -> Option<&MosRow> {
        self.rows.iter().find(|r| r.video_id == video_id)
    }

    pub fn mos_by_id(&self) -> BTreeMap<&str, f64> {
        self.rows
            .iter()
            .map(|r| (r.video_id.as_str(), r.mos))
            .collect()
    }

    pub fn stats(&self) -> Vec<VideoStats> {
        self.rows.iter().map(MosRow::stats).collect()
    }
}

/// MOS of an already screened matrix.
pub fn compute_mos(ratings: &RatingsMatrix) -> MosTable {
    let z = zscore_normalize(ratings);
    let mut table = MosTable {
        degenerate_subjects: z.degenerate.clone(),
        ..MosTable::default()
    };
    for (j, video) in ratings.videos.iter().enumerate() {
        let scores: Vec<f64> = z.z.iter().filter_map(|row| row[j]).map(rescale).collect();
        if scores.is_empty() {
            table.excluded_videos.push(video.clone());
            continue;
        }
        let stats = VideoStats::from_scores(video.clone(), &scores);
        table.rows.push(MosRow {
            video_id: video.clone(),
            mos: stats.mean,
            rater_count: stats.count,
            stddev: stats.stddev,
            scores,
        });
    }
    table
}

/// Subject rejection followed by MOS over the retained subjects.
pub fn mos_pipeline(ratings: &RatingsMatrix) -> Result<(Rejection, MosTable)> {
    let rejection = reject_subjects(ratings)?;
    let table = compute_mos(&ratings.with_subjects(&rejection.retained));
    Ok((rejection, table))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterScore {
    pub subject_id: String,
    /// SRCC against the all-candidate MOS; NaN when undefined.
    pub srcc: f64,
}

/// Candidates ranked by SRCC against the MOS of all candidates; NaN last,
/// ties by subject id.
pub fn rank_raters(training: &RatingsMatrix) -> Vec<RaterScore> {
    let mos = compute_mos(training);
    let by_id = mos.mos_by_id();
    let mut ranked: Vec<RaterScore> = training
        .subjects
        .iter()
        .zip(&training.scores)
        .map(|(subject, row)| {
            let (own, reference): (Vec<f64>, Vec<f64>) = training
                .videos
                .iter()
                .zip(row)
                .filter_map(|(v, s)| Some((s.as_ref().copied()?, *by_id.get(v.as_str())?)))
                .unzip();
            let value = if own.len() < 2 {
                f64::NAN
            } else {
                srcc(&own, &reference)
            };
            RaterScore {
                subject_id: subject.clone(),
                srcc: value,
            }
        })
        .collect();
    ranked.sort_by(|a, b| {
        match (a.srcc.is_nan(), b.srcc.is_nan()) {
            (false, false) => b.srcc.total_cmp(&a.srcc),
            (x, y) => x.cmp(&y),
        }
        .then_with(|| a.subject_id.cmp(&b.subject_id))
    });
    ranked
}

/// The `k` candidates whose scores agree best with the group MOS.
pub fn screen_raters(training: &RatingsMatrix, k: usize) -> Result<Vec<String>> {
    if k > training.subjects.len() {
        return Err(Error::invalid(format!(
            "cannot select {k} of {} subjects",
            training.subjects.len()
        )));
    }
    Ok(rank_raters(training)
        .into_iter()
        .take(k)
        .map(|r| r.subject_id)
        .collect())
}
