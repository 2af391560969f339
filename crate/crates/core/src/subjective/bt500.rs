//! Observer screening after ITU-R BT.500-11 Annex 2, on raw scores.
//!
//! For each video `j` with mean `u_j`, sample deviation `S_j` and kurtosis
//! `beta2_j = m4 / m2^2`, the bound is `2 S_j` when `beta2_j` lies in
//! `[2, 4]` (roughly normal) and `sqrt(20) S_j` otherwise. A subject's score
//! at or above `u_j + bound` counts toward `P`, at or below `u_j - bound`
//! toward `Q`. The subject is rejected when `(P + Q) / N > 0.05` and
//! `|P - Q| / (P + Q) < 0.3`.

use serde::{Deserialize, Serialize};

use super::RatingsMatrix;
use crate::error::{Error, Result};

pub const OUTLIER_FRACTION: f64 = 0.05;
pub const BALANCE_LIMIT: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectScreening {
    pub subject_id: String,
    pub ratings: usize,
    pub above: usize,
    pub below: usize,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub retained: Vec<String>,
    pub rejected: Vec<String>,
    pub log: Vec<SubjectScreening>,
}

struct VideoBounds {
    mean: f64,
    bound: f64,
}

fn video_bounds(scores: &[f64]) -> Option<VideoBounds> {
    let n = scores.len();
    if n < 2 {
        return None;
    }
    let mean = scores.iter().sum::<f64>() / n as f64;
    let m2 = scores.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / n as f64;
    if m2 == 0.0 {
        return None;
    }
    let m4 = scores.iter().map(|u| (u - mean).powi(4)).sum::<f64>() / n as f64;
    let kurtosis = m4 / (m2 * m2);
    let sd = (m2 * n as f64 / (n - 1) as f64).sqrt();
    let factor = if (2.0..=4.0).contains(&kurtosis) {
        2.0
    } else {
        20f64.sqrt()
    };
    Some(VideoBounds {
        mean,
        bound: factor * sd,
    })
}

pub fn reject_subjects(ratings: &RatingsMatrix) -> Result<Rejection> {
    let subjects = ratings.subjects();
    if subjects.len() < 3 {
        return Err(Error::invalid(format!(
            "subject rejection needs at least 3 subjects, got {}",
            subjects.len()
        )));
    }
    let bounds: Vec<Option<VideoBounds>> = (0..ratings.videos().len())
        .map(|j| video_bounds(&ratings.video_scores(j)))
        .collect();
    let mut out = Rejection {
        retained: Vec::new(),
        rejected: Vec::new(),
        log: Vec::new(),
    };
    for (i, subject) in subjects.iter().enumerate() {
        let (mut above, mut below) = (0, 0);
        for (score, b) in ratings.row(i).iter().zip(&bounds) {
            let (Some(u), Some(b)) = (score, b) else {
                continue;
            };
            if *u >= b.mean + b.bound {
                above += 1;
            }
            if *u <= b.mean - b.bound {
                below += 1;
            }
        }
        let n = ratings.subject_count(i);
        let flagged = above + below;
        let rejected = n > 0
            && flagged as f64 / n as f64 > OUTLIER_FRACTION
            && (above as f64 - below as f64).abs() / (flagged as f64) < BALANCE_LIMIT;
        if rejected {
            out.rejected.push(subject.clone());
        } else {
            out.retained.push(subject.clone());
        }
        out.log.push(SubjectScreening {
            subject_id: subject.clone(),
            ratings: n,
            above,
            below,
            rejected,
        });
    }
    Ok(out)
}
