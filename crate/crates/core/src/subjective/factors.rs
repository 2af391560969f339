//! MOS grouped by distortion factors.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::MosTable;
use crate::error::{Error, Result};

/// Descriptor of one corpus video, as recorded by the distortion stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoFactors {
    pub video_id: String,
    /// e.g. `1920x1080`.
    pub resolution: String,
    pub framerate: u32,
    pub crf: Option<u32>,
    pub stall_count: usize,
    /// Acceleration rate; `None` for clean videos.
    pub ar: Option<f64>,
    /// Stalling mode id such as `B3`; `None` for clean videos.
    pub mode: Option<String>,
    pub total_stall_seconds: f64,
}

pub const FACTORS: [&str; 6] = [
    "resolution",
    "framerate",
    "crf",
    "stall_count",
    "ar_mode",
    "total_stall_duration",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorGroup {
    pub factor: String,
    pub level: String,
    pub count: usize,
    pub mean_mos: f64,
    /// Counts over `[1,2)`, `[2,3)`, `[3,4)`, `[4,5]`.
    pub histogram: [usize; 4],
}

fn level(factor: &str, v: &VideoFactors) -> String {
    match factor {
        "resolution" => v.resolution.clone(),
        "framerate" => v.framerate.to_string(),
        "crf" => v.crf.map_or_else(|| "none".into(), |c| c.to_string()),
        "stall_count" => v.stall_count.to_string(),
        "ar_mode" => match (&v.mode, v.ar) {
            (Some(mode), Some(ar)) => format!("{ar}x{mode}"),
            _ => "none".into(),
        },
        "total_stall_duration" => format!("{:.1}", v.total_stall_seconds),
        _ => unreachable!("unknown factor {factor}"),
    }
}

fn bin(mos: f64) -> usize {
    (mos.floor() as i64 - 1).clamp(0, 3) as usize
}

/// Orders levels numerically when both parse as numbers.
fn level_order(a: &str, b: &str) -> std::cmp::Ordering {
    let key = |s: &str| s.split('x').next().and_then(|p| p.parse::<f64>().ok());
    match (
        a.parse::<f64>().ok().or_else(|| key(a)),
        b.parse::<f64>().ok().or_else(|| key(b)),
    ) {
        (Some(x), Some(y)) => x.total_cmp(&y).then_with(|| a.cmp(b)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.cmp(b),
    }
}

/// Groups per factor, in [`FACTORS`] order and ascending level order.
pub fn factor_summary(mos: &MosTable, videos: &[VideoFactors]) -> Result<Vec<FactorGroup>> {
    let by_id: HashMap<&str, &VideoFactors> =
        videos.iter().map(|v| (v.video_id.as_str(), v)).collect();
    let mut rows = Vec::with_capacity(mos.rows.len());
    for r in &mos.rows {
        let v = by_id.get(r.video_id.as_str()).ok_or_else(|| {
            Error::invalid(format!("video {} is not in the manifest", r.video_id))
        })?;
        rows.push((*v, r.mos));
    }
    let mut out = Vec::new();
    for factor in FACTORS {
        let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (v, m) in &rows {
            groups.entry(level(factor, v)).or_default().push(*m);
        }
        let mut levels: Vec<_> = groups.into_iter().collect();
        levels.sort_by(|a, b| level_order(&a.0, &b.0));
        for (level, values) in levels {
            let mut histogram = [0; 4];
            for &m in &values {
                histogram[bin(m)] += 1;
            }
            out.push(FactorGroup {
                factor: factor.to_string(),
                level,
                count: values.len(),
                mean_mos: values.iter().sum::<f64>() / values.len() as f64,
                histogram,
            });
        }
    }
    Ok(out)
}

pub fn render_factor_summary(groups: &[FactorGroup]) -> String {
    let mut out = String::from("factor,level,count,mean_mos,hist_1_2,hist_2_3,hist_3_4,hist_4_5\n");
    for g in groups {
        out.push_str(&format!(
            "{},{},{},{:.6},{},{},{},{}\n",
            g.factor,
            g.level,
            g.count,
            g.mean_mos,
            g.histogram[0],
            g.histogram[1],
            g.histogram[2],
            g.histogram[3]
        ));
    }
    out
}
