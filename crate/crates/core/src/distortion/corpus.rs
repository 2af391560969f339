//! Corpus layout: which distorted and clean videos exist.

use serde::{Deserialize, Serialize};

use super::modes::{enumerate_stall_modes, StallModeTemplate, MODE_SLOTS};
use super::recipe::Batch;
use crate::timeline::Resolution;

pub const CORPUS_FRAMERATES: [u32; 3] = [20, 25, 30];

/// One planned corpus video. `batch` and `mode` are `None` for clean videos.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedVideo {
    pub video_id: String,
    pub source_id: String,
    pub resolution: Resolution,
    pub framerate: u32,
    pub crf: u32,
    pub batch: Option<Batch>,
    pub mode: Option<StallModeTemplate>,
}

impl PlannedVideo {
    pub fn is_stalled(&self) -> bool {
        self.mode.is_some()
    }
}

fn resolution_tag(r: Resolution) -> String {
    format!("{}p", r.height)
}

pub fn source_id(resolution: Resolution, framerate: u32, index: usize) -> String {
    format!(
        "{}_{}fps_src{:02}",
        resolution_tag(resolution),
        framerate,
        index + 1
    )
}

/// Enumerates every corpus video.
///
/// Each (resolution, frame rate) cell holds `source_count_per_cell` sources.
/// Every source is compressed at each CRF, giving one clean video, and each
/// compressed source receives `modes_per_video` stalling modes per batch of
/// its resolution (two batches at 1080p, one at 720p). Source `s` takes mode
/// slots `s * modes_per_video ..` modulo the 21-slot table, so seven sources
/// with three modes each cover the table exactly once per cell.
pub fn corpus_plan(
    source_count_per_cell: usize,
    crf_set: &[u32],
    modes_per_video: usize,
) -> Vec<PlannedVideo> {
    let modes = enumerate_stall_modes();
    let mut out = Vec::new();
    let layouts: [(Resolution, &[Batch]); 2] = [
        (Resolution::HD_1080, &[Batch::HdBatch1, Batch::HdBatch2]),
        (Resolution::HD_720, &[Batch::SdBatch1]),
    ];
    for (resolution, batches) in layouts {
        for fps in CORPUS_FRAMERATES {
            for s in 0..source_count_per_cell {
                let src = source_id(resolution, fps, s);
                for &crf in crf_set {
                    out.push(PlannedVideo {
                        video_id: format!("{src}_crf{crf}_clean"),
                        source_id: src.clone(),
                        resolution,
                        framerate: fps,
                        crf,
                        batch: None,
                        mode: None,
                    });
                    for &batch in batches {
                        for k in 0..modes_per_video {
                            let template = modes[(s * modes_per_video + k) % MODE_SLOTS];
                            out.push(PlannedVideo {
                                video_id: format!(
                                    "{src}_crf{crf}_{}_{}",
                                    batch_tag(batch),
                                    template.label()
                                ),
                                source_id: src.clone(),
                                resolution,
                                framerate: fps,
                                crf,
                                batch: Some(batch),
                                mode: Some(template),
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

fn batch_tag(batch: Batch) -> &'static str {
    match batch {
        Batch::HdBatch1 | Batch::SdBatch1 => "b1",
        Batch::HdBatch2 => "b2",
    }
}
