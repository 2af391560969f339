//! Newline-delimited JSON corpus manifest. Relative paths resolve against the
//! manifest's directory.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qoe_forge::distortion::{Batch, ModeId, PlannedVideo};
use qoe_forge::timeline::Resolution;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub video_id: String,
    pub source_id: String,
    #[serde(with = "resolution_text")]
    pub resolution: Resolution,
    pub framerate: u32,
    pub crf: Option<u32>,
    /// `None` for clean videos.
    pub batch: Option<Batch>,
    pub mode: Option<ModeId>,
    /// Timing sidecar of the pristine source.
    pub source: PathBuf,
    /// Written by `distort` for stalled videos.
    pub recipe: Option<PathBuf>,
    pub sidecar: PathBuf,
    pub schedule: PathBuf,
    /// Frame images of the source, handed to the encoder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_frames: Option<PathBuf>,
    /// Frame images served to the rating station, in frame order by file name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<PathBuf>,
}

impl ManifestEntry {
    pub fn is_stalled(&self) -> bool {
        self.mode.is_some()
    }

    pub fn from_plan(v: &PlannedVideo) -> Self {
        let stalled = v.is_stalled();
        ManifestEntry {
            video_id: v.video_id.clone(),
            source_id: v.source_id.clone(),
            resolution: v.resolution,
            framerate: v.framerate,
            crf: Some(v.crf),
            batch: v.batch,
            mode: v.mode.map(|m| m.mode),
            source: PathBuf::from(format!("sources/{}.csv", v.source_id)),
            recipe: stalled.then(|| PathBuf::from(format!("recipes/{}.json", v.video_id))),
            sidecar: PathBuf::from(format!("sidecars/{}.csv", v.video_id)),
            schedule: PathBuf::from(format!("schedules/{}.csv", v.video_id)),
            source_frames: Some(PathBuf::from(format!("source_frames/{}", v.source_id))),
            frames: Some(PathBuf::from(format!("frames/{}", v.video_id))),
        }
    }
}

mod resolution_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use qoe_forge::timeline::Resolution;

    pub fn serialize<S: Serializer>(r: &Resolution, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(r)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Resolution, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    /// Directory relative paths are resolved against.
    pub dir: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn parse(text: &str, dir: impl Into<PathBuf>) -> CliResult<Self> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: ManifestEntry = serde_json::from_str(line)
                .map_err(|e| CliError::input(format!("manifest line {}: {e}", i + 1)))?;
            if !seen.insert(entry.video_id.clone()) {
                return Err(CliError::input(format!(
                    "manifest line {}: duplicate video_id {}",
                    i + 1,
                    entry.video_id
                )));
            }
            entries.push(entry);
        }
        Ok(Manifest {
            dir: dir.into(),
            entries,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, dir).map_err(|e| e.context(path.display()))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let line = serde_json::to_string(e).expect("manifest entries serialize");
            let _ = writeln!(out, "{line}");
        }
        out
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.dir.join(p)
        }
    }

    pub fn get(&self, video_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.video_id == video_id)
    }
}
