//! Timing sidecar files.
//!
//! ```text
//! # timebase=1/1000
//! # framerate=25/1
//! # resolution=1920x1080
//! # nominal_duration=40
//! # frame_indexing=1-based
//! frame_index,pts,duration_flag
//! 1,0,normal
//! ```
//!
//! `duration_flag` classifies the interval from a frame to its successor:
//! `stall` when longer than the nominal duration, `accelerated` when shorter
//! by more than one tick, otherwise `normal`. The last frame is `normal`.
//! The same preamble heads render schedule files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::Deserialize;

use super::{format_rational, parse_framerate, FrameTimeline, Rational, Resolution, Timebase};
use crate::error::{Error, Result};

pub const SIDECAR_HEADER: &str = "frame_index,pts,duration_flag";

/// Metadata carried by the `# key=value` lines at the top of sidecar and
/// schedule files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preamble {
    pub timebase: Timebase,
    pub framerate: Rational,
    pub resolution: Resolution,
    pub nominal_duration: i64,
}

impl Preamble {
    pub fn of(timeline: &FrameTimeline) -> Self {
        Preamble {
            timebase: timeline.timebase(),
            framerate: timeline.framerate(),
            resolution: timeline.resolution(),
            nominal_duration: timeline.nominal_duration(),
        }
    }

    pub fn render(&self) -> String {
        format!(
            "# timebase={}\n# framerate={}\n# resolution={}\n# nominal_duration={}\n# frame_indexing=1-based\n",
            self.timebase,
            format_rational(&self.framerate),
            self.resolution,
            self.nominal_duration
        )
    }

    /// Parses the comment block, returning the preamble and the remaining
    /// text together with the line number it starts at.
    pub fn split(text: &str) -> Result<(Preamble, &str, usize)> {
        let mut fields = BTreeMap::new();
        let mut offset = 0;
        let mut line_no = 1;
        for line in text.split_inclusive('\n') {
            let trimmed = line.trim();
            if let Some(body) = trimmed.strip_prefix('#') {
                if let Some((k, v)) = body.split_once('=') {
                    fields.insert(k.trim().to_string(), v.trim().to_string());
                }
            } else if !trimmed.is_empty() {
                break;
            }
            offset += line.len();
            line_no += 1;
        }
        let get = |key: &str| {
            fields
                .get(key)
                .ok_or_else(|| Error::parse(1, format!("missing preamble field {key}")))
        };
        let at_line = |e: Error| Error::parse(1, e.to_string());
        let preamble = Preamble {
            timebase: get("timebase")?.parse().map_err(at_line)?,
            framerate: parse_framerate(get("framerate")?).map_err(at_line)?,
            resolution: get("resolution")?.parse().map_err(at_line)?,
            nominal_duration: get("nominal_duration")?
                .parse()
                .map_err(|_| Error::parse(1, "nominal_duration is not an integer"))?,
        };
        if let Some(idx) = fields.get("frame_indexing") {
            if idx != "1-based" {
                return Err(Error::parse(1, format!("unsupported frame_indexing {idx}")));
            }
        }
        Ok((preamble, &text[offset..], line_no))
    }
}

/// Interval class used by the `duration_flag` column.
pub fn interval_flag(interval: i64, nominal: i64) -> &'static str {
    if interval > nominal {
        "stall"
    } else if interval < nominal - 1 {
        "accelerated"
    } else {
        "normal"
    }
}

pub fn render_sidecar(timeline: &FrameTimeline) -> String {
    let mut out = Preamble::of(timeline).render();
    out.push_str(SIDECAR_HEADER);
    out.push('\n');
    let pts = timeline.pts();
    let nominal = timeline.nominal_duration();
    for (i, &p) in pts.iter().enumerate() {
        let flag = pts
            .get(i + 1)
            .map_or("normal", |next| interval_flag(next - p, nominal));
        let _ = writeln!(out, "{},{},{}", i + 1, p, flag);
    }
    out
}

pub fn write_sidecar<W: Write>(mut w: W, timeline: &FrameTimeline) -> Result<()> {
    w.write_all(render_sidecar(timeline).as_bytes())?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct SidecarRow {
    frame_index: usize,
    pts: i64,
    duration_flag: String,
}

/// Reads a sidecar. The returned timeline is not validated.
pub fn parse_sidecar(text: &str) -> Result<FrameTimeline> {
    let (preamble, body, first_line) = Preamble::split(text)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != SIDECAR_HEADER {
        return Err(Error::parse(
            first_line,
            format!("expected header {SIDECAR_HEADER:?}"),
        ));
    }
    let mut pts = Vec::new();
    for (row_no, row) in reader.deserialize::<SidecarRow>().enumerate() {
        let line = first_line + row_no + 1;
        let row = row.map_err(|e| Error::parse(line, e.to_string()))?;
        if row.frame_index != row_no + 1 {
            return Err(Error::parse(
                line,
                format!("frame_index {} out of sequence", row.frame_index),
            ));
        }
        if !matches!(
            row.duration_flag.as_str(),
            "normal" | "stall" | "accelerated"
        ) {
            return Err(Error::parse(
                line,
                format!("unknown duration_flag {:?}", row.duration_flag),
            ));
        }
        pts.push(row.pts);
    }
    Ok(FrameTimeline::new(
        pts,
        preamble.timebase,
        preamble.framerate,
        preamble.nominal_duration,
        preamble.resolution,
    ))
}

pub fn read_sidecar<R: Read>(mut r: R) -> Result<FrameTimeline> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    parse_sidecar(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_uniform_timeline() {
        let t = FrameTimeline::uniform(
            3,
            Rational::from_integer(25),
            Timebase::MILLIS,
            Resolution::HD_1080,
        )
        .unwrap();
        let expected = "# timebase=1/1000\n# framerate=25/1\n# resolution=1920x1080\n# nominal_duration=40\n# frame_indexing=1-based\nframe_index,pts,duration_flag\n1,0,normal\n2,40,normal\n3,80,normal\n";
        assert_eq!(render_sidecar(&t), expected);
        assert_eq!(parse_sidecar(expected).unwrap(), t);
    }

    #[test]
    fn flags_stalls_and_acceleration() {
        let t = FrameTimeline::new(
            vec![0, 20, 140, 180],
            Timebase::MILLIS,
            Rational::from_integer(25),
            40,
            Resolution::HD_720,
        );
        let text = render_sidecar(&t);
        assert!(text.ends_with("1,0,accelerated\n2,20,stall\n3,140,normal\n4,180,normal\n"));
    }

    #[test]
    fn rejects_missing_preamble_and_gaps() {
        assert!(parse_sidecar("frame_index,pts,duration_flag\n1,0,normal\n").is_err());
        let gap = "# timebase=1/1000\n# framerate=25/1\n# resolution=1920x1080\n# nominal_duration=40\nframe_index,pts,duration_flag\n1,0,normal\n3,40,normal\n";
        assert!(matches!(
            parse_sidecar(gap),
            Err(Error::Parse { line: 7, .. })
        ));
    }
}
