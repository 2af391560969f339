//! Schedule CSV: the timing sidecar preamble followed by
//! `entry_index,source_frame_index,render_pts,flag` rows.

use std::fmt::Write as _;

use serde::Deserialize;

use super::{EntryFlag, RenderSchedule, ScheduleEntry};
use crate::error::{Error, Result};
use crate::timeline::sidecar::Preamble;

pub const SCHEDULE_HEADER: &str = "entry_index,source_frame_index,render_pts,flag";

pub fn render_schedule(schedule: &RenderSchedule, preamble: &Preamble) -> String {
    let mut out = preamble.render();
    out.push_str(SCHEDULE_HEADER);
    out.push('\n');
    for (i, e) in schedule.entries.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            i + 1,
            e.source_frame_index,
            e.render_pts,
            e.flag
        );
    }
    out
}

#[derive(Deserialize)]
struct Row {
    entry_index: usize,
    source_frame_index: usize,
    render_pts: i64,
    flag: String,
}

pub fn parse_schedule(text: &str) -> Result<(Preamble, RenderSchedule)> {
    let (preamble, body, first_line) = Preamble::split(text)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    if reader.headers()?.iter().collect::<Vec<_>>().join(",") != SCHEDULE_HEADER {
        return Err(Error::parse(
            first_line,
            format!("expected header {SCHEDULE_HEADER:?}"),
        ));
    }
    let mut entries = Vec::new();
    for (k, row) in reader.deserialize::<Row>().enumerate() {
        let line = first_line + k + 1;
        let row = row.map_err(|e| Error::parse(line, e.to_string()))?;
        if row.entry_index != k + 1 {
            return Err(Error::parse(line, "entry_index out of sequence"));
        }
        let flag = EntryFlag::parse(&row.flag)
            .ok_or_else(|| Error::parse(line, format!("unknown flag {:?}", row.flag)))?;
        entries.push(ScheduleEntry {
            source_frame_index: row.source_frame_index,
            render_pts: row.render_pts,
            flag,
        });
    }
    Ok((
        preamble,
        RenderSchedule {
            entries,
            nominal_duration: preamble.nominal_duration,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::restructure::restructure;
    use crate::timeline::{FrameTimeline, Rational, Resolution, Timebase};

    #[test]
    fn round_trips() {
        let t = FrameTimeline::new(
            vec![0, 40, 160, 180, 200],
            Timebase::MILLIS,
            Rational::from_integer(25),
            40,
            Resolution::HD_720,
        );
        let s = restructure(&t);
        let text = render_schedule(&s, &Preamble::of(&t));
        let (p, back) = parse_schedule(&text).unwrap();
        assert_eq!(p, Preamble::of(&t));
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_unknown_flag() {
        let text = "# timebase=1/1000\n# framerate=25/1\n# resolution=1280x720\n# nominal_duration=40\nentry_index,source_frame_index,render_pts,flag\n1,1,0,paused\n";
        assert!(matches!(
            parse_schedule(text),
            Err(Error::Parse { line: 6, .. })
        ));
    }
}
