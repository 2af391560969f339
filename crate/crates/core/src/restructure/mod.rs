//! Stall detection and render schedules.
//!
//! A stall is any interval `p[i+1] - p[i]` longer than the nominal frame
//! duration. The frame before the gap is read `floor(gap / nominal)` times in
//! total, at `nominal` spacing, and the next frame renders at its own PTS.

mod schedule_file;

pub use schedule_file::{parse_schedule, render_schedule, SCHEDULE_HEADER};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::timeline::FrameTimeline;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryFlag {
    Normal,
    StallRepeat,
    Accelerated,
}

impl EntryFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryFlag::Normal => "normal",
            EntryFlag::StallRepeat => "stall_repeat",
            EntryFlag::Accelerated => "accelerated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "normal" => Some(EntryFlag::Normal),
            "stall_repeat" => Some(EntryFlag::StallRepeat),
            "accelerated" => Some(EntryFlag::Accelerated),
            _ => None,
        }
    }
}

impl fmt::Display for EntryFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    /// 1-based source frame index.
    pub source_frame_index: usize,
    pub render_pts: i64,
    pub flag: EntryFlag,
}

/// Restructured frame sequence for playback.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderSchedule {
    pub entries: Vec<ScheduleEntry>,
    pub nominal_duration: i64,
}

impl RenderSchedule {
    pub fn entry_count(&self) -> usize {
        self.entries.len()
    }

    pub fn render_pts(&self) -> impl Iterator<Item = i64> + '_ {
        self.entries.iter().map(|e| e.render_pts)
    }

    pub fn source_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.source_frame_index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectedStall {
    /// Frame shown when playback froze (the frame before the gap).
    pub stall_frame_index: usize,
    pub gap_ticks: i64,
    /// Total reads of the stall frame, `floor(gap / nominal)`.
    pub repeat_count: i64,
}

impl DetectedStall {
    /// Reads beyond the frame's own slot, i.e. the inserted repeat entries.
    pub fn inserted_repeats(&self) -> i64 {
        self.repeat_count - 1
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StallReport {
    pub stalls: Vec<DetectedStall>,
}

pub fn detect_stalls(timeline: &FrameTimeline) -> StallReport {
    let nominal = timeline.nominal_duration();
    let stalls = timeline
        .pts()
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| {
            let gap = w[1] - w[0];
            (gap > nominal).then_some(DetectedStall {
                stall_frame_index: i + 1,
                gap_ticks: gap,
                repeat_count: gap / nominal,
            })
        })
        .collect();
    StallReport { stalls }
}

/// Expands a timeline into its render schedule.
///
/// Stall frames are inserted, never written over later entries. An entry is
/// flagged `accelerated` when it follows the previous entry by less than
/// `nominal - 1` ticks.
pub fn restructure(timeline: &FrameTimeline) -> RenderSchedule {
    let nominal = timeline.nominal_duration();
    let pts = timeline.pts();
    let mut entries: Vec<ScheduleEntry> = Vec::with_capacity(pts.len());
    let push = |entries: &mut Vec<ScheduleEntry>, index: usize, at: i64, repeat: bool| {
        let flag = if repeat {
            EntryFlag::StallRepeat
        } else {
            match entries.last() {
                Some(prev) if at - prev.render_pts < nominal - 1 => EntryFlag::Accelerated,
                _ => EntryFlag::Normal,
            }
        };
        entries.push(ScheduleEntry {
            source_frame_index: index,
            render_pts: at,
            flag,
        });
    };
    for (i, w) in pts.windows(2).enumerate() {
        let frame = i + 1;
        push(&mut entries, frame, w[0], false);
        let gap = w[1] - w[0];
        if gap > nominal {
            for j in 1..gap / nominal {
                push(&mut entries, frame, w[0] + nominal * j, true);
            }
        }
    }
    if let Some(&last) = pts.last() {
        push(&mut entries, pts.len(), last, false);
    }
    RenderSchedule {
        entries,
        nominal_duration: nominal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::{Rational, Resolution, Timebase};

    fn timeline(pts: Vec<i64>) -> FrameTimeline {
        FrameTimeline::new(
            pts,
            Timebase::MILLIS,
            Rational::from_integer(25),
            40,
            Resolution::HD_1080,
        )
    }

    #[test]
    fn uniform_has_no_stalls() {
        let t = timeline(vec![0, 40, 80, 120]);
        assert!(detect_stalls(&t).stalls.is_empty());
        let s = restructure(&t);
        assert_eq!(s.entry_count(), 4);
        assert!(s.entries.iter().all(|e| e.flag == EntryFlag::Normal));
        assert_eq!(s.render_pts().collect::<Vec<_>>(), t.pts());
    }

    #[test]
    fn single_gap() {
        let t = timeline(vec![0, 40, 160, 200]);
        assert_eq!(
            detect_stalls(&t).stalls,
            vec![DetectedStall {
                stall_frame_index: 2,
                gap_ticks: 120,
                repeat_count: 3
            }]
        );
        let s = restructure(&t);
        let got: Vec<_> = s
            .entries
            .iter()
            .map(|e| (e.source_frame_index, e.render_pts, e.flag))
            .collect();
        use EntryFlag::*;
        assert_eq!(
            got,
            vec![
                (1, 0, Normal),
                (2, 40, Normal),
                (2, 80, StallRepeat),
                (2, 120, StallRepeat),
                (3, 160, Normal),
                (4, 200, Normal)
            ]
        );
    }

    #[test]
    fn short_intervals_are_not_stalls() {
        let t = timeline(vec![0, 40, 60, 80, 100, 140]);
        assert!(detect_stalls(&t).stalls.is_empty());
        let s = restructure(&t);
        assert_eq!(s.entries[2].flag, EntryFlag::Accelerated);
        assert_eq!(s.entries[5].flag, EntryFlag::Normal);
    }

    #[test]
    fn exact_nominal_gap_is_not_a_stall() {
        let t = timeline(vec![0, 40, 80]);
        assert!(detect_stalls(&t).stalls.is_empty());
    }

    #[test]
    fn one_tick_rounding_is_not_acceleration() {
        let t = timeline(vec![0, 40, 79, 120]);
        assert!(restructure(&t)
            .entries
            .iter()
            .all(|e| e.flag == EntryFlag::Normal));
    }

    #[test]
    fn remainder_does_not_add_a_fractional_repeat() {
        // gap of 2.5 nominal durations
        let t = timeline(vec![0, 100, 140]);
        let s = restructure(&t);
        assert_eq!(s.render_pts().collect::<Vec<_>>(), vec![0, 40, 100, 140]);
        assert_eq!(detect_stalls(&t).stalls[0].repeat_count, 2);
    }
}
