//! Output PTS synthesis for stalled, catch-up playback.
//!
//! The source PTS track is rebuilt frame by frame. Every frame after a stall
//! frame is pushed back by the accumulated stall delay, and the frames that
//! follow each stall are presented at `nominal / AR` spacing until the delay
//! has been won back. The catch-up window ends early at the frame before the
//! next stall, or at frame `n - 1` for the last stall.

use serde::Serialize;

use super::recipe::{AccelerationRate, DistortionRecipe};
use crate::error::{Error, Result};
use crate::timeline::{round_half_up, FrameTimeline, Rational, Timebase};

/// Stall onset and length, free of any category constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StallTiming {
    pub onset: Rational,
    pub duration: Rational,
}

impl StallTiming {
    pub fn from_seconds(onset: f64, duration: f64) -> Self {
        StallTiming {
            onset: crate::timeline::seconds_to_rational(onset),
            duration: crate::timeline::seconds_to_rational(duration),
        }
    }
}

/// Intermediate values of one synthesis run. Frame indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionPlan {
    pub stall_frame_indices: Vec<usize>,
    pub pts_delays_ticks: Vec<i64>,
    /// One value per frame.
    pub cumulative_delays_ticks: Vec<i64>,
    /// Catch-up frame counts, rounded.
    pub catchup_counts: Vec<i64>,
    /// Last frame of each catch-up window.
    pub catchup_end_indices: Vec<usize>,
    /// Whether each catch-up window was cut short.
    pub catchup_truncated: Vec<bool>,
    /// Frames whose incoming interval is shortened.
    pub accelerated_frame_set: Vec<usize>,
    /// Catch-up PTS before delays are added, rounded to ticks.
    pub pre_delay_pts: Vec<i64>,
}

/// `round(onset * framerate)` for each stall, clamped to `[1, frame_count]`.
pub fn stall_frame_indices(
    onsets: &[Rational],
    framerate: Rational,
    frame_count: usize,
) -> Result<Vec<usize>> {
    let mut out: Vec<usize> = Vec::with_capacity(onsets.len());
    for onset in onsets {
        if *onset < Rational::from_integer(0) {
            return Err(Error::InvalidRecipe(format!(
                "negative stall onset {onset}"
            )));
        }
        let idx = round_half_up(onset * framerate).clamp(1, frame_count as i64) as usize;
        if let Some(&prev) = out.last() {
            if idx <= prev {
                return Err(Error::InvalidRecipe(format!(
                    "stalls collide at frame {idx}"
                )));
            }
        }
        out.push(idx);
    }
    Ok(out)
}

/// Stall lengths converted to ticks.
pub fn pts_delays(durations: &[Rational], timebase: Timebase) -> Vec<i64> {
    durations
        .iter()
        .map(|d| round_half_up(timebase.ticks_exact(*d)))
        .collect()
}

/// Per-frame accumulated delay: frame `i` carries the sum of every `d_k` whose
/// stall frame precedes it.
pub fn cumulative_delays(stall_frames: &[usize], delays: &[i64], frame_count: usize) -> Vec<i64> {
    let mut out = vec![0; frame_count];
    let mut acc = 0;
    let mut k = 0;
    for (i, slot) in out.iter_mut().enumerate() {
        let frame = i + 1;
        while k < stall_frames.len() && stall_frames[k] < frame {
            acc += delays[k];
            k += 1;
        }
        *slot = acc;
    }
    out
}

/// Frames needed to absorb a stall of `duration` at rate `ar`:
/// `round(duration * ar * framerate / (ar - 1))`, or 0 when `ar` is 1.
pub fn catchup_frame_count(duration: Rational, ar: Rational, framerate: Rational) -> Result<i64> {
    let one = Rational::from_integer(1);
    if ar < one {
        return Err(Error::invalid(format!("acceleration rate {ar} is below 1")));
    }
    if ar == one {
        return Ok(0);
    }
    Ok(round_half_up(duration * ar * framerate / (ar - one)))
}

/// Applies a recipe to a uniform source timeline.
pub fn synthesize_output_pts(
    timeline: &FrameTimeline,
    recipe: &DistortionRecipe,
) -> Result<(FrameTimeline, DistortionPlan)> {
    recipe.validate()?;
    let duration = timeline.duration_seconds();
    if let Some(s) = recipe.stalls.iter().find(|s| s.onset_seconds > duration) {
        return Err(Error::InvalidRecipe(format!(
            "stall onset {}s is past the {duration}s video",
            s.onset_seconds
        )));
    }
    let stalls: Vec<StallTiming> = recipe
        .onsets()
        .into_iter()
        .zip(recipe.durations())
        .map(|(onset, duration)| StallTiming { onset, duration })
        .collect();
    synthesize_stalls(timeline, &stalls, recipe.ar)
}

/// Core of [`synthesize_output_pts`] for arbitrary stall timings.
pub fn synthesize_stalls(
    timeline: &FrameTimeline,
    stalls: &[StallTiming],
    ar: AccelerationRate,
) -> Result<(FrameTimeline, DistortionPlan)> {
    if let Some(v) = timeline.validate().first() {
        return Err(Error::invalid(format!("source timeline: {v}")));
    }
    let nominal = timeline.nominal_duration();
    if timeline.pts().windows(2).any(|w| w[1] - w[0] != nominal) {
        return Err(Error::invalid("source timeline is not uniform"));
    }
    if stalls
        .iter()
        .any(|s| s.duration <= Rational::from_integer(0))
    {
        return Err(Error::InvalidRecipe(
            "stall durations must be positive".into(),
        ));
    }
    let n = timeline.frame_count();
    let onsets: Vec<Rational> = stalls.iter().map(|s| s.onset).collect();
    let durations: Vec<Rational> = stalls.iter().map(|s| s.duration).collect();

    let sf = stall_frame_indices(&onsets, timeline.framerate(), n)?;
    let d = pts_delays(&durations, timeline.timebase());
    let ad = cumulative_delays(&sf, &d, n);
    let rate = ar.ratio();
    let qn = durations
        .iter()
        .map(|t| catchup_frame_count(*t, rate, timeline.framerate()))
        .collect::<Result<Vec<_>>>()?;

    // Acceleration weight per frame in [0, 1]; 1 shortens the frame's incoming
    // interval to nominal / AR. The exact window length d*AR/(nominal*(AR-1))
    // can end mid-frame, in which case the last frame is partially shortened
    // so the window wins back exactly d ticks.
    let one = Rational::from_integer(1);
    let mut weight = vec![Rational::from_integer(0); n + 1];
    let mut qne = Vec::with_capacity(sf.len());
    let mut truncated = Vec::with_capacity(sf.len());
    let mut naf = Vec::new();
    for (j, &start) in sf.iter().enumerate() {
        let bound = match sf.get(j + 1) {
            Some(&next) => next - 1,
            None => n - 1,
        };
        if !ar.is_catch_up() {
            qne.push(start);
            truncated.push(false);
            continue;
        }
        let window =
            Rational::from_integer(d[j]) * rate / (Rational::from_integer(nominal) * (rate - one));
        let full = window.floor().to_integer() as usize;
        let partial = window.fract();
        let span = full + usize::from(partial > Rational::from_integer(0));
        let end = (start + span).min(bound).max(start);
        truncated.push(start + span > bound);
        qne.push(end);
        for (k, frame) in (start + 1..=end).enumerate() {
            weight[frame] = if k < full { one } else { partial };
            naf.push(frame);
        }
    }

    let step = Rational::from_integer(nominal);
    let saved_per_frame = step * (one - rate.recip());
    let mut sp = Vec::with_capacity(n);
    let mut acc = Rational::from_integer(timeline.pts()[0]);
    sp.push(acc);
    for frame in 2..=n {
        acc += step - weight[frame] * saved_per_frame;
        sp.push(acc);
    }

    let mut out = Vec::with_capacity(n);
    for (i, s) in sp.iter().enumerate() {
        let p = round_half_up(*s + Rational::from_integer(ad[i]));
        if let Some(&prev) = out.last() {
            if p <= prev {
                return Err(Error::SynthesisDegenerate { frame: i + 1 });
            }
        }
        out.push(p);
    }

    let plan = DistortionPlan {
        stall_frame_indices: sf,
        pts_delays_ticks: d,
        cumulative_delays_ticks: ad,
        catchup_counts: qn,
        catchup_end_indices: qne,
        catchup_truncated: truncated,
        accelerated_frame_set: naf,
        pre_delay_pts: sp.into_iter().map(round_half_up).collect(),
    };
    Ok((timeline.with_pts(out), plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::modes::{DurationCategory, ModeId};
    use crate::distortion::recipe::{Batch, StallEvent};
    use crate::timeline::Resolution;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn secs(s: f64) -> Rational {
        crate::timeline::seconds_to_rational(s)
    }

    fn uniform(n: usize, fps: i64) -> FrameTimeline {
        FrameTimeline::uniform(n, r(fps), Timebase::MILLIS, Resolution::HD_1080).unwrap()
    }

    #[test]
    fn stall_indices() {
        assert_eq!(
            stall_frame_indices(&[secs(2.0)], r(25), 250).unwrap(),
            vec![50]
        );
        assert_eq!(
            stall_frame_indices(&[secs(1.0), secs(3.0)], r(20), 200).unwrap(),
            vec![20, 60]
        );
        assert!(matches!(
            stall_frame_indices(&[secs(0.02), secs(0.03)], r(25), 250),
            Err(Error::InvalidRecipe(_))
        ));
        // clamp at both ends
        assert_eq!(
            stall_frame_indices(&[secs(0.0)], r(25), 10).unwrap(),
            vec![1]
        );
        assert_eq!(
            stall_frame_indices(&[secs(99.0)], r(25), 10).unwrap(),
            vec![10]
        );
    }

    #[test]
    fn delays_in_ticks() {
        assert_eq!(pts_delays(&[secs(0.5)], Timebase::MILLIS), vec![500]);
        assert_eq!(
            pts_delays(&[secs(1.0)], Timebase::new(1, 90_000).unwrap()),
            vec![90_000]
        );
        assert_eq!(
            pts_delays(&[secs(1.5), secs(3.0)], Timebase::MILLIS),
            vec![1500, 3000]
        );
    }

    #[test]
    fn cumulative_delay_steps() {
        assert_eq!(
            cumulative_delays(&[2, 4], &[100, 50], 6),
            vec![0, 0, 100, 100, 150, 150]
        );
        assert_eq!(cumulative_delays(&[1], &[7], 3), vec![0, 7, 7]);
        assert_eq!(cumulative_delays(&[], &[], 4), vec![0, 0, 0, 0]);
    }

    #[test]
    fn catchup_counts() {
        assert_eq!(
            catchup_frame_count(r(1), Rational::new(5, 4), r(20)).unwrap(),
            100
        );
        assert_eq!(
            catchup_frame_count(r(2), Rational::new(9, 4), r(30)).unwrap(),
            108
        );
        assert_eq!(catchup_frame_count(r(5), r(1), r(25)).unwrap(), 0);
        assert!(catchup_frame_count(r(5), Rational::new(9, 10), r(25)).is_err());
    }

    #[test]
    fn no_stalls_is_identity() {
        let t = uniform(20, 25);
        let (out, plan) =
            synthesize_stalls(&t, &[], AccelerationRate::from_f64(2.25).unwrap()).unwrap();
        assert_eq!(out, t);
        assert!(plan.accelerated_frame_set.is_empty());
    }

    #[test]
    fn unit_rate_adds_delays_only() {
        let t = uniform(250, 25);
        let recipe = DistortionRecipe {
            mode_id: ModeId::B2,
            stalls: vec![
                StallEvent {
                    onset_seconds: 2.0,
                    duration_seconds: 0.5,
                    category: DurationCategory::Short,
                },
                StallEvent {
                    onset_seconds: 6.3,
                    duration_seconds: 2.5,
                    category: DurationCategory::Medium,
                },
            ],
            ar: AccelerationRate::NONE,
            crf: Some(27),
            seed: 0,
            source_id: None,
            batch: Batch::HdBatch1,
        };
        let (out, plan) = synthesize_output_pts(&t, &recipe).unwrap();
        let expected: Vec<i64> = t
            .pts()
            .iter()
            .zip(&plan.cumulative_delays_ticks)
            .map(|(p, a)| p + a)
            .collect();
        assert_eq!(out.pts(), expected.as_slice());
        assert_eq!(plan.stall_frame_indices, vec![50, 158]);
        assert_eq!(plan.catchup_end_indices, vec![50, 158]);
    }

    #[test]
    fn truncated_window_stops_before_next_stall() {
        let t = uniform(100, 25);
        let stalls = [
            StallTiming::from_seconds(0.4, 1.0),
            StallTiming::from_seconds(0.8, 0.5),
        ];
        let ar = AccelerationRate::from_f64(1.5).unwrap();
        let (out, plan) = synthesize_stalls(&t, &stalls, ar).unwrap();
        assert_eq!(plan.stall_frame_indices, vec![10, 20]);
        // 1000 ticks at AR 1.5 needs 75 frames; only frames 11..=19 are available
        assert_eq!(plan.catchup_end_indices[0], 19);
        assert!(plan.catchup_truncated[0]);
        assert_eq!(plan.catchup_end_indices[1], 20 + 38);
        assert!(!plan.catchup_truncated[1]);
        assert!(out.validate().is_empty());
    }

    #[test]
    fn rejects_jittered_source() {
        let t = FrameTimeline::new(
            vec![0, 40, 81, 120],
            Timebase::MILLIS,
            r(25),
            40,
            Resolution::HD_720,
        );
        assert!(synthesize_stalls(&t, &[], AccelerationRate::NONE).is_err());
    }

    #[test]
    fn onset_past_end_is_invalid() {
        let t = uniform(50, 25);
        let mut recipe =
            crate::distortion::sample_recipe(ModeId::A1, Batch::HdBatch1, 0, 10.0).unwrap();
        recipe.stalls[0].onset_seconds = 9.0;
        assert!(matches!(
            synthesize_output_pts(&t, &recipe),
            Err(Error::InvalidRecipe(_))
        ));
    }
}
