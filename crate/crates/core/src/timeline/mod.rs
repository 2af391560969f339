//! Per-frame presentation timestamp tracks.
//!
//! A [`FrameTimeline`] stores PTS values as integer ticks of a [`Timebase`].
//! Frame indices are 1-based everywhere in the public interface: frame `i`
//! lives at `pts()[i - 1]`.

pub mod sidecar;

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational used for frame rates, acceleration rates and fractional ticks.
pub type Rational = Ratio<i64>;

/// Seconds per tick, as `numerator / denominator`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Timebase {
    pub numerator: i64,
    pub denominator: i64,
}

impl Timebase {
    pub const MILLIS: Timebase = Timebase {
        numerator: 1,
        denominator: 1000,
    };

    pub fn new(numerator: i64, denominator: i64) -> Result<Self> {
        if numerator < 1 || denominator < 1 {
            return Err(Error::invalid(format!(
                "timebase {numerator}/{denominator} must have positive terms"
            )));
        }
        Ok(Timebase {
            numerator,
            denominator,
        })
    }

    /// Exact number of ticks in `seconds`.
    pub fn ticks_exact(&self, seconds: Rational) -> Rational {
        seconds * Rational::new(self.denominator, self.numerator)
    }

    /// Converts seconds to ticks, rounding half up.
    pub fn seconds_to_ticks(&self, seconds: f64) -> i64 {
        round_half_up(self.ticks_exact(seconds_to_rational(seconds)))
    }

    pub fn ticks_to_seconds(&self, ticks: i64) -> f64 {
        ticks as f64 * self.numerator as f64 / self.denominator as f64
    }
}

impl fmt::Display for Timebase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl FromStr for Timebase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (n, d) = parse_fraction(s)?;
        Timebase::new(n, d)
    }
}

/// Frame size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

impl Resolution {
    pub const HD_1080: Resolution = Resolution {
        width: 1920,
        height: 1080,
    };
    pub const HD_720: Resolution = Resolution {
        width: 1280,
        height: 720,
    };

    pub fn new(width: u32, height: u32) -> Self {
        Resolution { width, height }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (w, h) = s
            .trim()
            .split_once('x')
            .ok_or_else(|| Error::invalid(format!("resolution {s:?} is not WxH")))?;
        let parse = |v: &str| {
            v.parse::<u32>()
                .map_err(|_| Error::invalid(format!("resolution {s:?} is not WxH")))
        };
        Ok(Resolution::new(parse(w)?, parse(h)?))
    }
}

/// Parses `"25/1"`, `"30000/1001"` or a bare integer `"25"`.
pub fn parse_fraction(s: &str) -> Result<(i64, i64)> {
    let s = s.trim();
    let bad = || Error::invalid(format!("{s:?} is not a fraction"));
    match s.split_once('/') {
        Some((n, d)) => Ok((
            n.trim().parse().map_err(|_| bad())?,
            d.trim().parse().map_err(|_| bad())?,
        )),
        None => Ok((s.parse().map_err(|_| bad())?, 1)),
    }
}

pub fn parse_framerate(s: &str) -> Result<Rational> {
    let (n, d) = parse_fraction(s)?;
    if n < 1 || d < 1 {
        return Err(Error::invalid(format!("framerate {s:?} must be positive")));
    }
    Ok(Rational::new(n, d))
}

pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Converts a decimal seconds value to an exact rational at microsecond
/// resolution, so that values like `0.3` behave as written.
pub fn seconds_to_rational(seconds: f64) -> Rational {
    Rational::new((seconds * 1_000_000.0).round() as i64, 1_000_000)
}

/// Rounds half away from zero for non-negative values (half up).
pub fn round_half_up(x: Rational) -> i64 {
    (x + Rational::new(1, 2)).floor().to_integer()
}

/// Ticks per frame implied by `framerate` under `timebase`, rounded to the
/// nearest tick.
pub fn nominal_duration_for(framerate: Rational, timebase: Timebase) -> i64 {
    round_half_up(timebase.ticks_exact(framerate.recip()))
}

/// A video's presentation timing.
///
/// Construction does not check invariants; call [`FrameTimeline::validate`]
/// or use [`FrameTimeline::checked`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameTimeline {
    pts: Vec<i64>,
    timebase: Timebase,
    framerate: Rational,
    nominal_duration: i64,
    resolution: Resolution,
}

/// A broken [`FrameTimeline`] invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    TooFewFrames {
        frame_count: usize,
    },
    /// `pts` of frame `index + 1` is not later than that of frame `index`.
    NonIncreasing {
        index: usize,
    },
    NonPositiveDuration {
        nominal_duration: i64,
    },
    /// `nominal_duration` disagrees with the frame rate by more than a tick.
    DurationMismatch {
        nominal_duration: i64,
        expected: i64,
    },
    InvalidTimebase,
    InvalidFramerate,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewFrames { frame_count } => {
                write!(f, "frame_count {frame_count} < 2")
            }
            Violation::NonIncreasing { index } => {
                write!(f, "non-strictly-increasing pts at index {index}")
            }
            Violation::NonPositiveDuration { nominal_duration } => {
                write!(f, "nominal_duration {nominal_duration} is not positive")
            }
            Violation::DurationMismatch {
                nominal_duration,
                expected,
            } => write!(
                f,
                "duration/framerate mismatch: nominal_duration {nominal_duration}, framerate implies {expected}"
            ),
            Violation::InvalidTimebase => write!(f, "timebase terms must be >= 1"),
            Violation::InvalidFramerate => write!(f, "framerate must be positive"),
        }
    }
}

impl FrameTimeline {
    pub fn new(
        pts: Vec<i64>,
        timebase: Timebase,
        framerate: Rational,
        nominal_duration: i64,
        resolution: Resolution,
    ) -> Self {
        FrameTimeline {
            pts,
            timebase,
            framerate,
            nominal_duration,
            resolution,
        }
    }

    /// Builds a timeline and rejects it if any invariant fails.
    pub fn checked(
        pts: Vec<i64>,
        timebase: Timebase,
        framerate: Rational,
        nominal_duration: i64,
        resolution: Resolution,
    ) -> Result<Self> {
        let timeline = Self::new(pts, timebase, framerate, nominal_duration, resolution);
        let violations = timeline.validate();
        if let Some(first) = violations.first() {
            return Err(Error::invalid(format!("invalid timeline: {first}")));
        }
        Ok(timeline)
    }

    /// Pristine source timing: frame `i` at `(i - 1) * nominal_duration`.
    pub fn uniform(
        frame_count: usize,
        framerate: Rational,
        timebase: Timebase,
        resolution: Resolution,
    ) -> Result<Self> {
        if frame_count < 2 {
            return Err(Error::invalid(format!(
                "uniform timeline needs at least 2 frames, got {frame_count}"
            )));
        }
        if timebase.numerator < 1 || timebase.denominator < 1 {
            return Err(Error::invalid("timebase terms must be >= 1"));
        }
        if *framerate.numer() <= 0 {
            return Err(Error::invalid("framerate must be positive"));
        }
        let nominal = nominal_duration_for(framerate, timebase);
        if nominal < 1 {
            return Err(Error::invalid(format!(
                "framerate {} is too high for timebase {timebase}",
                format_rational(&framerate)
            )));
        }
        let pts = (0..frame_count as i64).map(|i| i * nominal).collect();
        Ok(Self::new(pts, timebase, framerate, nominal, resolution))
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.pts.len() < 2 {
            out.push(Violation::TooFewFrames {
                frame_count: self.pts.len(),
            });
        }
        if let Some(i) = self.pts.windows(2).position(|w| w[1] <= w[0]) {
            out.push(Violation::NonIncreasing { index: i + 1 });
        }
        let timebase_ok = self.timebase.numerator >= 1 && self.timebase.denominator >= 1;
        let framerate_ok = *self.framerate.numer() > 0 && *self.framerate.denom() > 0;
        if !timebase_ok {
            out.push(Violation::InvalidTimebase);
        }
        if !framerate_ok {
            out.push(Violation::InvalidFramerate);
        }
        if self.nominal_duration <= 0 {
            out.push(Violation::NonPositiveDuration {
                nominal_duration: self.nominal_duration,
            });
        } else if timebase_ok && framerate_ok {
            let expected = nominal_duration_for(self.framerate, self.timebase);
            if (self.nominal_duration - expected).abs() > 1 {
                out.push(Violation::DurationMismatch {
                    nominal_duration: self.nominal_duration,
                    expected,
                });
            }
        }
        out
    }

    pub fn frame_count(&self) -> usize {
        self.pts.len()
    }

    pub fn pts(&self) -> &[i64] {
        &self.pts
    }

    /// PTS of 1-based frame `index`.
    pub fn pts_of(&self, index: usize) -> i64 {
        self.pts[index - 1]
    }

    pub fn timebase(&self) -> Timebase {
        self.timebase
    }

    pub fn framerate(&self) -> Rational {
        self.framerate
    }

    pub fn nominal_duration(&self) -> i64 {
        self.nominal_duration
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    /// Content length in seconds, `frame_count / framerate`.
    pub fn duration_seconds(&self) -> f64 {
        let d = Rational::from_integer(self.pts.len() as i64) / self.framerate;
        *d.numer() as f64 / *d.denom() as f64
    }

    /// Same timing metadata with a replacement PTS track.
    pub fn with_pts(&self, pts: Vec<i64>) -> Self {
        Self {
            pts,
            ..self.clone()
        }
    }
}
