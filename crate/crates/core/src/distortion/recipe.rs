//! Distortion recipes: which stalls to inject and how fast to catch up.

use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::modes::{DurationCategory, ModeId};
use crate::error::{Error, Result};
use crate::timeline::{seconds_to_rational, Rational};

/// CRF values of the compressed sources.
pub const CRF_LEVELS: [u32; 5] = [15, 22, 27, 32, 37];

/// Playback speed-up applied after a stall. `1` means no catch-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AccelerationRate(Rational);

impl AccelerationRate {
    pub const NONE: AccelerationRate = AccelerationRate(Rational::new_raw(1, 1));

    /// The rates used by the corpus.
    pub fn levels() -> [AccelerationRate; 6] {
        [
            AccelerationRate(Rational::new_raw(1, 1)),
            AccelerationRate(Rational::new_raw(11, 10)),
            AccelerationRate(Rational::new_raw(5, 4)),
            AccelerationRate(Rational::new_raw(3, 2)),
            AccelerationRate(Rational::new_raw(7, 4)),
            AccelerationRate(Rational::new_raw(9, 4)),
        ]
    }

    pub fn new(rate: Rational) -> Result<Self> {
        if rate < Rational::from_integer(1) {
            return Err(Error::invalid(format!(
                "acceleration rate {rate} is below 1"
            )));
        }
        Ok(AccelerationRate(rate))
    }

    /// Reads a decimal rate at 1/1000 resolution.
    pub fn from_f64(rate: f64) -> Result<Self> {
        if !rate.is_finite() {
            return Err(Error::invalid("acceleration rate is not finite"));
        }
        Self::new(Rational::new((rate * 1000.0).round() as i64, 1000))
    }

    pub fn ratio(self) -> Rational {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    pub fn is_catch_up(self) -> bool {
        self.0 > Rational::from_integer(1)
    }

    pub fn is_corpus_level(self) -> bool {
        Self::levels().contains(&self)
    }
}

impl fmt::Display for AccelerationRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

impl Serialize for AccelerationRate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for AccelerationRate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        AccelerationRate::from_f64(v).map_err(serde::de::Error::custom)
    }
}

/// Distortion batch. Each batch draws its acceleration rate from its own
/// distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Batch {
    #[serde(rename = "1080p_batch1")]
    HdBatch1,
    #[serde(rename = "1080p_batch2")]
    HdBatch2,
    #[serde(rename = "720p_batch1")]
    SdBatch1,
}

impl Batch {
    pub const ALL: [Batch; 3] = [Batch::HdBatch1, Batch::HdBatch2, Batch::SdBatch1];

    /// `(rate, weight in percent)` pairs. The second 1080p batch's weights
    /// total 105 and are sampled proportionally.
    pub fn rate_weights(self) -> &'static [(f64, u32)] {
        match self {
            Batch::HdBatch1 => &[(1.0, 100)],
            Batch::HdBatch2 => &[(1.1, 30), (1.25, 30), (1.5, 15), (1.75, 15), (2.25, 15)],
            Batch::SdBatch1 => &[
                (1.0, 25),
                (1.1, 25),
                (1.25, 20),
                (1.5, 15),
                (1.75, 10),
                (2.25, 5),
            ],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Batch::HdBatch1 => "1080p_batch1",
            Batch::HdBatch2 => "1080p_batch2",
            Batch::SdBatch1 => "720p_batch1",
        }
    }
}

impl fmt::Display for Batch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Batch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Batch::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown batch {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StallEvent {
    #[serde(rename = "onset_s")]
    pub onset_seconds: f64,
    #[serde(rename = "duration_s")]
    pub duration_seconds: f64,
    pub category: DurationCategory,
}

impl StallEvent {
    pub fn validate(&self) -> Result<()> {
        if !(self.onset_seconds.is_finite() && self.onset_seconds >= 0.0) {
            return Err(Error::InvalidRecipe(format!(
                "stall onset {} must be >= 0",
                self.onset_seconds
            )));
        }
        if !(self.duration_seconds.is_finite() && self.duration_seconds > 0.0) {
            return Err(Error::InvalidRecipe(format!(
                "stall duration {} must be > 0",
                self.duration_seconds
            )));
        }
        if !self.category.admits(self.duration_seconds) {
            return Err(Error::InvalidRecipe(format!(
                "duration {}s is not a {} stall",
                self.duration_seconds, self.category
            )));
        }
        Ok(())
    }
}

/// Recipe for one distorted video. Serialized as the per-video recipe file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionRecipe {
    pub mode_id: ModeId,
    pub stalls: Vec<StallEvent>,
    pub ar: AccelerationRate,
    /// Compression level, applied by the external encoder.
    pub crf: Option<u32>,
    pub seed: u64,
    pub source_id: Option<String>,
    pub batch: Batch,
}

impl DistortionRecipe {
    pub fn validate(&self) -> Result<()> {
        let m = self.stalls.len();
        if !(1..=3).contains(&m) {
            return Err(Error::InvalidRecipe(format!("{m} stalls, expected 1 to 3")));
        }
        for s in &self.stalls {
            s.validate()?;
        }
        if self
            .stalls
            .windows(2)
            .any(|w| w[1].onset_seconds <= w[0].onset_seconds)
        {
            return Err(Error::InvalidRecipe(
                "stall onsets must be strictly increasing".into(),
            ));
        }
        let mut cats: Vec<_> = self.stalls.iter().map(|s| s.category).collect();
        cats.sort();
        if cats != self.mode_id.composition() {
            return Err(Error::InvalidRecipe(format!(
                "stall categories do not match mode {}",
                self.mode_id
            )));
        }
        if !self.ar.is_corpus_level() {
            return Err(Error::InvalidRecipe(format!(
                "acceleration rate {} is not a corpus level",
                self.ar
            )));
        }
        if let Some(crf) = self.crf {
            if !CRF_LEVELS.contains(&crf) {
                return Err(Error::InvalidRecipe(format!(
                    "crf {crf} is not a corpus level"
                )));
            }
        }
        Ok(())
    }

    pub fn onsets(&self) -> Vec<Rational> {
        self.stalls
            .iter()
            .map(|s| seconds_to_rational(s.onset_seconds))
            .collect()
    }

    pub fn durations(&self) -> Vec<Rational> {
        self.stalls
            .iter()
            .map(|s| seconds_to_rational(s.duration_seconds))
            .collect()
    }

    pub fn total_stall_seconds(&self) -> f64 {
        self.stalls.iter().map(|s| s.duration_seconds).sum()
    }
}

/// Onsets are placed on a 0.1 s grid that keeps 0.5 s clear at both ends.
const ONSET_GRID_PER_SECOND: i64 = 10;
const ONSET_MARGIN_STEPS: i64 = 5;

fn onset_grid(video_duration: f64) -> (i64, i64) {
    let steps = (video_duration * ONSET_GRID_PER_SECOND as f64 + 1e-9).floor() as i64;
    (ONSET_MARGIN_STEPS, steps - ONSET_MARGIN_STEPS)
}

/// Draws a recipe for `mode`. Pure in `(mode, batch, seed, video_duration)`.
pub fn sample_recipe(
    mode: ModeId,
    batch: Batch,
    seed: u64,
    video_duration: f64,
) -> Result<DistortionRecipe> {
    if !video_duration.is_finite() || video_duration <= 0.0 {
        return Err(Error::invalid(format!(
            "video duration {video_duration} must be positive"
        )));
    }
    let m = mode.stall_count();
    let (lo, hi) = onset_grid(video_duration);
    if hi < lo || ((hi - lo + 1) as usize) < m {
        return Err(Error::invalid(format!(
            "cannot place {m} stalls in a {video_duration}s video"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut categories = mode.composition().to_vec();
    categories.shuffle(&mut rng);
    let durations: Vec<f64> = categories
        .iter()
        .map(|c| {
            let values = c.durations();
            values[rng.random_range(0..values.len())]
        })
        .collect();

    let mut onset_steps: Vec<i64> = rand::seq::index::sample(&mut rng, (hi - lo + 1) as usize, m)
        .into_iter()
        .map(|k| lo + k as i64)
        .collect();
    onset_steps.sort_unstable();

    let weights = batch.rate_weights();
    let pick = WeightedIndex::new(weights.iter().map(|w| w.1))
        .expect("rate weights are positive")
        .sample(&mut rng);
    let ar = AccelerationRate::from_f64(weights[pick].0)?;

    let stalls = onset_steps
        .into_iter()
        .zip(categories.into_iter().zip(durations))
        .map(|(step, (category, duration))| StallEvent {
            onset_seconds: step as f64 / ONSET_GRID_PER_SECOND as f64,
            duration_seconds: duration,
            category,
        })
        .collect();

    Ok(DistortionRecipe {
        mode_id: mode,
        stalls,
        ar,
        crf: None,
        seed,
        source_id: None,
        batch,
    })
}
