//! Stall and catch-up distortion synthesis.
//!
//! [`sample_recipe`] draws a [`DistortionRecipe`] for a stalling mode and
//! batch, and [`synthesize_output_pts`] rewrites a uniform source timeline
//! into the distorted PTS track the recipe describes. [`corpus_plan`] lays
//! out the full set of corpus videos.

mod corpus;
mod modes;
mod recipe;
mod synth;

pub use corpus::{corpus_plan, source_id, PlannedVideo, CORPUS_FRAMERATES};
pub use modes::{enumerate_stall_modes, DurationCategory, ModeId, StallModeTemplate, MODE_SLOTS};
pub use recipe::{
    sample_recipe, AccelerationRate, Batch, DistortionRecipe, StallEvent, CRF_LEVELS,
};
pub use synth::{
    catchup_frame_count, cumulative_delays, pts_delays, stall_frame_indices, synthesize_output_pts,
    synthesize_stalls, DistortionPlan, StallTiming,
};
