//! Live-streaming QoE toolkit.
//!
//! * [`timeline`]: PTS tracks and timing sidecar files.
//! * [`distortion`]: stall/catch-up recipes and distorted PTS synthesis.
//! * [`restructure`]: stall detection and render schedules.
//! * [`subjective`]: rating screening and MOS computation.
//! * [`criteria`]: correlation and classification scoring of QoE predictors.

pub mod criteria;
pub mod distortion;
mod error;
pub mod restructure;
pub mod subjective;
pub mod timeline;

pub use error::{Error, Result};
