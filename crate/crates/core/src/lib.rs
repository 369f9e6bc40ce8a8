//! Security analysis and simulation of the two-way LM05 quantum key
//! distribution protocol with weak+vacuum decoy states.
//!
//! * [`bounds`] turns measured gains and error rates into decoy-state
//!   bounds and a secure key rate.
//! * [`channel`] predicts those statistics from device parameters.
//! * [`montecarlo`] simulates the protocol pulse by pulse with photon-number
//!   ground truth.
//! * [`planner`] searches intensities and the maximum secure loss.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channel;
pub mod cli;
pub mod error;
pub mod manifest;
pub mod montecarlo;
pub mod planner;
pub mod scalar;
pub mod svg;
pub mod table;
pub mod types;

pub use error::{Error, Result};
pub use types::{BoundsResult, ChannelPoint, DeviceParams, IntensitySet, MeasuredStats};
