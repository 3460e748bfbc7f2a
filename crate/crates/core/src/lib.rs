//! Downlink cellular simulator for a cellular-connected UAV whose serving
//! network tunes a common antenna downtilt per waypoint with tabular
//! Q-learning.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod antenna;
pub mod channel;
pub mod config;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod mobility;
pub mod radio;
pub mod report;
pub mod rl;
pub mod rng;

pub use error::{Error, Result};
