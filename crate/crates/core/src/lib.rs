//! Harmonica: a MAPE-K self-adaptation runtime for an energy-aware
//! time-series inference pipeline.
//!
//! The managed system ([`pipeline`]) replays a traffic-flow series through one
//! of three regressors ([`spectrum`]), metering a deterministic energy proxy
//! ([`energy`]). The managing system ([`mape`]) watches the logs kept in
//! [`knowledge`] and switches, retrains or reuses models when goals are
//! violated. [`harness`] drives complete runs and comparisons.

pub mod control;
pub mod energy;
pub mod error;
pub mod harness;
pub mod knowledge;
pub mod mape;
pub mod pipeline;
pub mod spectrum;

pub use error::{Error, Result, ValidationError};
