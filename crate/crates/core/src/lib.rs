//! Situation-coverage safety testing for a simulated drone surveying a mine.
//!
//! The pipeline: enumerate or sample situations from a five-axis binary
//! space, build the matching mine scene, fly the survey mission in a
//! deterministic kinematic simulator, watch it with ground-truth safety
//! monitors, optionally inject HAZOP-style faults, and log coverage and
//! violations as JSON.

pub mod campaign;
pub mod config;
pub mod error;
pub mod fault;
pub mod geometry;
pub mod monitor;
pub mod rng;
pub mod scene;
pub mod sim;
pub mod situation;

pub use config::SimConfig;
pub use error::{CampaignError, ConfigError, FaultError};
pub use situation::{Situation, SituationId};
