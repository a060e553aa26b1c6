//! Ground-truth runtime monitors for the two safety requirements.
//!
//! * SR1: no collisions. Any collision event yields one violation.
//! * SR2: with a person present, the drone must be at or below
//!   `person_slow_speed` whenever its horizontal distance to the person is
//!   at most `person_slow_distance`. A violation is raised once the
//!   condition has been broken for longer than `sr2_grace`, at most once per
//!   contiguous interval.
//!
//! Monitors read the true scene, never the drone's perception, and never
//! feed back into control.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::DuplicateIdError;
use crate::geometry::{Vec2, Vec3};
use crate::scene::{Scene, SolidKind};
use crate::sim::{DroneState, EpisodeObserver, Event, EventKind};
use crate::situation::SituationId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Requirement {
    SR1,
    SR2,
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Requirement::SR1 => "SR1",
            Requirement::SR2 => "SR2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub id: String,
    pub requirement: Requirement,
    #[serde(rename = "time_s")]
    pub time: f64,
    pub position: Vec3,
    pub situation_id: SituationId,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<SolidKind>,
}

pub fn violation_id(situation_id: SituationId, requirement: Requirement, sequence: u32) -> String {
    format!("{situation_id}-{requirement}-{sequence:03}")
}

/// SR1 check over the events stamped on one sample.
pub fn check_sr1(
    step_events: &[Event],
    state: &DroneState,
    situation_id: SituationId,
) -> Option<ViolationRecord> {
    step_events.iter().find_map(|e| match e.kind {
        EventKind::Collision { object } => Some(ViolationRecord {
            id: String::new(),
            requirement: Requirement::SR1,
            time: e.time,
            position: state.position,
            situation_id,
            detail: format!("collision with {}", object.as_str()),
            object: Some(object),
        }),
        _ => None,
    })
}

/// Instantaneous SR2 condition: person within range and drone too fast.
pub fn sr2_breached(state: &DroneState, human: Option<Vec2>, cfg: &SimConfig) -> bool {
    human.is_some_and(|h| {
        (state.position.xy() - h).norm() <= cfg.control.person_slow_distance
            && state.speed() > cfg.control.person_slow_speed + cfg.monitor.speed_epsilon
    })
}

/// Grace-timed SR2 monitor for one episode.
#[derive(Debug, Clone)]
pub struct Sr2Monitor {
    human: Option<Vec2>,
    cfg: SimConfig,
    interval_start: Option<f64>,
    flagged: bool,
}

impl Sr2Monitor {
    pub fn new(scene: &Scene, cfg: &SimConfig) -> Self {
        Self {
            human: scene.human_position(),
            cfg: cfg.clone(),
            interval_start: None,
            flagged: false,
        }
    }

    pub fn check(
        &mut self,
        state: &DroneState,
        situation_id: SituationId,
    ) -> Option<ViolationRecord> {
        if !sr2_breached(state, self.human, &self.cfg) {
            self.interval_start = None;
            self.flagged = false;
            return None;
        }
        let start = *self.interval_start.get_or_insert(state.time);
        let held = state.time - start;
        if self.flagged || held <= self.cfg.monitor.sr2_grace + 1e-9 {
            return None;
        }
        self.flagged = true;
        let d = self
            .human
            .map_or(f64::NAN, |h| (state.position.xy() - h).norm());
        Some(ViolationRecord {
            id: String::new(),
            requirement: Requirement::SR2,
            time: state.time,
            position: state.position,
            situation_id,
            detail: format!(
                "speed {:.3} m/s at {:.3} m from person for {:.2} s",
                state.speed(),
                d,
                held
            ),
            object: None,
        })
    }
}

/// Both monitors, stepped once per trajectory sample.
#[derive(Debug, Clone)]
pub struct SafetyMonitor {
    situation_id: SituationId,
    sr2: Sr2Monitor,
    sequence: [u32; 2],
    records: Vec<ViolationRecord>,
}

impl SafetyMonitor {
    pub fn new(situation_id: SituationId, scene: &Scene, cfg: &SimConfig) -> Self {
        Self {
            situation_id,
            sr2: Sr2Monitor::new(scene, cfg),
            sequence: [0; 2],
            records: Vec::new(),
        }
    }

    fn push(&mut self, mut v: ViolationRecord) {
        let slot = &mut self.sequence[v.requirement as usize];
        *slot += 1;
        v.id = violation_id(self.situation_id, v.requirement, *slot);
        self.records.push(v);
    }

    pub fn records(&self) -> &[ViolationRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<ViolationRecord> {
        self.records
    }
}

impl EpisodeObserver for SafetyMonitor {
    fn observe(&mut self, state: &DroneState, events: &[Event]) {
        if let Some(v) = check_sr1(events, state, self.situation_id) {
            self.push(v);
        }
        if let Some(v) = self.sr2.check(state, self.situation_id) {
            self.push(v);
        }
    }
}

pub fn warning_line(v: &ViolationRecord) -> String {
    format!(
        "safety violation {} ({}) at t={:.2}s pos=({:.3}, {:.3}, {:.3}) situation {}: {}",
        v.id,
        v.requirement,
        v.time,
        v.position.x,
        v.position.y,
        v.position.z,
        v.situation_id,
        v.detail
    )
}

/// Campaign-wide violation buffer enforcing unique ids.
#[derive(Debug, Clone, Default)]
pub struct ViolationLog {
    records: Vec<ViolationRecord>,
    ids: HashSet<String>,
}

impl ViolationLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `v` and writes a warning to the diagnostic stream.
    pub fn issue_warning(&mut self, v: ViolationRecord) -> Result<(), DuplicateIdError> {
        if !self.ids.insert(v.id.clone()) {
            return Err(DuplicateIdError(v.id));
        }
        log::warn!("{}", warning_line(&v));
        self.records.push(v);
        Ok(())
    }

    pub fn records(&self) -> &[ViolationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
