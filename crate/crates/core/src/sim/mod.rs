//! Deterministic discrete-time drone simulation.
//!
//! Kinematic model: the commanded velocity is tracked under an acceleration
//! limit (`max_accel`), speed is clamped to `max_speed`, and position is
//! integrated with forward Euler at a fixed `dt`. The nose (and the depth
//! sensor cone) always points at the current target waypoint. Episode time
//! is `step * dt`, never accumulated.

mod controller;
mod csv;
mod sensor;

use serde::{Deserialize, Serialize};

use crate::config::{ControlConfig, SimConfig};
use crate::error::ConfigError;
use crate::fault::{effects_at, FaultEffects, FaultSpec};
use crate::geometry::{Vec2, Vec3};
use crate::rng::SplitMix64;
use crate::scene::{build_scene, MissionPlan, Scene, SolidKind};
use crate::situation::{Situation, SituationId};

pub use controller::{
    controller_step, goal_threshold, human_aware, CommandMode, CommandedVelocity,
};
pub use csv::{parse_trajectory_csv, trajectory_csv, CsvRow};
pub use sensor::{cast_ray, effective_range, perturb, ray_bearings, sense, RayHit, SensorFrame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroneState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub heading: f64,
    pub step: u64,
    pub time: f64,
    pub mission_index: usize,
    /// Time the human first entered the sensor cone, before any fault delay.
    pub human_detected_at: Option<f64>,
    pub known_human: Option<Vec2>,
    pub backoff_ticks: u32,
}

impl DroneState {
    pub fn at_rest(position: Vec3, heading: f64) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            heading,
            step: 0,
            time: 0.0,
            mission_index: 0,
            human_detected_at: None,
            known_human: None,
            backoff_ticks: 0,
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    Collision {
        object: SolidKind,
    },
    HumanDetected,
    /// `waypoint` is the 1-based waypoint number.
    WaypointReached {
        mission_index: usize,
        waypoint: usize,
    },
    FalseCollisionSignal,
}

impl EventKind {
    pub fn token(&self) -> String {
        match self {
            EventKind::Collision { object } => format!("collision:{}", object.as_str()),
            EventKind::HumanDetected => "human_detected".into(),
            EventKind::WaypointReached { waypoint, .. } => format!("waypoint_reached:{waypoint}"),
            EventKind::FalseCollisionSignal => "false_collision".into(),
        }
    }
}

/// Event tied to the trajectory sample with index `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub step: u64,
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Collision,
    Timeout,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::Collision => "collision",
            Outcome::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub situation_id: SituationId,
    pub trajectory: Vec<DroneState>,
    pub events: Vec<Event>,
    pub completed: bool,
    pub outcome: Outcome,
}

impl EpisodeResult {
    pub fn collision(&self) -> Option<(&Event, SolidKind)> {
        self.events.iter().find_map(|e| match e.kind {
            EventKind::Collision { object } => Some((e, object)),
            _ => None,
        })
    }

    pub fn events_at(&self, step: u64) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.step == step)
    }
}

/// Whether faults are evaluated at all. `Disabled` never calls into the
/// fault model; `Enabled(&[])` does and must behave identically.
#[derive(Debug, Clone, Copy)]
pub enum FaultLayer<'a> {
    Disabled,
    Enabled(&'a [FaultSpec]),
}

impl FaultLayer<'_> {
    pub fn effects(&self, t: f64, dt: f64) -> FaultEffects {
        match self {
            FaultLayer::Disabled => FaultEffects::NEUTRAL,
            FaultLayer::Enabled(faults) => effects_at(faults, t, dt),
        }
    }
}

fn bearing_to(from: &Vec3, to: &Vec3, fallback: f64) -> f64 {
    let d = (to - from).xy();
    if d.norm() > 1e-9 {
        d.y.atan2(d.x)
    } else {
        fallback
    }
}

pub fn initial_state(scene: &Scene, plan: &MissionPlan) -> DroneState {
    let start = plan.target(scene, 0).unwrap_or_else(Vec3::zeros);
    let next = plan.target(scene, 1).unwrap_or(start);
    DroneState::at_rest(start, bearing_to(&start, &next, 0.0))
}

/// Advance one tick. Events carry the step index of the trajectory sample
/// they belong to: detections, arrivals and injected signals are stamped on
/// the pre-step sample, collisions on the post-step sample.
#[allow(clippy::too_many_arguments)]
pub fn step(
    state: &DroneState,
    scene: &Scene,
    plan: &MissionPlan,
    cfg: &ControlConfig,
    faults: FaultLayer<'_>,
    rng: &mut SplitMix64,
) -> (DroneState, Vec<Event>) {
    let dt = cfg.dt;
    let fx = faults.effects(state.time, dt);
    let mut events = Vec::new();
    let mut next = state.clone();
    let stamp = |kind| Event {
        step: state.step,
        time: state.time,
        kind,
    };

    let mut frame = if state.backoff_ticks > 0 {
        SensorFrame {
            obstacle_hits: Vec::new(),
            human_range: None,
            effective_range: effective_range(scene, cfg),
        }
    } else {
        sense(state, scene, cfg)
    };
    perturb(&mut frame, rng, cfg.sensor_noise_std);
    if frame.human_range.is_some() && state.human_detected_at.is_none() {
        next.human_detected_at = Some(state.time);
        next.known_human = scene.human_position();
        events.push(stamp(EventKind::HumanDetected));
    }

    // Controller sees the detection made on this tick.
    let view = DroneState {
        human_detected_at: next.human_detected_at,
        known_human: next.known_human,
        ..state.clone()
    };
    let cmd = controller_step(&view, &frame, plan, scene, cfg, &fx);
    match cmd.mode {
        CommandMode::Backoff => {
            if state.backoff_ticks == 0 {
                events.push(stamp(EventKind::FalseCollisionSignal));
                next.backoff_ticks = (cfg.backoff_duration / dt).round().max(1.0) as u32;
            }
            next.backoff_ticks -= 1;
            next.velocity = cmd.velocity;
        }
        CommandMode::Arrived => {
            events.push(stamp(EventKind::WaypointReached {
                mission_index: state.mission_index,
                waypoint: plan.waypoint_sequence[state.mission_index] + 1,
            }));
            next.mission_index += 1;
            next.velocity = track(&state.velocity, &cmd.velocity, cfg);
        }
        CommandMode::Navigate | CommandMode::Done => {
            next.velocity = track(&state.velocity, &cmd.velocity, cfg);
        }
    }

    next.step = state.step + 1;
    next.time = next.step as f64 * dt;
    next.position = state.position + next.velocity * dt;
    if next.backoff_ticks == 0 {
        if let Some(target) = plan.target(scene, next.mission_index) {
            next.heading = bearing_to(&next.position, &target, state.heading);
        }
    }
    if let Some(object) = scene.collision_at(&next.position) {
        events.push(Event {
            step: next.step,
            time: next.time,
            kind: EventKind::Collision { object },
        });
    }
    (next, events)
}

/// Move `current` toward `commanded` by at most `max_accel * dt`, then clamp
/// to `max_speed`.
fn track(current: &Vec3, commanded: &Vec3, cfg: &ControlConfig) -> Vec3 {
    let dv = commanded - current;
    let max_dv = cfg.max_accel * cfg.dt;
    let n = dv.norm();
    let mut v = if n > max_dv {
        current + dv * (max_dv / n)
    } else {
        *commanded
    };
    let speed = v.norm();
    if speed > cfg.max_speed {
        v *= cfg.max_speed / speed;
    }
    v
}

/// Per-sample callback used by online monitors.
pub trait EpisodeObserver {
    fn observe(&mut self, state: &DroneState, events: &[Event]);
}

impl EpisodeObserver for () {
    fn observe(&mut self, _: &DroneState, _: &[Event]) {}
}

pub fn run_episode(
    s: &Situation,
    cfg: &SimConfig,
    faults: &[FaultSpec],
    seed: u64,
) -> Result<EpisodeResult, ConfigError> {
    run_episode_observed(s, cfg, FaultLayer::Enabled(faults), seed, &mut ())
}

/// Runs until the plan completes, a collision occurs, or
/// `max_episode_time` elapses. The observer sees every trajectory sample
/// exactly once, in order, together with the events stamped on it.
pub fn run_episode_observed(
    s: &Situation,
    cfg: &SimConfig,
    faults: FaultLayer<'_>,
    seed: u64,
    observer: &mut dyn EpisodeObserver,
) -> Result<EpisodeResult, ConfigError> {
    cfg.validate()?;
    let (scene, plan) = build_scene(s, &cfg.world)?;
    Ok(simulate(s.id(), &scene, &plan, cfg, faults, seed, observer))
}

pub fn simulate(
    situation_id: SituationId,
    scene: &Scene,
    plan: &MissionPlan,
    cfg: &SimConfig,
    faults: FaultLayer<'_>,
    seed: u64,
    observer: &mut dyn EpisodeObserver,
) -> EpisodeResult {
    let ctl = &cfg.control;
    let mut rng = SplitMix64::new(seed);
    let mut state = initial_state(scene, plan);
    let mut trajectory = vec![state.clone()];
    let mut events: Vec<Event> = Vec::new();
    let max_steps = (ctl.max_episode_time / ctl.dt).round() as u64;

    // Events belonging to `state`, flushed once its successor is known.
    let mut pending: Vec<Event> = Vec::new();
    let outcome = loop {
        if state.mission_index >= plan.waypoint_sequence.len() {
            break Outcome::Completed;
        }
        if state.step >= max_steps {
            break Outcome::Timeout;
        }
        let (next, new_events) = step(&state, scene, plan, ctl, faults, &mut rng);
        let (pre, post): (Vec<Event>, Vec<Event>) =
            new_events.into_iter().partition(|e| e.step == state.step);
        pending.extend(pre);
        observer.observe(&state, &pending);
        events.append(&mut pending);
        let collided = post
            .iter()
            .any(|e| matches!(e.kind, EventKind::Collision { .. }));
        pending = post;
        trajectory.push(next.clone());
        state = next;
        if collided {
            break Outcome::Collision;
        }
    };
    observer.observe(&state, &pending);
    events.append(&mut pending);
    EpisodeResult {
        situation_id,
        trajectory,
        events,
        completed: outcome == Outcome::Completed,
        outcome,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::SolidKind;

    fn sit(id: u8) -> Situation {
        Situation::from_id(SituationId::new(id).unwrap())
    }

    #[test]
    fn finished_plan_is_fixed_point() {
        let cfg = SimConfig::default();
        let (scene, plan) = build_scene(&sit(17), &cfg.world).unwrap();
        let mut st = DroneState::at_rest(Vec3::new(1.0, 0.5, 1.65), 0.3);
        st.mission_index = plan.waypoint_sequence.len();
        let mut rng = SplitMix64::new(0);
        let (next, events) = step(
            &st,
            &scene,
            &plan,
            &cfg.control,
            FaultLayer::Disabled,
            &mut rng,
        );
        assert!(events.is_empty());
        assert_eq!(next.position, st.position);
        assert_eq!(next.velocity, Vec3::zeros());
        assert_eq!(next.step, 1);
    }

    #[test]
    fn wall_contact_within_one_tick() {
        let cfg = SimConfig::default();
        let (scene, plan) = build_scene(&sit(17), &cfg.world).unwrap();
        // Corridor side wall at y = -1.5; start 0.04 m outside contact range,
        // flying straight at it.
        let y = -1.5 + scene.drone_radius + 0.04;
        let mut st = DroneState::at_rest(Vec3::new(10.0, y, 1.65), -std::f64::consts::FRAC_PI_2);
        st.velocity = Vec3::new(0.0, -1.0, 0.0);
        st.mission_index = 1;
        let mut rng = SplitMix64::new(0);
        let (next, events) = step(
            &st,
            &scene,
            &plan,
            &cfg.control,
            FaultLayer::Disabled,
            &mut rng,
        );
        let hit = events
            .iter()
            .find(|e| matches!(e.kind, EventKind::Collision { .. }))
            .expect("collision expected");
        assert_eq!(
            hit.kind,
            EventKind::Collision {
                object: SolidKind::Wall
            }
        );
        assert_eq!(hit.step, next.step);
    }

    #[test]
    fn time_is_step_times_dt() {
        let r = run_episode(&sit(17), &SimConfig::default(), &[], 0).unwrap();
        for s in &r.trajectory {
            assert_eq!(s.time, s.step as f64 * 0.05);
        }
        assert_eq!(r.outcome, Outcome::Completed);
    }

    #[test]
    fn dark_corner_hits_bar() {
        let r = run_episode(&sit(26), &SimConfig::default(), &[], 0).unwrap();
        assert_eq!(r.outcome, Outcome::Collision);
        assert_eq!(r.collision().unwrap().1, SolidKind::CornerBar);
    }

    #[test]
    fn observer_sees_each_sample_once() {
        struct Count(Vec<u64>);
        impl EpisodeObserver for Count {
            fn observe(&mut self, s: &DroneState, _: &[Event]) {
                self.0.push(s.step);
            }
        }
        let mut c = Count(vec![]);
        let r = run_episode_observed(
            &sit(9),
            &SimConfig::default(),
            FaultLayer::Disabled,
            0,
            &mut c,
        )
        .unwrap();
        let steps: Vec<u64> = r.trajectory.iter().map(|s| s.step).collect();
        assert_eq!(c.0, steps);
    }
}
