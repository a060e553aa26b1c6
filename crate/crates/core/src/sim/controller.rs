//! Waypoint follower with tangent-style detours around sensed obstacles.
//!
//! Each tick the controller scores candidate horizontal directions (the goal
//! bearing plus every sensor ray) by `free(θ) · cos(θ − θ_goal)`, where
//! `free(θ)` is how far a disk of radius `drone_radius + clearance_margin`
//! can travel along `θ` before touching a sensed return, capped at the
//! sensor range and at the distance to the goal. An unobstructed goal
//! bearing always wins; otherwise the drone heads for the gap that makes
//! the most progress. Returns inside `avoid_distance` that still lie in the
//! chosen path add a lateral push proportional to `1/range`.

use crate::config::ControlConfig;
use crate::fault::FaultEffects;
use crate::geometry::{cross, unit_from_angle, wrap_angle, Vec2, Vec3};
use crate::scene::{MissionPlan, Scene};

use super::sensor::SensorFrame;
use super::DroneState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CommandMode {
    Navigate,
    /// Target reached this tick; the mission index advances.
    Arrived,
    /// Blind reverse along `-heading`, bypassing the acceleration limit.
    Backoff,
    /// Plan finished.
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandedVelocity {
    pub velocity: Vec3,
    pub mode: CommandMode,
}

impl CommandedVelocity {
    fn zero(mode: CommandMode) -> Self {
        Self {
            velocity: Vec3::zeros(),
            mode,
        }
    }
}

pub fn goal_threshold(cfg: &ControlConfig, fx: &FaultEffects) -> f64 {
    fx.goal_threshold_override.unwrap_or(cfg.goal_threshold)
}

/// Whether the drone currently believes a person is nearby enough to
/// slow down, given its delayed awareness.
pub fn human_aware(state: &DroneState, fx: &FaultEffects) -> bool {
    state
        .human_detected_at
        .is_some_and(|t0| state.time + 1e-9 >= t0 + fx.human_detection_delay)
}

pub fn controller_step(
    state: &DroneState,
    frame: &SensorFrame,
    plan: &MissionPlan,
    scene: &Scene,
    cfg: &ControlConfig,
    fx: &FaultEffects,
) -> CommandedVelocity {
    if state.backoff_ticks > 0 || fx.inject_false_collision_now {
        let back = -unit_from_angle(state.heading) * cfg.max_speed;
        return CommandedVelocity {
            velocity: Vec3::new(back.x, back.y, 0.0),
            mode: CommandMode::Backoff,
        };
    }
    let Some(target) = plan.target(scene, state.mission_index) else {
        return CommandedVelocity::zero(CommandMode::Done);
    };
    let to_target = target - state.position;
    let dist = to_target.norm();
    if dist < goal_threshold(cfg, fx) {
        return CommandedVelocity::zero(CommandMode::Arrived);
    }

    let speed = speed_cap(state, scene, cfg, fx, dist);
    let horiz = to_target.xy();
    let horiz_dist = horiz.norm();
    let mut velocity = Vec3::zeros();
    if horiz_dist > 1e-9 {
        let goal_bearing = horiz.y.atan2(horiz.x);
        let dir = steer(state, frame, scene, cfg, goal_bearing, horiz_dist);
        velocity.x = dir.x * speed;
        velocity.y = dir.y * speed;
    }
    velocity.z = (to_target.z).clamp(-cfg.max_speed, cfg.max_speed);
    let norm = velocity.norm();
    if norm > speed && norm > 0.0 {
        velocity *= speed / norm;
    }
    CommandedVelocity {
        velocity,
        mode: CommandMode::Navigate,
    }
}

fn speed_cap(
    state: &DroneState,
    scene: &Scene,
    cfg: &ControlConfig,
    fx: &FaultEffects,
    dist_to_target: f64,
) -> f64 {
    let mut cap = cfg
        .max_speed
        .min((2.0 * cfg.max_accel * dist_to_target).sqrt());
    if human_aware(state, fx) {
        if let Some(h) = state.known_human.or_else(|| scene.human_position()) {
            let v = state.velocity.norm();
            let braking = (v * v - cfg.person_slow_speed.powi(2)).max(0.0) / (2.0 * cfg.max_accel);
            let margin = braking + v * cfg.dt + 0.05;
            if (state.position.xy() - h).norm() <= cfg.person_slow_distance + margin {
                cap = cap.min(cfg.person_slow_speed);
            }
        }
    }
    cap
}

/// Free travel distance along `dir` for a disk of radius `clearance`,
/// given sensed points relative to the drone.
fn free_distance(points: &[Vec2], dir: &Vec2, clearance: f64, cap: f64) -> f64 {
    points.iter().fold(cap, |best, q| {
        let proj = q.dot(dir);
        let off = cross(dir, q).abs();
        if proj <= 0.0 || off >= clearance {
            best
        } else {
            best.min((proj - (clearance * clearance - off * off).sqrt()).max(0.0))
        }
    })
}

fn steer(
    state: &DroneState,
    frame: &SensorFrame,
    scene: &Scene,
    cfg: &ControlConfig,
    goal_bearing: f64,
    goal_dist: f64,
) -> Vec2 {
    if frame.obstacle_hits.is_empty() {
        return unit_from_angle(goal_bearing);
    }
    let points: Vec<Vec2> = frame
        .obstacle_hits
        .iter()
        .map(|h| unit_from_angle(state.heading + h.bearing) * h.range)
        .collect();
    let clearance = scene.drone_radius + cfg.clearance_margin;
    let cap = frame.effective_range.min(goal_dist);

    let candidates = std::iter::once(goal_bearing)
        .chain(super::sensor::ray_bearings(cfg).map(|b| state.heading + b));
    let mut best: Option<(f64, f64, f64)> = None;
    for theta in candidates {
        let delta = wrap_angle(theta - goal_bearing);
        let score = free_distance(&points, &unit_from_angle(theta), clearance, cap) * delta.cos();
        let better = match best {
            None => true,
            Some((s, d, _)) => {
                if (score - s).abs() > 1e-9 {
                    score > s
                } else if (delta.abs() - d.abs()).abs() > 1e-9 {
                    delta.abs() < d.abs()
                } else {
                    delta > d
                }
            }
        };
        if better {
            best = Some((score, delta, theta));
        }
    }
    let theta = best.map_or(goal_bearing, |b| b.2);
    let dir = unit_from_angle(theta);

    // Lateral push away from the closest return still inside the path.
    let threat = points
        .iter()
        .filter(|q| q.dot(&dir) > 0.0 && cross(&dir, q).abs() < clearance)
        .map(|q| (q.norm(), cross(&dir, q)))
        .filter(|(r, _)| *r < cfg.avoid_distance)
        .min_by(|a, b| a.0.total_cmp(&b.0));
    match threat {
        Some((r, side)) if cfg.avoid_gain > 0.0 => {
            let weight = cfg.avoid_gain * (1.0 / r.max(1e-3) - 1.0 / cfg.avoid_distance);
            // `side > 0` means the return lies to the left of `dir`.
            let away = if side > 0.0 {
                Vec2::new(dir.y, -dir.x)
            } else {
                Vec2::new(-dir.y, dir.x)
            };
            (dir + away * weight).normalize()
        }
        _ => dir,
    }
}
