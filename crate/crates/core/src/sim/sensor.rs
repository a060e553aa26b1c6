use serde::{Deserialize, Serialize};

use crate::config::ControlConfig;
use crate::geometry::{unit_from_angle, wrap_angle, Vec2};
use crate::rng::SplitMix64;
use crate::scene::{AmbientLight, Scene};

use super::DroneState;

/// One depth return: range along the ray and bearing relative to heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayHit {
    pub range: f64,
    pub bearing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub obstacle_hits: Vec<RayHit>,
    pub human_range: Option<f64>,
    pub effective_range: f64,
}

pub fn effective_range(scene: &Scene, cfg: &ControlConfig) -> f64 {
    match scene.ambient_light {
        AmbientLight::Default => cfg.sensor_range_default,
        AmbientLight::TotalDarkness => cfg.sensor_range_dark,
    }
}

/// Bearings of the sensor rays relative to heading, evenly spread across
/// the field of view.
pub fn ray_bearings(cfg: &ControlConfig) -> impl Iterator<Item = f64> + '_ {
    let fov = cfg.sensor_fov_deg.to_radians();
    let n = cfg.sensor_rays;
    (0..n).map(move |i| -fov / 2.0 + (i as f64 + 0.5) * fov / n as f64)
}

/// First solid along a horizontal ray at the drone's altitude. Solids whose
/// vertical extent misses the drone's altitude band are invisible.
pub fn cast_ray(scene: &Scene, origin: &Vec2, z: f64, dir: &Vec2) -> Option<f64> {
    let (z_lo, z_hi) = (z - scene.drone_radius, z + scene.drone_radius);
    let walls = scene.walls.iter().filter_map(|w| w.ray_hit(origin, dir));
    let boxes = scene
        .obstacles
        .iter()
        .chain(std::iter::once(&scene.corner_bar))
        .filter(|b| b.overlaps_height(z_lo, z_hi))
        .filter_map(|b| b.ray_hit_2d(origin, dir));
    walls.chain(boxes).fold(None, |best: Option<f64>, t| {
        Some(best.map_or(t, |b| b.min(t)))
    })
}

/// Ray-cast depth frame plus line-of-sight human detection.
pub fn sense(state: &DroneState, scene: &Scene, cfg: &ControlConfig) -> SensorFrame {
    let range = effective_range(scene, cfg);
    let origin = state.position.xy();
    let z = state.position.z;
    let obstacle_hits = ray_bearings(cfg)
        .filter_map(|bearing| {
            let dir = unit_from_angle(state.heading + bearing);
            cast_ray(scene, &origin, z, &dir)
                .filter(|&t| t > 1e-9 && t <= range)
                .map(|t| RayHit { range: t, bearing })
        })
        .collect();

    let half_fov = cfg.sensor_fov_deg.to_radians() / 2.0;
    let human_range = scene.human_position().and_then(|h| {
        let to_human = h - origin;
        let d = to_human.norm();
        if d > range || d < 1e-9 {
            return None;
        }
        let bearing = wrap_angle(to_human.y.atan2(to_human.x) - state.heading);
        if bearing.abs() > half_fov {
            return None;
        }
        let dir = to_human / d;
        let occluded = scene
            .walls
            .iter()
            .filter_map(|w| w.ray_hit(&origin, &dir))
            .any(|t| t < d);
        (!occluded).then_some(d)
    });

    SensorFrame {
        obstacle_hits,
        human_range,
        effective_range: range,
    }
}

/// Additive Gaussian range noise; returns pushed outside `(0, range]` are
/// dropped.
pub fn perturb(frame: &mut SensorFrame, rng: &mut SplitMix64, std: f64) {
    if std <= 0.0 {
        return;
    }
    let range = frame.effective_range;
    frame.obstacle_hits.retain_mut(|hit| {
        hit.range += std * rng.next_gaussian();
        hit.range > 0.0 && hit.range <= range
    });
}
