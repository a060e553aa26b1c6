//! World, control and monitor parameters. Every default here is a
//! documented convention of the canonical mine, not a measured quantity.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ConfigError;

/// Canonical mine geometry. The safe zone is a square centered on the
/// origin; its east side opens into a corridor running +x, which turns a
/// right angle to +y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub safe_zone_size: f64,
    pub corridor_width: f64,
    pub corridor_length: f64,
    pub leg_length: f64,
    /// Distance of the survey waypoint past the inner corner.
    pub survey_advance: f64,
    pub cruise_altitude: f64,
    pub near_wall_offset: f64,
    pub drone_radius: f64,
    /// Width, depth, height of the static obstacle.
    pub obstacle_size: [f64; 3],
    pub bar_length: f64,
    pub bar_section: f64,
    pub bar_height: f64,
    pub bar_offset_past_corner: f64,
    pub human_position: [f64; 2],
    pub human_radius: f64,
    pub human_height: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            safe_zone_size: 10.0,
            corridor_width: 3.0,
            corridor_length: 15.0,
            leg_length: 10.0,
            survey_advance: 6.5,
            cruise_altitude: 1.65,
            near_wall_offset: 0.5,
            drone_radius: 0.25,
            obstacle_size: [0.5, 0.5, 1.8],
            bar_length: 2.0,
            bar_section: 0.1,
            bar_height: 1.6,
            bar_offset_past_corner: 1.5,
            human_position: [5.0, 1.2],
            human_radius: 0.25,
            human_height: 1.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub dt: f64,
    pub max_speed: f64,
    pub max_accel: f64,
    pub goal_threshold: f64,
    pub sensor_fov_deg: f64,
    pub sensor_rays: usize,
    pub sensor_range_default: f64,
    pub sensor_range_dark: f64,
    /// Standard deviation of additive range noise, metres. Zero makes the
    /// episode independent of its seed.
    pub sensor_noise_std: f64,
    pub avoid_distance: f64,
    pub avoid_gain: f64,
    pub clearance_margin: f64,
    pub person_slow_distance: f64,
    pub person_slow_speed: f64,
    pub backoff_duration: f64,
    pub max_episode_time: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            max_speed: 1.0,
            max_accel: 1.0,
            goal_threshold: 0.3,
            sensor_fov_deg: 90.0,
            sensor_rays: 64,
            sensor_range_default: 6.0,
            sensor_range_dark: 1.5,
            sensor_noise_std: 0.0,
            avoid_distance: 2.0,
            avoid_gain: 0.5,
            clearance_margin: 0.1,
            person_slow_distance: 4.0,
            person_slow_speed: 0.4,
            backoff_duration: 1.0,
            max_episode_time: 300.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorConfig {
    pub sr2_grace: f64,
    pub speed_epsilon: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            sr2_grace: 0.5,
            speed_epsilon: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub world: WorldConfig,
    pub control: ControlConfig,
    pub monitor: MonitorConfig,
}

fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::InvalidValue {
            field,
            reason: format!("must be positive and finite, got {v}"),
        })
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::InvalidValue {
            field,
            reason: format!("must be non-negative and finite, got {v}"),
        })
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (f, v) in [
            ("world.safe_zone_size", self.safe_zone_size),
            ("world.corridor_width", self.corridor_width),
            ("world.corridor_length", self.corridor_length),
            ("world.leg_length", self.leg_length),
            ("world.survey_advance", self.survey_advance),
            ("world.cruise_altitude", self.cruise_altitude),
            ("world.near_wall_offset", self.near_wall_offset),
            ("world.drone_radius", self.drone_radius),
            ("world.obstacle_size[0]", self.obstacle_size[0]),
            ("world.obstacle_size[1]", self.obstacle_size[1]),
            ("world.obstacle_size[2]", self.obstacle_size[2]),
            ("world.bar_length", self.bar_length),
            ("world.bar_section", self.bar_section),
            ("world.bar_height", self.bar_height),
            ("world.human_radius", self.human_radius),
            ("world.human_height", self.human_height),
        ] {
            positive(f, v)?;
        }
        non_negative("world.bar_offset_past_corner", self.bar_offset_past_corner)?;
        if self.drone_radius >= self.corridor_width / 2.0 {
            return Err(ConfigError::InvalidValue {
                field: "world.drone_radius",
                reason: format!(
                    "drone radius {} must be below the corridor half-width {}",
                    self.drone_radius,
                    self.corridor_width / 2.0
                ),
            });
        }
        if self.corridor_length <= self.corridor_width {
            return Err(ConfigError::InvalidValue {
                field: "world.corridor_length",
                reason: "corridor must be longer than it is wide".into(),
            });
        }
        if self.survey_advance >= self.leg_length {
            return Err(ConfigError::InvalidValue {
                field: "world.survey_advance",
                reason: "survey waypoint must lie inside the corner leg".into(),
            });
        }
        if self.bar_length > self.corridor_width {
            return Err(ConfigError::InvalidValue {
                field: "world.bar_length",
                reason: "bar is longer than the corridor is wide".into(),
            });
        }
        Ok(())
    }
}

impl ControlConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (f, v) in [
            ("control.dt", self.dt),
            ("control.max_speed", self.max_speed),
            ("control.max_accel", self.max_accel),
            ("control.goal_threshold", self.goal_threshold),
            ("control.sensor_fov_deg", self.sensor_fov_deg),
            ("control.sensor_range_default", self.sensor_range_default),
            ("control.sensor_range_dark", self.sensor_range_dark),
            ("control.avoid_distance", self.avoid_distance),
            ("control.person_slow_distance", self.person_slow_distance),
            ("control.person_slow_speed", self.person_slow_speed),
            ("control.backoff_duration", self.backoff_duration),
            ("control.max_episode_time", self.max_episode_time),
        ] {
            positive(f, v)?;
        }
        for (f, v) in [
            ("control.sensor_noise_std", self.sensor_noise_std),
            ("control.avoid_gain", self.avoid_gain),
            ("control.clearance_margin", self.clearance_margin),
        ] {
            non_negative(f, v)?;
        }
        if self.sensor_rays < 2 {
            return Err(ConfigError::InvalidValue {
                field: "control.sensor_rays",
                reason: "need at least two rays".into(),
            });
        }
        if self.sensor_fov_deg >= 360.0 {
            return Err(ConfigError::InvalidValue {
                field: "control.sensor_fov_deg",
                reason: "field of view must be below 360 degrees".into(),
            });
        }
        if self.person_slow_speed > self.max_speed {
            return Err(ConfigError::InvalidValue {
                field: "control.person_slow_speed",
                reason: "slow speed exceeds max speed".into(),
            });
        }
        Ok(())
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        non_negative("monitor.sr2_grace", self.sr2_grace)?;
        non_negative("monitor.speed_epsilon", self.speed_epsilon)
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.world.validate()?;
        self.control.validate()?;
        self.monitor.validate()
    }
}

/// Hex SHA-256 over the compact JSON encoding of any config value.
pub fn digest<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config values always serialize");
    hex::encode(Sha256::digest(bytes))
}
