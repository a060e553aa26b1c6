//! Maps a situation onto concrete mine geometry and a mission plan.
//!
//! Canonical layout with default [`WorldConfig`] (metres, floor plan):
//!
//! ```text
//!  y
//! 11.5 |                  +-----+
//!      |                  |     |
//!  8.0 |                  | WP3 |
//!      |                  |     |
//!  3.0 |                  |==   |   corner bar at z = 1.6
//!  1.5 +-----+------------+     |
//!      | WP1                WP2 |
//! -1.5 |     +------------------+
//!      +-----+
//!     -5     5           17    20   x
//! ```

use serde::{Deserialize, Serialize};

use crate::config::WorldConfig;
use crate::error::ConfigError;
use crate::geometry::{Aabb, Cylinder, Vec2, Vec3, WallSegment};
use crate::situation::Situation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbientLight {
    Default,
    TotalDarkness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolidKind {
    Wall,
    Obstacle,
    CornerBar,
    Human,
}

impl SolidKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolidKind::Wall => "wall",
            SolidKind::Obstacle => "obstacle",
            SolidKind::CornerBar => "corner_bar",
            SolidKind::Human => "human",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "wall" => SolidKind::Wall,
            "obstacle" => SolidKind::Obstacle,
            "corner_bar" => SolidKind::CornerBar,
            "human" => SolidKind::Human,
            _ => return None,
        })
    }
}

/// Axis-aligned rectangle of navigable floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloorRect {
    pub min: Vec2,
    pub max: Vec2,
}

impl FloorRect {
    fn new(min: (f64, f64), max: (f64, f64)) -> Self {
        Self {
            min: Vec2::new(min.0, min.1),
            max: Vec2::new(max.0, max.1),
        }
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        (self.min.x..=self.max.x).contains(&p.x) && (self.min.y..=self.max.y).contains(&p.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub walls: Vec<WallSegment>,
    pub floor: Vec<FloorRect>,
    pub waypoints: Vec<Vec3>,
    pub obstacles: Vec<Aabb>,
    pub human: Option<Cylinder>,
    pub ambient_light: AmbientLight,
    pub corner_bar: Aabb,
    pub drone_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionPlan {
    pub waypoint_sequence: Vec<usize>,
    pub cruise_altitude: f64,
}

impl MissionPlan {
    pub fn target(&self, scene: &Scene, mission_index: usize) -> Option<Vec3> {
        self.waypoint_sequence
            .get(mission_index)
            .map(|&i| scene.waypoints[i])
    }
}

impl Scene {
    pub fn human_position(&self) -> Option<Vec2> {
        self.human.map(|h| h.base)
    }

    pub fn inside_floor(&self, p: &Vec2) -> bool {
        self.floor.iter().any(|r| r.contains(p))
    }

    /// Smallest distance from `p` to any solid of the given kinds, with the
    /// kind that achieves it.
    pub fn nearest_solid(&self, p: &Vec3) -> (f64, SolidKind) {
        let mut best = (f64::INFINITY, SolidKind::Wall);
        let mut consider = |d: f64, k: SolidKind| {
            if d < best.0 {
                best = (d, k);
            }
        };
        for w in &self.walls {
            consider(w.distance(&p.xy()), SolidKind::Wall);
        }
        for o in &self.obstacles {
            consider(o.distance(p), SolidKind::Obstacle);
        }
        consider(self.corner_bar.distance(p), SolidKind::CornerBar);
        if let Some(h) = &self.human {
            consider(h.distance(p), SolidKind::Human);
        }
        best
    }

    /// Kind of the first solid the drone sphere at `p` touches, if any.
    pub fn collision_at(&self, p: &Vec3) -> Option<SolidKind> {
        let (d, kind) = self.nearest_solid(p);
        (d <= self.drone_radius).then_some(kind)
    }
}

struct Layout {
    half_zone: f64,
    half_width: f64,
    entrance_x: f64,
    end_x: f64,
    inner_x: f64,
    leg_top: f64,
}

impl Layout {
    fn new(cfg: &WorldConfig) -> Self {
        let half_zone = cfg.safe_zone_size / 2.0;
        let half_width = cfg.corridor_width / 2.0;
        let entrance_x = half_zone;
        let end_x = entrance_x + cfg.corridor_length;
        Self {
            half_zone,
            half_width,
            entrance_x,
            end_x,
            inner_x: end_x - cfg.corridor_width,
            leg_top: half_width + cfg.leg_length,
        }
    }

    fn walls(&self) -> Vec<WallSegment> {
        let (z, w) = (self.half_zone, self.half_width);
        vec![
            WallSegment::new((-z, -z), (z, -z)),
            WallSegment::new((-z, z), (z, z)),
            WallSegment::new((-z, -z), (-z, z)),
            WallSegment::new((self.entrance_x, -z), (self.entrance_x, -w)),
            WallSegment::new((self.entrance_x, w), (self.entrance_x, z)),
            WallSegment::new((self.entrance_x, -w), (self.end_x, -w)),
            WallSegment::new((self.entrance_x, w), (self.inner_x, w)),
            WallSegment::new((self.end_x, -w), (self.end_x, self.leg_top)),
            WallSegment::new((self.inner_x, w), (self.inner_x, self.leg_top)),
            WallSegment::new((self.inner_x, self.leg_top), (self.end_x, self.leg_top)),
        ]
    }

    fn floor(&self) -> Vec<FloorRect> {
        let (z, w) = (self.half_zone, self.half_width);
        vec![
            FloorRect::new((-z, -z), (z, z)),
            FloorRect::new((self.entrance_x, -w), (self.end_x, w)),
            FloorRect::new((self.inner_x, w), (self.end_x, self.leg_top)),
        ]
    }
}

/// Deterministic scene and plan for `s`.
///
/// Axis semantics: the corner axis adds the survey waypoint past the corner
/// and the out-and-back leg to it; the obstacle sits on the midpoint of the
/// first leg; the near-wall axis pushes the far waypoint (survey waypoint
/// with a corner, otherwise the corridor waypoint) to `near_wall_offset`
/// from a wall; darkness shortens the depth sensor; the human
/// stands at the entrance. The near-wall survey waypoint sits in front
/// of the far end of the corner leg; the near-wall corridor waypoint sits in front of
/// the corridor's end wall.
pub fn build_scene(s: &Situation, cfg: &WorldConfig) -> Result<(Scene, MissionPlan), ConfigError> {
    cfg.validate()?;
    let layout = Layout::new(cfg);
    let alt = cfg.cruise_altitude;

    let home = Vec3::new(0.0, 0.0, alt);
    let mut corridor_wp = Vec3::new(layout.inner_x, 0.0, alt);
    let mut waypoints = vec![home];
    let waypoint_sequence = if s.turning_corner {
        let survey_y = if s.waypoint_near_wall {
            layout.leg_top - cfg.near_wall_offset
        } else {
            layout.half_width + cfg.survey_advance
        };
        let survey = Vec3::new(layout.inner_x + layout.half_width, survey_y, alt);
        waypoints.push(corridor_wp);
        waypoints.push(survey);
        vec![0, 1, 2, 1, 0]
    } else {
        if s.waypoint_near_wall {
            corridor_wp.x = layout.end_x - cfg.near_wall_offset;
        }
        waypoints.push(corridor_wp);
        vec![0, 1, 0]
    };

    let mut obstacles = Vec::new();
    if s.obstacle_on_path {
        let mid = (waypoints[0] + waypoints[1]) / 2.0;
        let [w, d, h] = cfg.obstacle_size;
        obstacles.push(Aabb::new(
            Vec3::new(mid.x, mid.y, h / 2.0),
            Vec3::new(w, d, h),
        ));
    }

    let human = s.human_present.then(|| Cylinder {
        base: Vec2::new(cfg.human_position[0], cfg.human_position[1]),
        radius: cfg.human_radius,
        height: cfg.human_height,
    });

    let corner_bar = Aabb::new(
        Vec3::new(
            layout.inner_x + cfg.bar_length / 2.0,
            layout.half_width + cfg.bar_offset_past_corner,
            cfg.bar_height,
        ),
        Vec3::new(cfg.bar_length, cfg.bar_section, cfg.bar_section),
    );

    let scene = Scene {
        walls: layout.walls(),
        floor: layout.floor(),
        waypoints,
        obstacles,
        human,
        ambient_light: if s.darkness {
            AmbientLight::TotalDarkness
        } else {
            AmbientLight::Default
        },
        corner_bar,
        drone_radius: cfg.drone_radius,
    };
    check_geometry(&scene, &layout)?;
    Ok((
        scene,
        MissionPlan {
            waypoint_sequence,
            cruise_altitude: alt,
        },
    ))
}

fn check_geometry(scene: &Scene, layout: &Layout) -> Result<(), ConfigError> {
    let r = scene.drone_radius;
    for (index, wp) in scene.waypoints.iter().enumerate() {
        let p = wp.xy();
        let wall_clear = scene.walls.iter().all(|w| w.distance(&p) > r);
        let obstacle_clear = scene.obstacles.iter().all(|o| o.distance(wp) > r);
        if !scene.inside_floor(&p) || !wall_clear || !obstacle_clear {
            return Err(ConfigError::WaypointInWall {
                index: index + 1,
                x: p.x,
                y: p.y,
            });
        }
    }
    for o in &scene.obstacles {
        let (lo, hi) = (o.min(), o.max());
        if lo.x >= layout.entrance_x {
            let below = lo.y + layout.half_width;
            let above = layout.half_width - hi.y;
            let widest = below.max(above).max(0.0);
            if widest < 2.0 * r {
                return Err(ConfigError::CorridorBlocked {
                    gap: widest,
                    needed: 2.0 * r,
                });
            }
        }
    }
    Ok(())
}
