//! Primitive solids and the intersection tests used by sensing and
//! collision checking. Walls are vertical planes of unbounded height over
//! an axis-aligned floor-plan segment.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallSegment {
    pub a: Vec2,
    pub b: Vec2,
}

impl WallSegment {
    pub fn new(a: (f64, f64), b: (f64, f64)) -> Self {
        Self {
            a: Vec2::new(a.0, a.1),
            b: Vec2::new(b.0, b.1),
        }
    }

    pub fn closest_point(&self, p: &Vec2) -> Vec2 {
        let ab = self.b - self.a;
        let len2 = ab.norm_squared();
        if len2 == 0.0 {
            return self.a;
        }
        let t = ((p - self.a).dot(&ab) / len2).clamp(0.0, 1.0);
        self.a + ab * t
    }

    pub fn distance(&self, p: &Vec2) -> f64 {
        (p - self.closest_point(p)).norm()
    }

    /// Distance along the ray to the segment, if hit at `t >= 0`.
    pub fn ray_hit(&self, origin: &Vec2, dir: &Vec2) -> Option<f64> {
        let seg = self.b - self.a;
        let denom = cross(dir, &seg);
        if denom.abs() < 1e-12 {
            return None;
        }
        let w = self.a - origin;
        let t = cross(&w, &seg) / denom;
        let u = cross(&w, dir) / denom;
        (t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u)).then_some(t)
    }
}

/// Axis-aligned box given by its center and full extents
/// (width along x, depth along y, height along z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub center: Vec3,
    pub size: Vec3,
}

impl Aabb {
    pub fn new(center: Vec3, size: Vec3) -> Self {
        Self { center, size }
    }

    pub fn min(&self) -> Vec3 {
        self.center - self.size / 2.0
    }

    pub fn max(&self) -> Vec3 {
        self.center + self.size / 2.0
    }

    pub fn closest_point(&self, p: &Vec3) -> Vec3 {
        let (lo, hi) = (self.min(), self.max());
        Vec3::new(
            p.x.clamp(lo.x, hi.x),
            p.y.clamp(lo.y, hi.y),
            p.z.clamp(lo.z, hi.z),
        )
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        (p - self.closest_point(p)).norm()
    }

    pub fn overlaps_height(&self, z_lo: f64, z_hi: f64) -> bool {
        self.min().z <= z_hi && self.max().z >= z_lo
    }

    /// Slab test of a horizontal ray against the box footprint.
    pub fn ray_hit_2d(&self, origin: &Vec2, dir: &Vec2) -> Option<f64> {
        let (lo, hi) = (self.min(), self.max());
        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        for (o, d, l, h) in [(origin.x, dir.x, lo.x, hi.x), (origin.y, dir.y, lo.y, hi.y)] {
            if d.abs() < 1e-12 {
                if o < l || o > h {
                    return None;
                }
            } else {
                let (t1, t2) = ((l - o) / d, (h - o) / d);
                t_near = t_near.max(t1.min(t2));
                t_far = t_far.min(t1.max(t2));
            }
        }
        if t_near > t_far || t_far < 0.0 {
            None
        } else {
            Some(t_near.max(0.0))
        }
    }
}

/// Upright cylinder standing on the floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub base: Vec2,
    pub radius: f64,
    pub height: f64,
}

impl Cylinder {
    pub fn distance(&self, p: &Vec3) -> f64 {
        let radial = (p.xy() - self.base).norm();
        let dr = (radial - self.radius).max(0.0);
        let dz = if p.z < 0.0 {
            -p.z
        } else if p.z > self.height {
            p.z - self.height
        } else {
            0.0
        };
        dr.hypot(dz)
    }
}

pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

pub fn unit_from_angle(theta: f64) -> Vec2 {
    Vec2::new(theta.cos(), theta.sin())
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut t = theta % tau;
    if t <= -std::f64::consts::PI {
        t += tau;
    } else if t > std::f64::consts::PI {
        t -= tau;
    }
    t
}
