//! Static SVG rendering of one episode over the mine floor plan.

use std::fmt::Write;

use sitcov::monitor::{Requirement, ViolationRecord};
use sitcov::scene::Scene;
use sitcov::sim::EpisodeResult;

const PX_PER_M: f64 = 24.0;
const MARGIN: f64 = 1.0;

struct Frame {
    min_x: f64,
    max_y: f64,
}

impl Frame {
    fn x(&self, x: f64) -> f64 {
        (x - self.min_x + MARGIN) * PX_PER_M
    }

    fn y(&self, y: f64) -> f64 {
        (self.max_y - y + MARGIN) * PX_PER_M
    }
}

pub fn episode_svg(
    scene: &Scene,
    result: &EpisodeResult,
    violations: &[ViolationRecord],
) -> String {
    let pts = scene.walls.iter().flat_map(|w| [w.a, w.b]);
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in pts {
        min_x = min_x.min(p.x);
        max_x = max_x.max(p.x);
        min_y = min_y.min(p.y);
        max_y = max_y.max(p.y);
    }
    let f = Frame { min_x, max_y };
    let width = (max_x - min_x + 2.0 * MARGIN) * PX_PER_M;
    let height = (max_y - min_y + 2.0 * MARGIN) * PX_PER_M;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.1} {height:.1}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r##"<rect width="100%" height="100%" fill="#fbfbf8"/>"##
    );
    for w in &scene.walls {
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#333" stroke-width="3"/>"##,
            f.x(w.a.x),
            f.y(w.a.y),
            f.x(w.b.x),
            f.y(w.b.y)
        );
    }
    let mut rect = |b: &sitcov::geometry::Aabb, fill: &str| {
        let (lo, hi) = (b.min(), b.max());
        let _ = writeln!(
            svg,
            r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{fill}"/>"#,
            f.x(lo.x),
            f.y(hi.y),
            (hi.x - lo.x) * PX_PER_M,
            (hi.y - lo.y) * PX_PER_M
        );
    };
    for o in &scene.obstacles {
        rect(o, "#8a6d3b");
    }
    rect(&scene.corner_bar, "#e08a00");
    if let Some(h) = &scene.human {
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.1}" cy="{:.1}" r="{:.1}" fill="#2a7ab0"/>"##,
            f.x(h.base.x),
            f.y(h.base.y),
            h.radius * PX_PER_M
        );
    }
    for (i, w) in scene.waypoints.iter().enumerate() {
        let (cx, cy) = (f.x(w.x), f.y(w.y));
        let _ = writeln!(
            svg,
            r##"<circle cx="{cx:.1}" cy="{cy:.1}" r="4" fill="none" stroke="#2e8b57" stroke-width="2"/><text x="{:.1}" y="{:.1}" fill="#2e8b57">WP{}</text>"##,
            cx + 6.0,
            cy - 6.0,
            i + 1
        );
    }
    let path: Vec<String> = result
        .trajectory
        .iter()
        .map(|s| format!("{:.1},{:.1}", f.x(s.position.x), f.y(s.position.y)))
        .collect();
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="1.5"/>"##,
        path.join(" ")
    );
    for v in violations {
        let (cx, cy) = (f.x(v.position.x), f.y(v.position.y));
        let color = match v.requirement {
            Requirement::SR1 => "#d00000",
            Requirement::SR2 => "#7b2cbf",
        };
        let _ = writeln!(
            svg,
            r#"<path d="M{:.1},{:.1} l10,10 m0,-10 l-10,10" stroke="{color}" stroke-width="2.5"/><text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            cx - 5.0,
            cy - 5.0,
            cx + 8.0,
            cy + 14.0,
            v.id
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="8" y="16">situation {} : {}</text>"#,
        result.situation_id,
        result.outcome.as_str()
    );
    svg.push_str("</svg>\n");
    svg
}
