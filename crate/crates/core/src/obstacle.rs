//! Static obstacles and nearest-boundary-point queries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Rect, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Circle {
        center: Vec2,
        radius: f64,
    },
    /// Closed polygon; the last vertex connects back to the first.
    Polygon {
        vertices: Vec<Vec2>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    /// Optional label; consecutive obstacles sharing a label form one group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(flatten)]
    pub shape: Shape,
}

impl Obstacle {
    pub fn circle(center: Vec2, radius: f64) -> Self {
        Obstacle {
            group: None,
            shape: Shape::Circle { center, radius },
        }
    }

    pub fn polygon(vertices: Vec<Vec2>) -> Self {
        Obstacle {
            group: None,
            shape: Shape::Polygon { vertices },
        }
    }

    pub fn with_group(mut self, group: &str) -> Self {
        self.group = Some(group.to_string());
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.shape {
            Shape::Circle { center, radius } => {
                if !center.is_finite() || !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::config(format!(
                        "circle radius must be > 0 (got {radius})"
                    )));
                }
            }
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 || vertices.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config("polygon needs at least 3 finite vertices"));
                }
                if signed_area(vertices).abs() <= f64::EPSILON {
                    return Err(Error::config("polygon vertices are collinear"));
                }
            }
        }
        Ok(())
    }

    pub fn bounding_box(&self) -> Rect {
        match &self.shape {
            Shape::Circle { center, radius } => Rect::new(
                Vec2::new(center.x - radius, center.y - radius),
                Vec2::new(center.x + radius, center.y + radius),
            ),
            Shape::Polygon { vertices } => {
                let mut min = vertices[0];
                let mut max = vertices[0];
                for v in vertices {
                    min = Vec2::new(min.x.min(v.x), min.y.min(v.y));
                    max = Vec2::new(max.x.max(v.x), max.y.max(v.y));
                }
                Rect::new(min, max)
            }
        }
    }

    /// True if `p` lies strictly inside the obstacle.
    pub fn contains(&self, p: Vec2) -> bool {
        matches!(nearest_obstacle_point(p, self), Err(Error::InsideObstacle))
    }
}

fn signed_area(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

/// Closest point of segment `a`-`b` to `p`.
pub fn closest_point_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    a + ab * t
}

/// Even-odd crossing test. Points on the boundary may go either way.
fn crossing_inside(p: Vec2, vertices: &[Vec2]) -> bool {
    let mut inside = false;
    let n = vertices.len();
    let mut j = n - 1;
    for i in 0..n {
        let (vi, vj) = (vertices[i], vertices[j]);
        if (vi.y > p.y) != (vj.y > p.y) {
            let x = vj.x + (p.y - vj.y) * (vi.x - vj.x) / (vi.y - vj.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Nearest point on the obstacle boundary to `pos` and its distance.
///
/// Polygon ties are broken by the lowest edge index (edge `i` joins vertex
/// `i` to vertex `i+1`). Returns [`Error::InsideObstacle`] when `pos` is
/// strictly inside; a point on the boundary yields distance 0.
pub fn nearest_obstacle_point(pos: Vec2, obstacle: &Obstacle) -> Result<(Vec2, f64)> {
    match &obstacle.shape {
        Shape::Circle { center, radius } => {
            let off = pos - *center;
            let d = off.norm();
            if d < *radius {
                return Err(Error::InsideObstacle);
            }
            let point = *center + off * (radius / d);
            Ok((point, d - radius))
        }
        Shape::Polygon { vertices } => {
            let n = vertices.len();
            let mut best = (vertices[0], f64::INFINITY);
            for i in 0..n {
                let q = closest_point_on_segment(pos, vertices[i], vertices[(i + 1) % n]);
                let d = pos.distance(q);
                if d < best.1 {
                    best = (q, d);
                }
            }
            if best.1 > 0.0 && crossing_inside(pos, vertices) {
                return Err(Error::InsideObstacle);
            }
            Ok(best)
        }
    }
}
