//! Scenario description, validation and the builtin test worlds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Rect, Vec2};
use crate::obstacle::{Obstacle, Shape};
use crate::swarm::ZoneConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetArea {
    pub center: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpawnConfig {
    pub region: Rect,
    pub agents: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub bounds: Rect,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub target: TargetArea,
    pub spawn: SpawnConfig,
    pub zones: ZoneConfig,
    pub v_max: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u32,
    pub collision_radius: f64,
    pub d_tar: f64,
}

fn default_dt() -> f64 {
    1.0
}

fn default_max_steps() -> u32 {
    200
}

/// Builtin scenario names accepted by [`Scenario::builtin`].
pub const BUILTINS: &[&str] = &["gauntlet", "open-field"];

/// A scenario document: a builtin reference with optional overrides, or a
/// complete scenario.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScenarioDoc {
    Builtin {
        builtin: String,
        #[serde(default)]
        agents: Option<usize>,
        #[serde(default)]
        max_steps: Option<u32>,
    },
    Full(Box<Scenario>),
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !self.bounds.is_valid() || self.bounds.width() <= 0.0 || self.bounds.height() <= 0.0 {
            return Err(Error::config("bounds must be a non-empty rectangle"));
        }
        self.zones.validate()?;
        for (i, o) in self.obstacles.iter().enumerate() {
            o.validate()
                .map_err(|e| Error::config(format!("obstacles[{i}]: {e}")))?;
        }
        if !(self.target.radius.is_finite() && self.target.radius > 0.0) {
            return Err(Error::config("target.radius must be > 0"));
        }
        let t = self.target;
        let target_box = Rect::new(
            Vec2::new(t.center.x - t.radius, t.center.y - t.radius),
            Vec2::new(t.center.x + t.radius, t.center.y + t.radius),
        );
        if !self.bounds.contains_rect(&target_box) {
            return Err(Error::config("target area must lie inside bounds"));
        }
        if !self.spawn.region.is_valid() || !self.bounds.contains_rect(&self.spawn.region) {
            return Err(Error::config("spawn region must lie inside bounds"));
        }
        if self.spawn.agents == 0 {
            return Err(Error::config("spawn.agents must be >= 1"));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if rect_intersects_obstacle(&self.spawn.region, o) {
                return Err(Error::config(format!(
                    "spawn region intersects obstacles[{i}]"
                )));
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("dt must be > 0"));
        }
        if self.max_steps < 1 {
            return Err(Error::config("max_steps must be >= 1"));
        }
        if !(self.collision_radius.is_finite() && self.collision_radius > 0.0) {
            return Err(Error::config("collision_radius must be > 0"));
        }
        if !(self.v_max.is_finite() && self.v_max > 0.0) {
            return Err(Error::config("v_max must be > 0"));
        }
        if !(self.d_tar.is_finite() && self.d_tar >= 0.0) {
            return Err(Error::config("d_tar must be >= 0"));
        }
        Ok(())
    }

    pub fn with_agents(mut self, n: usize) -> Self {
        self.spawn.agents = n;
        self
    }

    pub fn builtin(name: &str) -> Option<Scenario> {
        match name {
            "gauntlet" => Some(gauntlet()),
            "open-field" => Some(open_field()),
            _ => None,
        }
    }

    /// Labels of consecutive obstacle groups, in declaration order.
    pub fn obstacle_groups(&self) -> Vec<String> {
        let mut groups: Vec<String> = Vec::new();
        for o in &self.obstacles {
            let g = o.group.clone().unwrap_or_default();
            if groups.last() != Some(&g) {
                groups.push(g);
            }
        }
        groups
    }

    /// Horizontal extent covered by obstacles, if any.
    pub fn obstacle_span_x(&self) -> Option<(f64, f64)> {
        self.obstacles
            .iter()
            .map(|o| o.bounding_box())
            .fold(None, |acc, b| {
                Some(match acc {
                    None => (b.min.x, b.max.x),
                    Some((lo, hi)) => (f64::min(lo, b.min.x), f64::max(hi, b.max.x)),
                })
            })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Parses and validates a scenario document.
pub fn build_scenario(doc: &str) -> Result<Scenario> {
    let scenario = match Error::from_json::<ScenarioDoc>(doc) {
        Ok(ScenarioDoc::Builtin {
            builtin,
            agents,
            max_steps,
        }) => {
            let mut s = Scenario::builtin(&builtin)
                .ok_or_else(|| Error::config(format!("unknown builtin scenario `{builtin}`")))?;
            if let Some(n) = agents {
                s.spawn.agents = n;
            }
            if let Some(m) = max_steps {
                s.max_steps = m;
            }
            s
        }
        Ok(ScenarioDoc::Full(s)) => *s,
        // Untagged enums hide the field path; re-parse as a full scenario to recover it.
        Err(_) => Error::from_json::<Scenario>(doc)?,
    };
    scenario.validate()?;
    Ok(scenario)
}

fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = (q2 - q1).cross(p1 - q1);
    let d2 = (q2 - q1).cross(p2 - q1);
    let d3 = (p2 - p1).cross(q1 - p1);
    let d4 = (p2 - p1).cross(q2 - p1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Vec2, b: Vec2, p: Vec2, d: f64| {
        d == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn rect_intersects_obstacle(rect: &Rect, obstacle: &Obstacle) -> bool {
    match &obstacle.shape {
        Shape::Circle { center, radius } => {
            let clamped = Vec2::new(
                center.x.clamp(rect.min.x, rect.max.x),
                center.y.clamp(rect.min.y, rect.max.y),
            );
            clamped.distance(*center) <= *radius
        }
        Shape::Polygon { vertices } => {
            if vertices.iter().any(|v| rect.contains(*v)) {
                return true;
            }
            let corners = rect.corners();
            if corners.iter().any(|c| obstacle.contains(*c)) {
                return true;
            }
            let n = vertices.len();
            (0..n).any(|i| {
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                (0..4).any(|k| segments_intersect(a, b, corners[k], corners[(k + 1) % 4]))
            })
        }
    }
}

fn v(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

/// Three obstacle groups between spawn (left) and target (right): a tunnel of
/// two walls, a U-shaped polygon opening toward the swarm, and a convex pentagon.
///
/// Recorded experiments and the shipped optimized ruleset depend on every
/// number here.
pub fn gauntlet() -> Scenario {
    let tunnel_upper = Obstacle::polygon(vec![
        v(24.0, 33.0),
        v(38.0, 33.0),
        v(38.0, 46.0),
        v(18.0, 46.0),
    ])
    .with_group("tunnel");
    let tunnel_lower = Obstacle::polygon(vec![
        v(18.0, 14.0),
        v(38.0, 14.0),
        v(38.0, 27.0),
        v(24.0, 27.0),
    ])
    .with_group("tunnel");
    let u_shape = Obstacle::polygon(vec![
        v(50.0, 31.0),
        v(60.0, 31.0),
        v(60.0, 45.0),
        v(50.0, 45.0),
        v(50.0, 43.0),
        v(58.0, 43.0),
        v(58.0, 33.0),
        v(50.0, 33.0),
    ])
    .with_group("non_convex");
    let pentagon = Obstacle::polygon(vec![
        v(70.0, 27.0),
        v(74.0, 22.0),
        v(78.0, 23.0),
        v(78.0, 31.0),
        v(74.0, 32.0),
    ])
    .with_group("convex");
    Scenario {
        name: "gauntlet".into(),
        bounds: Rect::new(v(0.0, 0.0), v(100.0, 60.0)),
        obstacles: vec![tunnel_upper, tunnel_lower, u_shape, pentagon],
        target: TargetArea {
            center: v(92.0, 30.0),
            radius: 4.0,
        },
        spawn: SpawnConfig {
            region: Rect::new(v(4.0, 24.0), v(14.0, 36.0)),
            agents: 20,
        },
        zones: ZoneConfig {
            r0: 1.0,
            r1: 5.0,
            r2: 7.0,
            r3: 4.5,
        },
        v_max: 1.0,
        dt: 1.0,
        max_steps: 200,
        collision_radius: 1.2,
        d_tar: 15.0,
    }
}

/// Obstacle-free world with the gauntlet's dimensions.
pub fn open_field() -> Scenario {
    Scenario {
        name: "open-field".into(),
        obstacles: Vec::new(),
        ..gauntlet()
    }
}
