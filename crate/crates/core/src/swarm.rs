//! Agent state, zone-based neighbourhood partition and the generalized
//! velocity-update law.
//!
//! Each agent senses its surroundings through four concentric regions:
//! repulsion `[0, R0)`, alignment `[R0, R1)`, attraction `[R1, R2)` and an
//! obstacle-detection disk of radius `R3`. The update combines one term per
//! region, a unit pull toward the target and the agent's current velocity:
//!
//! ```text
//! v' = a Σ_rep (R0 - r)(p_i - p_j)/r
//!    + b (1/N_ali) Σ_ali v_j/|v_j|
//!    + c Σ_att (R2 - r)(p_j - p_i)/r
//!    + d Σ_obs (R3 - r)(p_i - p_k)/r
//!    + e (p_tar - p_i)/|p_tar - p_i|
//!    + v_i
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::obstacle::{nearest_obstacle_point, Obstacle};
use crate::scenario::TargetArea;

pub type AgentId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Active,
    Arrived,
    Dead,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Active => "active",
            Status::Arrived => "arrived",
            Status::Dead => "dead",
        }
    }

    pub fn parse(s: &str) -> Option<Status> {
        match s {
            "active" => Some(Status::Active),
            "arrived" => Some(Status::Arrived),
            "dead" => Some(Status::Dead),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub id: AgentId,
    pub pos: Vec2,
    pub vel: Vec2,
    pub status: Status,
    /// Step at which the agent reached the target; set iff `status == Arrived`.
    pub arrive_step: Option<u32>,
}

impl AgentState {
    pub fn new(id: AgentId, pos: Vec2, vel: Vec2) -> Self {
        AgentState {
            id,
            pos,
            vel,
            status: Status::Active,
            arrive_step: None,
        }
    }

    pub fn is_active(&self) -> bool {
        self.status == Status::Active
    }
}

/// Radii of the sensing regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneConfig {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl ZoneConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.r0, self.r1, self.r2, self.r3]
            .iter()
            .all(|r| r.is_finite());
        if !finite || !(0.0 < self.r0 && self.r0 < self.r1 && self.r1 < self.r2) {
            return Err(Error::config(format!(
                "zones must satisfy 0 < r0 < r1 < r2 (got r0={}, r1={}, r2={})",
                self.r0, self.r1, self.r2
            )));
        }
        if self.r3 <= 0.0 {
            return Err(Error::config(format!(
                "zones.r3 must be > 0 (got {})",
                self.r3
            )));
        }
        Ok(())
    }
}

/// Another agent as seen from the focal agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: AgentId,
    pub pos: Vec2,
    pub vel: Vec2,
    pub dist: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleContact {
    pub point: Vec2,
    pub dist: f64,
}

/// Zone membership of one focal agent. Agent lists are sorted by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeighborhoodPartition {
    pub rep: Vec<Neighbor>,
    pub ali: Vec<Neighbor>,
    pub att: Vec<Neighbor>,
    pub obs: Vec<ObstacleContact>,
}

impl NeighborhoodPartition {
    pub fn is_empty(&self) -> bool {
        self.rep.is_empty() && self.ali.is_empty() && self.att.is_empty() && self.obs.is_empty()
    }

    /// Removes alignment members without a heading (zero velocity).
    pub fn drop_stationary_aligners(&mut self) {
        self.ali.retain(|n| n.vel.norm() > 0.0);
    }
}

/// Sorts `others` into zones around `focal`.
///
/// Boundaries are half-open: `[0,R0)` repulsion, `[R0,R1)` alignment,
/// `[R1,R2)` attraction. Non-active agents and the focal agent itself are
/// skipped. Obstacles closer than `R3` contribute their nearest boundary point.
pub fn partition_neighbors(
    focal: &AgentState,
    others: &[AgentState],
    obstacles: &[Obstacle],
    zones: &ZoneConfig,
) -> Result<NeighborhoodPartition> {
    zones.validate()?;
    if !focal.is_active() {
        return Err(Error::Contract(format!(
            "focal agent {} is not active",
            focal.id
        )));
    }
    let mut part = NeighborhoodPartition::default();
    for other in others {
        if other.id == focal.id || !other.is_active() {
            continue;
        }
        let dist = focal.pos.distance(other.pos);
        let n = Neighbor {
            id: other.id,
            pos: other.pos,
            vel: other.vel,
            dist,
        };
        if dist < zones.r0 {
            part.rep.push(n);
        } else if dist < zones.r1 {
            part.ali.push(n);
        } else if dist < zones.r2 {
            part.att.push(n);
        }
    }
    for list in [&mut part.rep, &mut part.ali, &mut part.att] {
        list.sort_by_key(|n| n.id);
    }
    for obstacle in obstacles {
        // An agent inside an obstacle is dead by the next check; it has no contact.
        if let Ok((point, dist)) = nearest_obstacle_point(focal.pos, obstacle) {
            if dist < zones.r3 {
                part.obs.push(ObstacleContact { point, dist });
            }
        }
    }
    Ok(part)
}

/// Sensing context selecting which of the four rules drives an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Context {
    FreeFlight,
    ObstacleNear,
    TargetNear,
    ObstacleAndTarget,
}

impl Context {
    pub const ALL: [Context; 4] = [
        Context::FreeFlight,
        Context::ObstacleNear,
        Context::TargetNear,
        Context::ObstacleAndTarget,
    ];

    pub fn index(self) -> usize {
        match self {
            Context::FreeFlight => 0,
            Context::ObstacleNear => 1,
            Context::TargetNear => 2,
            Context::ObstacleAndTarget => 3,
        }
    }
}

pub fn classify_context(
    partition: &NeighborhoodPartition,
    focal: &AgentState,
    target: &TargetArea,
    d_tar: f64,
) -> Context {
    let obstacle = !partition.obs.is_empty();
    let near_target = focal.pos.distance(target.center) < d_tar;
    match (obstacle, near_target) {
        (true, true) => Context::ObstacleAndTarget,
        (true, false) => Context::ObstacleNear,
        (false, true) => Context::TargetNear,
        (false, false) => Context::FreeFlight,
    }
}

/// The five weights of one rule, each in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleWeights {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl RuleWeights {
    pub const fn uniform(w: f64) -> Self {
        RuleWeights {
            a: w,
            b: w,
            c: w,
            d: w,
            e: w,
        }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.a, self.b, self.c, self.d, self.e]
    }

    pub fn from_array(w: [f64; 5]) -> Self {
        RuleWeights {
            a: w[0],
            b: w[1],
            c: w[2],
            d: w[3],
            e: w[4],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in ["a", "b", "c", "d", "e"].iter().zip(self.to_array()) {
            if !(w > 0.0 && w < 1.0) {
                return Err(Error::config(format!(
                    "weight {name} = {w} is outside (0, 1)"
                )));
            }
        }
        Ok(())
    }
}

/// Four rules indexed by [`Context`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: [RuleWeights; 4],
}

impl RuleSet {
    pub const GENES: usize = 20;

    /// Baseline rule-based model: midpoint weights in every context.
    pub const fn baseline() -> Self {
        RuleSet {
            rules: [RuleWeights::uniform(0.5); 4],
        }
    }

    pub fn for_context(&self, ctx: Context) -> &RuleWeights {
        &self.rules[ctx.index()]
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.rules.iter().enumerate() {
            r.validate()
                .map_err(|e| Error::config(format!("rules[{i}]: {e}")))?;
        }
        Ok(())
    }

    pub fn flatten(&self) -> [f64; 20] {
        let mut out = [0.0; 20];
        for (i, r) in self.rules.iter().enumerate() {
            out[i * 5..i * 5 + 5].copy_from_slice(&r.to_array());
        }
        out
    }

    pub fn from_flat(genes: &[f64; 20]) -> Self {
        let mut rules = [RuleWeights::uniform(0.0); 4];
        for (i, r) in rules.iter_mut().enumerate() {
            let mut w = [0.0; 5];
            w.copy_from_slice(&genes[i * 5..i * 5 + 5]);
            *r = RuleWeights::from_array(w);
        }
        RuleSet { rules }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rs: RuleSet = Error::from_json(text)?;
        rs.validate()?;
        Ok(rs)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rule set serializes")
    }
}

/// The individual contributions of one velocity update, before summation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VelocityTerms {
    pub repulsion: Vec2,
    pub alignment: Vec2,
    pub attraction: Vec2,
    pub obstacle: Vec2,
    pub target: Vec2,
    pub inertia: Vec2,
}

impl VelocityTerms {
    pub fn total(&self) -> Vec2 {
        self.repulsion
            + self.alignment
            + self.attraction
            + self.obstacle
            + self.target
            + self.inertia
    }
}

pub fn velocity_terms(
    focal: &AgentState,
    partition: &NeighborhoodPartition,
    weights: &RuleWeights,
    target: Vec2,
    zones: &ZoneConfig,
) -> Result<VelocityTerms> {
    let p = focal.pos;

    let mut rep = Vec2::ZERO;
    for n in &partition.rep {
        // Coincident agents have no defined push direction.
        if n.dist > 0.0 {
            rep += (zones.r0 - n.dist) * (p - n.pos) / n.dist;
        }
    }

    let mut ali = Vec2::ZERO;
    if !partition.ali.is_empty() {
        for n in &partition.ali {
            let speed = n.vel.norm();
            if speed <= 0.0 {
                return Err(Error::degenerate(format!(
                    "alignment neighbour {} has zero speed",
                    n.id
                )));
            }
            ali += n.vel / speed;
        }
        ali = ali / partition.ali.len() as f64;
    }

    let mut att = Vec2::ZERO;
    for n in &partition.att {
        att += (zones.r2 - n.dist) * (n.pos - p) / n.dist;
    }

    let mut obs = Vec2::ZERO;
    for k in &partition.obs {
        if k.dist > 0.0 {
            obs += (zones.r3 - k.dist) * (p - k.point) / k.dist;
        }
    }

    let to_target = target - p;
    let r_tar = to_target.norm();
    let tar = if r_tar > 0.0 {
        to_target / r_tar
    } else {
        Vec2::ZERO
    };

    Ok(VelocityTerms {
        repulsion: weights.a * rep,
        alignment: weights.b * ali,
        attraction: weights.c * att,
        obstacle: weights.d * obs,
        target: weights.e * tar,
        inertia: focal.vel,
    })
}

/// Candidate next velocity of `focal` (current velocity plus all steering terms).
pub fn velocity_update(
    focal: &AgentState,
    partition: &NeighborhoodPartition,
    weights: &RuleWeights,
    target: Vec2,
    zones: &ZoneConfig,
) -> Result<Vec2> {
    velocity_terms(focal, partition, weights, target, zones).map(|t| t.total())
}

/// Rescales `v` to at most `v_max`, preserving direction.
pub fn clamp_speed(v: Vec2, v_max: f64) -> Vec2 {
    let speed = v.norm();
    if speed <= v_max {
        v
    } else {
        v * (v_max / speed)
    }
}
