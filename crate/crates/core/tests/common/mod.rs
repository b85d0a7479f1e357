//! Brute-force reference implementations used by the integration tests.
//!
//! These work on plain `(f64, f64)` tuples and deliberately avoid the crate's
//! geometry helpers.

#![allow(dead_code)]

use gflock::sim::EpisodeLog;
use gflock::swarm::{RuleWeights, Status, ZoneConfig};
use gflock::Vec2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type P = (f64, f64);

pub fn tup(v: Vec2) -> P {
    (v.x, v.y)
}

pub fn vec(p: P) -> Vec2 {
    Vec2::new(p.0, p.1)
}

fn dist(a: P, b: P) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

pub fn gamma(points: &[P]) -> f64 {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.1).sum::<f64>() / n;
    points.iter().map(|p| dist(*p, (cx, cy))).sum::<f64>() / n
}

pub fn population_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n
}

fn wrap_deg(mut a: f64) -> f64 {
    while a > 180.0 {
        a -= 360.0;
    }
    while a <= -180.0 {
        a += 360.0;
    }
    a
}

/// Reference heading: mean velocity, else summed unit headings, else the first mover.
pub fn heading(vels: &[P]) -> Option<(f64, Vec<f64>)> {
    let speed = |v: &P| (v.0 * v.0 + v.1 * v.1).sqrt();
    let sum = vels.iter().fold((0.0, 0.0), |a, v| (a.0 + v.0, a.1 + v.1));
    let units = vels
        .iter()
        .filter(|v| speed(v) > 0.0)
        .fold((0.0, 0.0), |a, v| {
            (a.0 + v.0 / speed(v), a.1 + v.1 / speed(v))
        });
    let reference = if speed(&sum) > 0.0 {
        sum
    } else if speed(&units) > 0.0 {
        units
    } else {
        *vels.iter().find(|v| speed(v) > 0.0)?
    };
    let base = reference.1.atan2(reference.0).to_degrees();
    let per: Vec<f64> = vels
        .iter()
        .map(|v| {
            if speed(v) > 0.0 {
                wrap_deg(v.1.atan2(v.0).to_degrees() - base)
            } else {
                0.0
            }
        })
        .collect();
    let delta = per.iter().sum::<f64>() / per.len() as f64;
    Some((delta, per))
}

pub fn uniformity(points: &[P]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let mut nn = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let mut ds: Vec<f64> = points
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, q)| dist(*p, *q))
            .collect();
        ds.sort_by(f64::total_cmp);
        nn.push(ds[0]);
    }
    let mean = nn.iter().sum::<f64>() / nn.len() as f64;
    if mean == 0.0 {
        0.0
    } else {
        population_variance(&nn).sqrt() / mean
    }
}

/// Fraction of agents whose final status is dead.
pub fn death_rate(log: &EpisodeLog) -> f64 {
    let last = log.snapshots.last().expect("nonempty log");
    last.statuses.iter().filter(|s| **s == Status::Dead).count() as f64 / log.n_total as f64
}

#[derive(Debug, Clone)]
pub struct Terms {
    pub rep: P,
    pub ali: P,
    pub att: P,
    pub obs: P,
    pub tar: P,
}

/// Steering terms of agent `focal` written straight from the update formula.
/// Obstacles are circles `(center, radius)`.
pub fn steering(
    focal: usize,
    positions: &[P],
    velocities: &[P],
    circles: &[(P, f64)],
    w: &RuleWeights,
    z: &ZoneConfig,
    target: P,
) -> Terms {
    let p = positions[focal];
    let (mut rep, mut ali, mut att, mut obs) = ((0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0));
    let mut n_ali = 0usize;
    for (j, q) in positions.iter().enumerate() {
        if j == focal {
            continue;
        }
        let r = dist(p, *q);
        if r < z.r0 {
            if r > 0.0 {
                rep.0 += (z.r0 - r) * (p.0 - q.0) / r;
                rep.1 += (z.r0 - r) * (p.1 - q.1) / r;
            }
        } else if r < z.r1 {
            let v = velocities[j];
            let s = (v.0 * v.0 + v.1 * v.1).sqrt();
            ali.0 += v.0 / s;
            ali.1 += v.1 / s;
            n_ali += 1;
        } else if r < z.r2 {
            att.0 += (z.r2 - r) * (q.0 - p.0) / r;
            att.1 += (z.r2 - r) * (q.1 - p.1) / r;
        }
    }
    if n_ali > 0 {
        ali = (ali.0 / n_ali as f64, ali.1 / n_ali as f64);
    }
    for (c, radius) in circles {
        let to_c = dist(p, *c);
        let r = to_c - radius;
        if r > 0.0 && r < z.r3 {
            let k = (
                c.0 + radius * (p.0 - c.0) / to_c,
                c.1 + radius * (p.1 - c.1) / to_c,
            );
            obs.0 += (z.r3 - r) * (p.0 - k.0) / r;
            obs.1 += (z.r3 - r) * (p.1 - k.1) / r;
        }
    }
    let rt = dist(p, target);
    let tar = if rt > 0.0 {
        ((target.0 - p.0) / rt, (target.1 - p.1) / rt)
    } else {
        (0.0, 0.0)
    };
    let s = |k: f64, v: P| (k * v.0, k * v.1);
    Terms {
        rep: s(w.a, rep),
        ali: s(w.b, ali),
        att: s(w.c, att),
        obs: s(w.d, obs),
        tar: s(w.e, tar),
    }
}

pub fn random_point(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> P {
    (rng.random_range(lo..hi), rng.random_range(lo..hi))
}

/// A nonzero velocity with speed in `[0.05, 1.5)`.
pub fn random_velocity(rng: &mut ChaCha8Rng) -> P {
    let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let speed = rng.random_range(0.05..1.5);
    (speed * angle.cos(), speed * angle.sin())
}

pub fn random_weights(rng: &mut ChaCha8Rng) -> RuleWeights {
    RuleWeights {
        a: rng.random_range(0.01..0.99),
        b: rng.random_range(0.01..0.99),
        c: rng.random_range(0.01..0.99),
        d: rng.random_range(0.01..0.99),
        e: rng.random_range(0.01..0.99),
    }
}

pub fn max_abs_diff(a: P, b: Vec2) -> f64 {
    (a.0 - b.x).abs().max((a.1 - b.y).abs())
}
