//! Order parameters, the comparison metric vector and the fitness function.
//!
//! All per-step quantities are computed over the agents that are still
//! active in that snapshot; arrived and dead agents are frozen and excluded.
//! "Active steps" are snapshots with at least one active agent, and their
//! count is the `T` used by every time average.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::sim::{EpisodeLog, EventKind};

pub fn centroid(positions: &[Vec2]) -> Result<Vec2> {
    if positions.is_empty() {
        return Err(Error::degenerate("centroid of an empty set"));
    }
    let sum = positions.iter().fold(Vec2::ZERO, |acc, p| acc + *p);
    Ok(sum / positions.len() as f64)
}

/// Mean distance of the members to their centroid.
pub fn gamma_t(positions: &[Vec2]) -> Result<f64> {
    let c = centroid(positions)?;
    Ok(positions.iter().map(|p| p.distance(c)).sum::<f64>() / positions.len() as f64)
}

/// Population variance (divisor = series length).
pub fn stability_variance(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::degenerate("variance of an empty series"));
    }
    // Offsets from the first sample are exactly zero for a constant series.
    let n = series.len() as f64;
    let offsets: Vec<f64> = series.iter().map(|g| g - series[0]).collect();
    let mean = offsets.iter().sum::<f64>() / n;
    Ok(offsets.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n)
}

/// Signed angle from `from` to `to` in degrees, in `(-180, 180]`.
fn signed_angle_deg(from: Vec2, to: Vec2) -> f64 {
    let a = from.cross(to).atan2(from.dot(to)).to_degrees();
    if a <= -180.0 {
        a + 360.0
    } else {
        a
    }
}

/// Direction of the group's mean velocity.
///
/// Falls back to the sum of unit headings when the velocities cancel, and to
/// the first moving agent's heading when the headings cancel too.
fn mean_heading(velocities: &[Vec2]) -> Option<Vec2> {
    let sum = velocities.iter().fold(Vec2::ZERO, |acc, v| acc + *v);
    if let Some(u) = sum.normalized() {
        return Some(u);
    }
    let units = velocities
        .iter()
        .filter_map(|v| v.normalized())
        .fold(Vec2::ZERO, |acc, u| acc + u);
    units
        .normalized()
        .or_else(|| velocities.iter().find_map(|v| v.normalized()))
}

/// Per-agent heading angle (degrees) relative to the group heading, and their mean.
///
/// Agents with zero velocity get angle 0.
pub fn heading_deviation(velocities: &[Vec2]) -> Result<(f64, Vec<f64>)> {
    let reference =
        mean_heading(velocities).ok_or_else(|| Error::degenerate("all velocities are zero"))?;
    let per_agent: Vec<f64> = velocities
        .iter()
        .map(|v| {
            if v.norm() > 0.0 {
                signed_angle_deg(reference, *v)
            } else {
                0.0
            }
        })
        .collect();
    let delta = per_agent.iter().sum::<f64>() / per_agent.len() as f64;
    Ok((delta, per_agent))
}

/// Coefficient of variation of nearest-neighbour distances.
pub fn uniformity_t(positions: &[Vec2]) -> f64 {
    let n = positions.len();
    if n < 2 {
        return 0.0;
    }
    let nn: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| positions[i].distance(positions[j]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mean = nn.iter().sum::<f64>() / n as f64;
    if mean == 0.0 {
        return 0.0;
    }
    let var = nn.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n as f64;
    var.sqrt() / mean
}

/// γ_t for every active step.
pub fn gamma_series(log: &EpisodeLog) -> Vec<f64> {
    log.snapshots
        .iter()
        .filter_map(|s| {
            let p = s.active_positions();
            (!p.is_empty()).then(|| gamma_t(&p).expect("nonempty"))
        })
        .collect()
}

/// `(step, uniformity)` for every active step.
pub fn uniformity_series(log: &EpisodeLog) -> Vec<(usize, f64)> {
    log.snapshots
        .iter()
        .enumerate()
        .filter_map(|(t, s)| {
            let p = s.active_positions();
            (!p.is_empty()).then(|| (t, uniformity_t(&p)))
        })
        .collect()
}

fn active_steps(log: &EpisodeLog) -> usize {
    log.snapshots
        .iter()
        .filter(|s| s.statuses.contains(&crate::swarm::Status::Active))
        .count()
}

/// Time-mean of the per-step heading standard deviation (degrees).
///
/// Steps with fewer than two moving active agents are skipped.
pub fn anisotropy(log: &EpisodeLog) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for s in &log.snapshots {
        let vels = s.active_velocities();
        if vels.iter().filter(|v| v.norm() > 0.0).count() < 2 {
            continue;
        }
        let (delta, theta) = heading_deviation(&vels)?;
        let var = theta.iter().map(|t| (t - delta) * (t - delta)).sum::<f64>() / theta.len() as f64;
        sum += var.sqrt();
        count += 1;
    }
    if count == 0 {
        return Err(Error::degenerate("no step with two or more moving agents"));
    }
    Ok(sum / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageTime {
    pub seconds: f64,
    /// No agent arrived; `seconds` holds the worst case `max_steps * dt`.
    pub zero_arrivals: bool,
}

/// Mean travel time of the agents that arrived (navigation starts at step 0).
pub fn average_time(log: &EpisodeLog) -> AverageTime {
    let steps: Vec<f64> = log
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Arrived)
        .map(|e| f64::from(e.step))
        .collect();
    if steps.is_empty() {
        return AverageTime {
            seconds: f64::from(log.max_steps) * log.dt,
            zero_arrivals: true,
        };
    }
    AverageTime {
        seconds: steps.iter().sum::<f64>() / steps.len() as f64 * log.dt,
        zero_arrivals: false,
    }
}

pub fn death_rate(log: &EpisodeLog) -> f64 {
    if log.n_total == 0 {
        return 0.0;
    }
    log.count(EventKind::Died) as f64 / log.n_total as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessVariant {
    /// The five-factor product exactly as printed; zero whenever nobody dies.
    Literal,
    /// ε-smoothed factors with the γ variance; strictly positive.
    Robust,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub variant: FitnessVariant,
}

impl Default for FitnessConfig {
    fn default() -> Self {
        FitnessConfig {
            alpha: 1.0,
            epsilon: 1e-3,
            variant: FitnessVariant::Robust,
        }
    }
}

impl FitnessConfig {
    pub fn literal() -> Self {
        FitnessConfig {
            variant: FitnessVariant::Literal,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite())
            || !(self.epsilon > 0.0 && self.epsilon.is_finite())
        {
            return Err(Error::config("fitness alpha and epsilon must be > 0"));
        }
        Ok(())
    }
}

/// The raw factors entering the fitness product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessFactors {
    pub average_time: f64,
    pub death_rate: f64,
    /// Time mean of γ_t.
    pub aggregation: f64,
    /// Σ_t (γ_t − γ̄) / T, the signed deviation sum.
    pub gamma_signed_mean: f64,
    /// Σ_t (γ_t − γ̄)² / T.
    pub stability_variance: f64,
    /// Σ_t Σ_j (θ_j − δ)² / T.
    pub heading_dispersion: f64,
}

pub fn fitness_factors(log: &EpisodeLog) -> Result<FitnessFactors> {
    if log.snapshots.is_empty() {
        return Err(Error::degenerate("episode log has no snapshots"));
    }
    let gammas = gamma_series(log);
    let (aggregation, gamma_signed_mean, stability) = if gammas.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        let t = gammas.len() as f64;
        let mean = gammas.iter().sum::<f64>() / t;
        let signed = gammas.iter().map(|g| g - mean).sum::<f64>() / t;
        (mean, signed, stability_variance(&gammas)?)
    };
    let mut heading_sum = 0.0;
    for s in &log.snapshots {
        let vels = s.active_velocities();
        if let Ok((delta, theta)) = heading_deviation(&vels) {
            heading_sum += theta.iter().map(|t| (t - delta) * (t - delta)).sum::<f64>();
        }
    }
    let steps = active_steps(log);
    let heading_dispersion = if steps == 0 {
        0.0
    } else {
        heading_sum / steps as f64
    };
    Ok(FitnessFactors {
        average_time: average_time(log).seconds,
        death_rate: death_rate(log),
        aggregation,
        gamma_signed_mean,
        stability_variance: stability,
        heading_dispersion,
    })
}

impl FitnessFactors {
    pub fn combine(&self, cfg: &FitnessConfig) -> f64 {
        match cfg.variant {
            FitnessVariant::Literal => {
                self.average_time
                    * self.death_rate
                    * self.aggregation
                    * self.gamma_signed_mean
                    * self.heading_dispersion
                    * cfg.alpha
            }
            FitnessVariant::Robust => {
                let eps = cfg.epsilon;
                (eps + self.average_time)
                    * (eps + self.death_rate)
                    * (eps + self.aggregation)
                    * (eps + self.stability_variance)
                    * (eps + self.heading_dispersion)
                    * cfg.alpha
            }
        }
    }
}

/// Composite fitness of one episode; smaller is better.
pub fn fitness(log: &EpisodeLog, cfg: &FitnessConfig) -> Result<f64> {
    Ok(fitness_factors(log)?.combine(cfg))
}

/// Comparison metric vector of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub aggregation: f64,
    pub anisotropy: f64,
    pub average_time: f64,
    pub uniformity: f64,
    pub death_rate: f64,
    pub stability_variance: f64,
    pub fitness: f64,
}

impl MetricsReport {
    pub const FIELDS: [&'static str; 7] = [
        "aggregation",
        "anisotropy",
        "average_time",
        "uniformity",
        "death_rate",
        "stability_variance",
        "fitness",
    ];

    pub fn values(&self) -> [f64; 7] {
        [
            self.aggregation,
            self.anisotropy,
            self.average_time,
            self.uniformity,
            self.death_rate,
            self.stability_variance,
            self.fitness,
        ]
    }

    pub fn from_values(v: [f64; 7]) -> Self {
        MetricsReport {
            aggregation: v[0],
            anisotropy: v[1],
            average_time: v[2],
            uniformity: v[3],
            death_rate: v[4],
            stability_variance: v[5],
            fitness: v[6],
        }
    }

    /// Field-wise mean of several reports.
    pub fn mean(reports: &[MetricsReport]) -> Option<MetricsReport> {
        if reports.is_empty() {
            return None;
        }
        let mut acc = [0.0; 7];
        for r in reports {
            for (a, v) in acc.iter_mut().zip(r.values()) {
                *a += v;
            }
        }
        Some(MetricsReport::from_values(
            acc.map(|a| a / reports.len() as f64),
        ))
    }

    /// First field whose absolute difference exceeds `tol`.
    pub fn first_divergence(
        &self,
        other: &MetricsReport,
        tol: f64,
    ) -> Option<(&'static str, f64, f64)> {
        Self::FIELDS
            .iter()
            .zip(self.values().into_iter().zip(other.values()))
            .find(|(_, (a, b))| (a - b).abs().is_nan() || (a - b).abs() > tol)
            .map(|(name, (a, b))| (*name, a, b))
    }
}

pub fn metrics_report(log: &EpisodeLog, cfg: &FitnessConfig) -> Result<MetricsReport> {
    let factors = fitness_factors(log)?;
    let anisotropy = match anisotropy(log) {
        Ok(a) => a,
        Err(Error::Degenerate(_)) => 0.0,
        Err(e) => return Err(e),
    };
    let uni = uniformity_series(log);
    let uniformity = if uni.is_empty() {
        0.0
    } else {
        uni.iter().map(|(_, u)| u).sum::<f64>() / uni.len() as f64
    };
    Ok(MetricsReport {
        aggregation: factors.aggregation,
        anisotropy,
        average_time: factors.average_time,
        uniformity,
        death_rate: factors.death_rate,
        stability_variance: factors.stability_variance,
        fitness: factors.combine(cfg),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Event, Snapshot};
    use crate::swarm::Status;

    fn pts(v: &[(f64, f64)]) -> Vec<Vec2> {
        v.iter().map(|&(x, y)| Vec2::new(x, y)).collect()
    }

    fn square() -> Vec<Vec2> {
        pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(
            centroid(&pts(&[(0.0, 0.0), (2.0, 0.0)])).unwrap(),
            Vec2::new(1.0, 0.0)
        );
        assert_eq!(
            centroid(&pts(&[(3.5, -2.0)])).unwrap(),
            Vec2::new(3.5, -2.0)
        );
        assert_eq!(centroid(&square()).unwrap(), Vec2::new(0.5, 0.5));
        assert!(matches!(centroid(&[]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_t(&pts(&[(2.0, 2.0); 5])).unwrap(), 0.0);
        assert_eq!(gamma_t(&pts(&[(0.0, 0.0), (2.0, 0.0)])).unwrap(), 1.0);
        assert!((gamma_t(&square()).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(gamma_t(&[]).is_err());
    }

    #[test]
    fn variance_examples() {
        assert_eq!(stability_variance(&[2.5, 2.5, 2.5]).unwrap(), 0.0);
        assert_eq!(stability_variance(&[1.0, 3.0]).unwrap(), 1.0);
        assert_eq!(stability_variance(&[7.0]).unwrap(), 0.0);
        assert!(stability_variance(&[]).is_err());
    }

    #[test]
    fn heading_examples() {
        let same = vec![Vec2::new(1.0, 1.0); 3];
        let (d, th) = heading_deviation(&same).unwrap();
        assert_eq!(d, 0.0);
        assert!(th.iter().all(|t| *t == 0.0));

        let a = 30f64.to_radians();
        let two = vec![Vec2::new(a.cos(), a.sin()), Vec2::new(a.cos(), -a.sin())];
        let (d, th) = heading_deviation(&two).unwrap();
        assert!((th[0] - 30.0).abs() < 1e-12 && (th[1] + 30.0).abs() < 1e-12);
        assert!(d.abs() < 1e-12);

        let (d, th) = heading_deviation(&[Vec2::new(0.0, -2.0)]).unwrap();
        assert_eq!((d, th), (0.0, vec![0.0]));

        assert!(heading_deviation(&[Vec2::ZERO, Vec2::ZERO]).is_err());
    }

    #[test]
    fn heading_opposed_pair_uses_fallback() {
        let (d, th) =
            heading_deviation(&[Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0), Vec2::ZERO]).unwrap();
        assert_eq!(th, vec![0.0, 180.0, 0.0]);
        assert_eq!(d, 60.0);
    }

    #[test]
    fn uniformity_examples() {
        let lattice = pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
        assert_eq!(uniformity_t(&lattice), 0.0);
        let u = uniformity_t(&pts(&[(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)]));
        // NN {1,1,2}: mean 4/3, population sd sqrt(2)/3
        assert!((u - (2f64.sqrt() / 3.0) / (4.0 / 3.0)).abs() < 1e-15);
        assert!((u - 0.353_553).abs() < 1e-6);
        assert_eq!(uniformity_t(&pts(&[(1.0, 1.0)])), 0.0);
        assert_eq!(uniformity_t(&pts(&[(1.0, 1.0), (1.0, 1.0)])), 0.0);
    }

    type Frame = Vec<(f64, f64, f64, f64, Status)>;

    /// Log with explicit snapshots; velocity of each agent is its displacement.
    fn log_from(frames: &[Frame], events: Vec<Event>, n_total: usize) -> EpisodeLog {
        EpisodeLog {
            scenario: "synthetic".into(),
            rules: None,
            seed: 0,
            n_total,
            dt: 1.0,
            max_steps: 10,
            snapshots: frames
                .iter()
                .map(|f| Snapshot {
                    positions: f.iter().map(|r| Vec2::new(r.0, r.1)).collect(),
                    velocities: f.iter().map(|r| Vec2::new(r.2, r.3)).collect(),
                    statuses: f.iter().map(|r| r.4).collect(),
                })
                .collect(),
            events,
        }
    }

    fn ev(step: u32, agent: usize, kind: EventKind) -> Event {
        Event { step, agent, kind }
    }

    #[test]
    fn average_time_examples() {
        let a = Status::Arrived;
        let frame = vec![(0.0, 0.0, 0.0, 0.0, a); 2];
        let log = log_from(
            &[frame],
            vec![ev(84, 0, EventKind::Arrived), ev(85, 1, EventKind::Arrived)],
            2,
        );
        assert_eq!(average_time(&log).seconds, 84.5);

        let log = log_from(&[], vec![ev(10, 0, EventKind::Arrived)], 1);
        assert_eq!(
            average_time(&log),
            AverageTime {
                seconds: 10.0,
                zero_arrivals: false
            }
        );

        let log = log_from(
            &[],
            vec![ev(80, 0, EventKind::Arrived), ev(90, 1, EventKind::Arrived)],
            3,
        );
        assert_eq!(average_time(&log).seconds, 85.0);

        let log = log_from(&[], vec![ev(3, 0, EventKind::Died)], 1);
        assert_eq!(
            average_time(&log),
            AverageTime {
                seconds: 10.0,
                zero_arrivals: true
            }
        );
    }

    #[test]
    fn death_rate_examples() {
        assert_eq!(death_rate(&log_from(&[], vec![], 4)), 0.0);
        let all: Vec<Event> = (0..3).map(|i| ev(1, i, EventKind::Died)).collect();
        assert_eq!(death_rate(&log_from(&[], all, 3)), 1.0);
        let seven: Vec<Event> = (0..7).map(|i| ev(1, i, EventKind::Died)).collect();
        assert_eq!(death_rate(&log_from(&[], seven, 20)), 0.35);
    }

    #[test]
    fn anisotropy_examples() {
        let s = Status::Active;
        let a = 30f64.to_radians();
        let f = vec![
            (0.0, 0.0, a.cos(), a.sin(), s),
            (1.0, 0.0, a.cos(), -a.sin(), s),
        ];
        let log = log_from(&[f], vec![], 2);
        assert!((anisotropy(&log).unwrap() - 30.0).abs() < 1e-12);

        let aligned = vec![(0.0, 0.0, 1.0, 0.0, s), (1.0, 0.0, 2.0, 0.0, s)];
        assert_eq!(
            anisotropy(&log_from(&[aligned.clone(), aligned], vec![], 2)).unwrap(),
            0.0
        );

        // per-step sd 10 then 20
        let pair = |deg: f64| {
            let r = deg.to_radians();
            vec![
                (0.0, 0.0, r.cos(), r.sin(), s),
                (1.0, 0.0, r.cos(), -r.sin(), s),
            ]
        };
        assert!(
            (anisotropy(&log_from(&[pair(10.0), pair(20.0)], vec![], 2)).unwrap() - 15.0).abs()
                < 1e-12
        );

        let still = vec![(0.0, 0.0, 0.0, 0.0, s), (1.0, 0.0, 1.0, 0.0, s)];
        assert!(anisotropy(&log_from(&[still], vec![], 2)).is_err());
    }

    #[test]
    fn literal_fitness_vanishes_without_deaths() {
        let s = Status::Active;
        let frames = vec![
            vec![(0.0, 0.0, 1.0, 0.2, s), (3.0, 1.0, 0.5, -0.4, s)],
            vec![(1.0, 0.0, 1.0, 0.3, s), (3.5, 0.7, 0.9, -0.1, s)],
        ];
        let log = log_from(&frames, vec![], 2);
        assert_eq!(fitness(&log, &FitnessConfig::literal()).unwrap(), 0.0);
        assert!(fitness(&log, &FitnessConfig::default()).unwrap() > 0.0);
    }

    #[test]
    fn robust_floor() {
        let factors = FitnessFactors {
            average_time: 0.0,
            death_rate: 0.0,
            aggregation: 0.0,
            gamma_signed_mean: 0.0,
            stability_variance: 0.0,
            heading_dispersion: 0.0,
        };
        let f = factors.combine(&FitnessConfig::default());
        assert!((f - 1e-15).abs() < 1e-27);
    }

    #[test]
    fn report_for_all_arrived_coincident() {
        let a = Status::Arrived;
        let frame = vec![(5.0, 5.0, 0.0, 0.0, a); 3];
        let events = (0..3).map(|i| ev(0, i, EventKind::Arrived)).collect();
        let r = metrics_report(&log_from(&[frame], events, 3), &FitnessConfig::default()).unwrap();
        assert_eq!((r.aggregation, r.uniformity, r.death_rate), (0.0, 0.0, 0.0));
        assert_eq!(r.average_time, 0.0);
    }

    #[test]
    fn empty_log_is_degenerate() {
        assert!(matches!(
            fitness(&log_from(&[], vec![], 1), &FitnessConfig::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn divergence_names_field() {
        let a = MetricsReport::from_values([1.0; 7]);
        let mut b = a;
        b.uniformity += 1e-6;
        assert_eq!(
            a.first_divergence(&b, 1e-9).map(|d| d.0),
            Some("uniformity")
        );
        assert_eq!(a.first_divergence(&a, 0.0), None);
    }
}
