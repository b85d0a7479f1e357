//! CSV export and re-import of episode logs.
//!
//! Floats are written in shortest round-trip form, so a re-imported log
//! carries bit-identical numbers.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::metrics::uniformity_series;
use crate::sim::{EpisodeLog, Event, EventKind, Snapshot};
use crate::swarm::Status;

pub const TRAJECTORY_HEADER: [&str; 7] = ["step", "agent_id", "x", "y", "vx", "vy", "status"];
pub const EVENTS_HEADER: [&str; 3] = ["step", "agent_id", "event"];

pub fn write_trajectory<W: Write>(log: &EpisodeLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for (t, s) in log.snapshots.iter().enumerate() {
        for (id, ((p, v), st)) in s
            .positions
            .iter()
            .zip(&s.velocities)
            .zip(&s.statuses)
            .enumerate()
        {
            w.write_record([
                t.to_string(),
                id.to_string(),
                p.x.to_string(),
                p.y.to_string(),
                v.x.to_string(),
                v.y.to_string(),
                st.as_str().to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<trajectory>", e))?;
    Ok(())
}

pub fn write_events<W: Write>(log: &EpisodeLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVENTS_HEADER)?;
    for e in &log.events {
        w.write_record([
            e.step.to_string(),
            e.agent.to_string(),
            e.kind.as_str().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<events>", e))?;
    Ok(())
}

pub fn write_uniformity<W: Write>(log: &EpisodeLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "uniformity"])?;
    for (t, u) in uniformity_series(log) {
        w.write_record([t.to_string(), u.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<uniformity>", e))?;
    Ok(())
}

fn bad_row(line: u64, msg: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: format!("trajectory line {line}"),
        message: msg.to_string(),
    }
}

/// Rebuilds an episode log from a trajectory CSV.
///
/// Events are derived from status transitions; `dt` and `max_steps` come
/// from the scenario the run used.
pub fn read_trajectory<R: Read>(input: R, dt: f64, max_steps: u32) -> Result<EpisodeLog> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(TRAJECTORY_HEADER.iter().copied()) {
        return Err(bad_row(
            1,
            format!("expected header {}", TRAJECTORY_HEADER.join(",")),
        ));
    }
    let mut snapshots: Vec<Snapshot> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).ok_or_else(|| bad_row(line, "missing column"));
        let num = |i: usize| -> Result<f64> {
            let s = field(i)?;
            let x: f64 = s
                .parse()
                .map_err(|_| bad_row(line, format!("bad number `{s}`")))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(bad_row(line, "non-finite number"))
            }
        };
        let step: usize = field(0)?.parse().map_err(|_| bad_row(line, "bad step"))?;
        let id: usize = field(1)?
            .parse()
            .map_err(|_| bad_row(line, "bad agent_id"))?;
        let status = Status::parse(field(6)?).ok_or_else(|| bad_row(line, "bad status"))?;
        if step == snapshots.len() {
            snapshots.push(Snapshot {
                positions: Vec::new(),
                velocities: Vec::new(),
                statuses: Vec::new(),
            });
        }
        if step + 1 != snapshots.len() {
            return Err(bad_row(line, "rows must be grouped by ascending step"));
        }
        let snap = snapshots.last_mut().expect("pushed above");
        if id != snap.positions.len() {
            return Err(bad_row(line, "agent ids must ascend from 0 within a step"));
        }
        snap.positions.push(Vec2::new(num(2)?, num(3)?));
        snap.velocities.push(Vec2::new(num(4)?, num(5)?));
        snap.statuses.push(status);
    }
    let n_total = snapshots.first().map_or(0, |s| s.positions.len());
    if snapshots.iter().any(|s| s.positions.len() != n_total) {
        return Err(bad_row(0, "every step must list every agent"));
    }

    let mut events = Vec::new();
    for (t, s) in snapshots.iter().enumerate() {
        for (id, st) in s.statuses.iter().enumerate() {
            let before = if t == 0 {
                Status::Active
            } else {
                snapshots[t - 1].statuses[id]
            };
            match (before, *st) {
                (Status::Active, Status::Arrived) => events.push(Event {
                    step: t as u32,
                    agent: id,
                    kind: EventKind::Arrived,
                }),
                (Status::Active, Status::Dead) => events.push(Event {
                    step: t as u32,
                    agent: id,
                    kind: EventKind::Died,
                }),
                (a, b) if a != b => {
                    return Err(bad_row(
                        0,
                        format!("agent {id} leaves absorbing state at step {t}"),
                    ))
                }
                _ => {}
            }
        }
    }

    Ok(EpisodeLog {
        scenario: String::new(),
        rules: None,
        seed: 0,
        n_total,
        dt,
        max_steps,
        snapshots,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::gauntlet;
    use crate::sim::run_episode;
    use crate::swarm::RuleSet;

    #[test]
    fn trajectory_round_trip_is_exact() {
        let s = gauntlet().with_agents(6);
        let log = run_episode(&s, &RuleSet::baseline(), 5);
        let mut buf = Vec::new();
        write_trajectory(&log, &mut buf).unwrap();
        let back = read_trajectory(buf.as_slice(), s.dt, s.max_steps).unwrap();
        assert_eq!(back.snapshots, log.snapshots);
        assert_eq!(back.events, log.events);
        assert_eq!(back.n_total, log.n_total);
    }

    #[test]
    fn headers() {
        let log = run_episode(&gauntlet().with_agents(2), &RuleSet::baseline(), 1);
        let mut t = Vec::new();
        write_trajectory(&log, &mut t).unwrap();
        assert!(String::from_utf8(t)
            .unwrap()
            .starts_with("step,agent_id,x,y,vx,vy,status\n0,0,"));
        let mut e = Vec::new();
        write_events(&log, &mut e).unwrap();
        assert!(String::from_utf8(e)
            .unwrap()
            .starts_with("step,agent_id,event\n"));
        let mut u = Vec::new();
        write_uniformity(&log, &mut u).unwrap();
        assert!(String::from_utf8(u)
            .unwrap()
            .starts_with("step,uniformity\n0,"));
    }

    #[test]
    fn malformed_input_rejected() {
        let bad_header = "a,b\n1,2\n";
        assert!(read_trajectory(bad_header.as_bytes(), 1.0, 10).is_err());
        let bad_num = "step,agent_id,x,y,vx,vy,status\n0,0,abc,0,0,0,active\n";
        assert!(matches!(
            read_trajectory(bad_num.as_bytes(), 1.0, 10),
            Err(Error::Parse { .. })
        ));
        let resurrect = "step,agent_id,x,y,vx,vy,status\n0,0,1,1,0,0,dead\n1,0,1,1,0,0,active\n";
        assert!(read_trajectory(resurrect.as_bytes(), 1.0, 10).is_err());
    }
}
