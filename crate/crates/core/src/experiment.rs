//! Building blocks of the `gflock` command line: input loading, artifact
//! rendering, model comparison and replay verification.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::{read_trajectory, write_events, write_trajectory, write_uniformity};
use crate::metrics::{
    gamma_series, heading_deviation, metrics_report, uniformity_series, FitnessConfig,
    MetricsReport,
};
use crate::scenario::{build_scenario, Scenario};
use crate::sim::{run_episode, EpisodeLog};
use crate::swarm::RuleSet;

/// Agent counts of the three experiment groups.
pub const PRESETS: [usize; 3] = [20, 60, 100];

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const EVENTS_FILE: &str = "events.csv";
pub const REPORT_FILE: &str = "report.json";
pub const UNIFORMITY_FILE: &str = "uniformity.csv";
pub const SERIES_FILE: &str = "series.csv";
pub const RULES_FILE: &str = "rules.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.ckpt";
pub const TABLE_FILE: &str = "compare.txt";
pub const COMPARE_JSON_FILE: &str = "compare.json";

const BRIAN_JSON: &str = include_str!("../data/brian.json");

/// The optimized rule set shipped with the crate.
pub fn brian() -> RuleSet {
    RuleSet::from_json(BRIAN_JSON).expect("shipped rule set is valid")
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Resolves `bream`, `brian` or a path to a rule-set JSON file.
pub fn load_rules(arg: &str) -> Result<RuleSet> {
    match arg {
        "bream" => Ok(RuleSet::baseline()),
        "brian" => Ok(brian()),
        path => RuleSet::from_json(&read_input(Path::new(path))?),
    }
}

/// Display label of a rules argument.
pub fn rules_label(arg: &str) -> String {
    Path::new(arg)
        .file_stem()
        .map_or_else(|| arg.to_string(), |s| s.to_string_lossy().into_owned())
}

/// Resolves a builtin scenario name or a path to a scenario JSON file.
pub fn load_scenario(arg: &str) -> Result<Scenario> {
    match Scenario::builtin(arg) {
        Some(s) => Ok(s),
        None if Path::new(arg).exists() => build_scenario(&read_input(Path::new(arg))?),
        None => Err(Error::config(format!(
            "`{arg}` is neither a builtin scenario nor an existing file"
        ))),
    }
}

/// Files rendered in memory and committed together.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Artifacts {
    pub files: Vec<(PathBuf, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, path: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((path.into(), bytes));
    }

    pub fn extend_under(&mut self, dir: impl AsRef<Path>, other: Artifacts) {
        for (p, b) in other.files {
            self.files.push((dir.as_ref().join(p), b));
        }
    }

    /// Writes every file below `root`. Each file goes to a temporary name
    /// first; the renames happen only after all contents are on disk.
    pub fn commit(&self, root: &Path) -> Result<Vec<PathBuf>> {
        let mut staged = Vec::with_capacity(self.files.len());
        let result = (|| {
            for (rel, bytes) in &self.files {
                let dest = root.join(rel);
                let dir = dest.parent().unwrap_or(root);
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                let tmp = dest.with_file_name(format!(
                    ".{}.tmp",
                    rel.file_name().unwrap_or_default().to_string_lossy()
                ));
                fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
                staged.push((tmp, dest));
            }
            for (tmp, dest) in &staged {
                fs::rename(tmp, dest).map_err(|e| Error::io(dest, e))?;
            }
            Ok(staged.iter().map(|(_, d)| d.clone()).collect())
        })();
        if result.is_err() {
            for (tmp, _) in &staged {
                let _ = fs::remove_file(tmp);
            }
        }
        result
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

fn report_from_json(text: &str) -> Result<MetricsReport> {
    Error::from_json(text)
}

/// The four artifacts of one simulated episode.
pub fn episode_artifacts(
    log: &EpisodeLog,
    fitness: &FitnessConfig,
) -> Result<(MetricsReport, Artifacts)> {
    let report = metrics_report(log, fitness)?;
    let mut a = Artifacts::default();
    let mut buf = Vec::new();
    write_trajectory(log, &mut buf)?;
    a.add(TRAJECTORY_FILE, buf);
    let mut buf = Vec::new();
    write_events(log, &mut buf)?;
    a.add(EVENTS_FILE, buf);
    a.add(REPORT_FILE, json_bytes(&report));
    let mut buf = Vec::new();
    write_uniformity(log, &mut buf)?;
    a.add(UNIFORMITY_FILE, buf);
    Ok((report, a))
}

/// Seeds `first, first+1, ...` of length `k`.
pub fn seed_list(first: u64, k: u64) -> Result<Vec<u64>> {
    if k == 0 {
        return Err(Error::config("--seeds must be at least 1"));
    }
    (0..k)
        .map(|i| {
            first
                .checked_add(i)
                .ok_or_else(|| Error::config("seed range overflows u64"))
        })
        .collect()
}

/// Runs one episode per seed. A single seed writes into the output root;
/// several seeds write into `seed-<n>/` subdirectories.
pub fn simulate(
    scenario: &Scenario,
    rules: &RuleSet,
    seeds: &[u64],
    fitness: &FitnessConfig,
) -> Result<Artifacts> {
    let runs: Vec<Result<Artifacts>> = seeds
        .par_iter()
        .map(|&seed| {
            episode_artifacts(&run_episode(scenario, rules, seed), fitness).map(|(_, a)| a)
        })
        .collect();
    let mut out = Artifacts::default();
    for (seed, run) in seeds.iter().zip(runs) {
        let run = run?;
        if seeds.len() == 1 {
            out = run;
        } else {
            out.extend_under(format!("seed-{seed}"), run);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonColumn {
    pub model: String,
    pub agents: usize,
    pub seeds: Vec<u64>,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario: String,
    pub columns: Vec<ComparisonColumn>,
}

/// A comparison-table row: label and accessor.
pub type TableRow = (&'static str, fn(&MetricsReport) -> f64);

pub const TABLE_ROWS: [TableRow; 6] = [
    ("Aggregation", |r| r.aggregation),
    ("Anisotropy", |r| r.anisotropy),
    ("Averagetime", |r| r.average_time),
    ("Uniformity", |r| r.uniformity),
    ("Deathrate", |r| r.death_rate),
    ("Fitness", |r| r.fitness),
];

/// Runs both models on the same seeds for every agent count.
pub fn compare(
    scenario: &Scenario,
    models: [(&str, &RuleSet); 2],
    agent_counts: &[usize],
    seeds: &[u64],
    fitness: &FitnessConfig,
) -> Result<Comparison> {
    let mut jobs = Vec::new();
    for &n in agent_counts {
        for (m, _) in models.iter().enumerate() {
            for &seed in seeds {
                jobs.push((n, m, seed));
            }
        }
    }
    let scenarios: Vec<Scenario> = agent_counts
        .iter()
        .map(|&n| scenario.clone().with_agents(n))
        .collect();
    for s in &scenarios {
        s.validate()?;
    }
    let reports: Vec<Result<MetricsReport>> = jobs
        .par_iter()
        .map(|&(n, m, seed)| {
            let s = &scenarios[agent_counts.iter().position(|&x| x == n).expect("listed")];
            metrics_report(&run_episode(s, models[m].1, seed), fitness)
        })
        .collect();
    let reports = reports.into_iter().collect::<Result<Vec<_>>>()?;
    let mut columns = Vec::new();
    for (chunk, (n, m)) in reports.chunks(seeds.len()).zip(
        agent_counts
            .iter()
            .flat_map(|&n| (0..2).map(move |m| (n, m))),
    ) {
        columns.push(ComparisonColumn {
            model: models[m].0.to_string(),
            agents: n,
            seeds: seeds.to_vec(),
            report: MetricsReport::mean(chunk).expect("at least one seed"),
        });
    }
    Ok(Comparison {
        scenario: scenario.name.clone(),
        columns,
    })
}

fn cell(x: f64) -> String {
    if x != 0.0 && (x.abs() >= 1e5 || x.abs() < 1e-3) {
        format!("{x:.4e}")
    } else {
        format!("{x:.4}")
    }
}

impl Comparison {
    /// Fixed-width text table: one row per metric, one column per model and agent count.
    pub fn render_table(&self) -> String {
        let headers: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("{} N={}", c.model, c.agents))
            .collect();
        let rows: Vec<(&str, Vec<String>)> = TABLE_ROWS
            .iter()
            .map(|(name, get)| {
                (
                    *name,
                    self.columns.iter().map(|c| cell(get(&c.report))).collect(),
                )
            })
            .collect();
        let label_w = TABLE_ROWS
            .iter()
            .map(|(n, _)| n.len())
            .max()
            .unwrap_or(0)
            .max("Metric".len());
        let widths: Vec<usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| {
                rows.iter()
                    .map(|(_, r)| r[i].len())
                    .max()
                    .unwrap_or(0)
                    .max(h.len())
            })
            .collect();
        let mut out = String::new();
        let _ = write!(out, "{:<label_w$}", "Metric");
        for (h, w) in headers.iter().zip(&widths) {
            let _ = write!(out, "  {h:>w$}");
        }
        out.push('\n');
        for (name, vals) in &rows {
            let _ = write!(out, "{name:<label_w$}");
            for (v, w) in vals.iter().zip(&widths) {
                let _ = write!(out, "  {v:>w$}");
            }
            out.push('\n');
        }
        out
    }

    pub fn artifacts(&self) -> Artifacts {
        let mut a = Artifacts::default();
        a.add(TABLE_FILE, self.render_table().into_bytes());
        a.add(COMPARE_JSON_FILE, json_bytes(self));
        a
    }
}

/// Outcome of re-deriving a report from a trajectory file.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub recomputed: MetricsReport,
    pub stored: MetricsReport,
    /// Long-format `step,series,value` CSV of the per-step series.
    pub series_csv: Vec<u8>,
    pub log: EpisodeLog,
}

impl Replay {
    pub fn divergence(&self, tol: f64) -> Option<(&'static str, f64, f64)> {
        self.stored.first_divergence(&self.recomputed, tol)
    }
}

/// Long-format per-step series: `gamma`, `uniformity`, `heading_sd` and `active`.
pub fn series_csv(log: &EpisodeLog) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["step", "series", "value"])?;
    let active_steps: Vec<usize> = log
        .snapshots
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.active_positions().is_empty())
        .map(|(t, _)| t)
        .collect();
    let gammas = gamma_series(log);
    let unis = uniformity_series(log);
    for ((&t, g), (_, u)) in active_steps.iter().zip(&gammas).zip(&unis) {
        let snap = &log.snapshots[t];
        w.write_record([t.to_string(), "gamma".into(), g.to_string()])?;
        w.write_record([t.to_string(), "uniformity".into(), u.to_string()])?;
        let vels = snap.active_velocities();
        if vels.iter().filter(|v| v.norm() > 0.0).count() >= 2 {
            let (delta, theta) = heading_deviation(&vels)?;
            let sd = (theta.iter().map(|x| (x - delta) * (x - delta)).sum::<f64>()
                / theta.len() as f64)
                .sqrt();
            w.write_record([t.to_string(), "heading_sd".into(), sd.to_string()])?;
        }
        w.write_record([t.to_string(), "active".into(), vels.len().to_string()])?;
    }
    w.into_inner()
        .map_err(|e| Error::io("<series>", e.into_error()))
}

/// Rebuilds the episode from `trajectory` and recomputes its report.
pub fn replay(
    trajectory: &[u8],
    stored_report: &str,
    scenario: &Scenario,
    fitness: &FitnessConfig,
) -> Result<Replay> {
    let stored = report_from_json(stored_report)?;
    let log = read_trajectory(trajectory, scenario.dt, scenario.max_steps)?;
    let recomputed = metrics_report(&log, fitness)?;
    let series_csv = series_csv(&log)?;
    Ok(Replay {
        recomputed,
        stored,
        series_csv,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::gauntlet;

    #[test]
    fn table_layout() {
        let s = gauntlet().with_agents(5);
        let mut s = s;
        s.max_steps = 30;
        let c = compare(
            &s,
            [("a", &RuleSet::baseline()), ("b", &RuleSet::baseline())],
            &[5, 6],
            &[1, 2],
            &FitnessConfig::default(),
        )
        .unwrap();
        assert_eq!(c.columns.len(), 4);
        assert_eq!(c.columns[0].report, c.columns[1].report);
        let t = c.render_table();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 7);
        assert!(lines[0].contains("a N=5") && lines[0].contains("b N=6"));
        let names: Vec<&str> = lines[1..]
            .iter()
            .map(|l| l.split_whitespace().next().unwrap())
            .collect();
        assert_eq!(
            names,
            [
                "Aggregation",
                "Anisotropy",
                "Averagetime",
                "Uniformity",
                "Deathrate",
                "Fitness"
            ]
        );
    }

    #[test]
    fn seed_list_bounds() {
        assert_eq!(seed_list(5, 3).unwrap(), vec![5, 6, 7]);
        assert!(seed_list(1, 0).is_err());
        assert!(seed_list(u64::MAX, 2).is_err());
    }

    #[test]
    fn commit_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::default();
        a.add("x.txt", b"1".to_vec());
        a.add("sub/y.txt", b"2".to_vec());
        a.commit(dir.path()).unwrap();
        assert_eq!(fs::read(dir.path().join("sub/y.txt")).unwrap(), b"2");
        let names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names.len(), 2);
    }

    #[test]
    fn shipped_rules_load() {
        assert_eq!(load_rules("bream").unwrap(), RuleSet::baseline());
        brian().validate().unwrap();
        assert!(matches!(
            load_rules("/nonexistent/rules.json"),
            Err(Error::Io { .. })
        ));
        assert!(load_scenario("nowhere").is_err());
    }
}
