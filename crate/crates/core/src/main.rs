use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gflock::experiment::{self, Artifacts, CHECKPOINT_FILE, HISTORY_FILE, RULES_FILE, SERIES_FILE};
use gflock::ga::{
    checkpoint_load, checkpoint_save, resume_with, GaConfig, GaState, SimulationObjective,
};
use gflock::metrics::{FitnessConfig, FitnessVariant};
use gflock::{Error, Scenario};

const REPLAY_TOLERANCE: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "gflock",
    version,
    about = "Context-dependent flocking rules tuned by a genetic algorithm"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run episodes and write trajectory, events, report and uniformity files.
    Simulate(SimulateArgs),
    /// Evolve a rule set with the genetic algorithm.
    Optimize(OptimizeArgs),
    /// Tabulate two rule sets side by side over the agent-count presets.
    Compare(CompareArgs),
    /// Recompute a stored report from its trajectory file.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Fitness {
    Literal,
    Robust,
}

#[derive(Args)]
struct World {
    /// Builtin scenario name or path to a scenario JSON file.
    #[arg(long, default_value = "gauntlet")]
    scenario: String,
    /// Override the scenario's agent count.
    #[arg(long)]
    agents: Option<usize>,
    /// Override the scenario's episode length.
    #[arg(long)]
    max_steps: Option<u32>,
    #[arg(long, value_enum, default_value = "robust")]
    fitness: Fitness,
}

#[derive(Args)]
struct Output {
    #[arg(long, env = "GFLOCK_OUT", default_value = "gflock-out")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    world: World,
    /// `bream`, `brian`, or a rule-set JSON path.
    #[arg(long, default_value = "bream")]
    rules: String,
    #[arg(long)]
    seed: u64,
    /// Number of consecutive seeds starting at --seed.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    world: World,
    /// Rule set placed in the initial population.
    #[arg(long)]
    rules: Option<String>,
    /// Master seed of the optimizer.
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    generations: u32,
    #[arg(long, default_value_t = 20)]
    population: usize,
    /// Members kept unchanged each generation.
    #[arg(long, default_value_t = 4)]
    elites: usize,
    #[arg(long, default_value_t = 0.1)]
    mutation_rate: f64,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Episodes averaged per fitness evaluation.
    #[arg(long, default_value_t = 3)]
    episodes: u32,
    /// First episode seed of every evaluation.
    #[arg(long, default_value_t = 1000)]
    eval_seed: u64,
    /// Continue from the checkpoint in the output directory.
    #[arg(long)]
    resume: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    world: World,
    #[arg(long, default_value = "bream")]
    rules: String,
    #[arg(long)]
    rules_b: String,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    world: World,
    /// Directory holding the trajectory and report of a simulate run.
    #[arg(long)]
    input: PathBuf,
    /// Where to write the long-format series file (defaults to --input).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes and their exit codes.
enum Failure {
    Config(Error),
    Runtime(Error),
    Mismatch(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
            Failure::Mismatch(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e}"),
            Failure::Runtime(e) => write!(f, "runtime error: {e}"),
            Failure::Mismatch(m) => write!(f, "replay mismatch: {m}"),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn config<T>(r: gflock::Result<T>) -> Outcome<T> {
    r.map_err(Failure::Config)
}

fn runtime<T>(r: gflock::Result<T>) -> Outcome<T> {
    r.map_err(Failure::Runtime)
}

impl World {
    fn scenario(&self) -> Outcome<Scenario> {
        let mut s = config(experiment::load_scenario(&self.scenario))?;
        if let Some(n) = self.agents {
            s = s.with_agents(n);
        }
        if let Some(m) = self.max_steps {
            s.max_steps = m;
        }
        config(s.validate())?;
        Ok(s)
    }

    fn fitness(&self) -> FitnessConfig {
        match self.fitness {
            Fitness::Robust => FitnessConfig::default(),
            Fitness::Literal => FitnessConfig {
                variant: FitnessVariant::Literal,
                ..FitnessConfig::default()
            },
        }
    }
}

fn commit(artifacts: &Artifacts, root: &Path) -> Outcome<()> {
    for p in runtime(artifacts.commit(root))? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Outcome<()> {
    let scenario = args.world.scenario()?;
    let rules = config(experiment::load_rules(&args.rules))?;
    let seeds = config(experiment::seed_list(args.seed, args.seeds))?;
    let artifacts = runtime(experiment::simulate(
        &scenario,
        &rules,
        &seeds,
        &args.world.fitness(),
    ))?;
    commit(&artifacts, &args.output.out)
}

fn optimize(args: OptimizeArgs) -> Outcome<()> {
    let scenario = args.world.scenario()?;
    let expert = args
        .rules
        .as_deref()
        .map(experiment::load_rules)
        .transpose();
    let cfg = GaConfig {
        generations: args.generations,
        population: args.population,
        n_seeds: args.elites,
        mutation_rate: args.mutation_rate,
        sigma: args.sigma,
        episodes_per_eval: args.episodes,
        eval_seed_base: args.eval_seed,
        master_seed: args.seed,
        expert_rules: config(expert)?,
        fitness: args.world.fitness(),
        scenario,
    };
    config(cfg.validate())?;
    let out = &args.output.out;
    let ckpt = out.join(CHECKPOINT_FILE);
    let objective = SimulationObjective::from_config(&cfg);
    let resumed = if args.resume && ckpt.exists() {
        Some(config(checkpoint_load(&ckpt, &cfg))?)
    } else {
        None
    };
    std::fs::create_dir_all(out).map_err(|e| {
        Failure::Runtime(Error::Io {
            path: out.clone(),
            source: e,
        })
    })?;

    let mut save_error = None;
    let mut progress = |state: &GaState| {
        if let Some(h) = state.history.last() {
            eprintln!(
                "generation {:>4}  best {:.6e}  mean {:.6e}",
                h.generation, h.best, h.mean
            );
        }
        if save_error.is_none() {
            save_error = checkpoint_save(state, &cfg, &ckpt).err();
        }
    };
    let state = match resumed {
        Some(s) => {
            eprintln!("resuming at generation {}", s.population.generation);
            s
        }
        None => {
            let s = GaState::start(&cfg, &objective);
            progress(&s);
            s
        }
    };
    let (result, _) = resume_with(state, &cfg, &objective, &mut progress);
    if let Some(e) = save_error {
        return Err(Failure::Runtime(e));
    }

    let mut artifacts = Artifacts::default();
    artifacts.add(
        RULES_FILE,
        format!("{}\n", result.best_rules.to_json()).into_bytes(),
    );
    let mut history = String::from("generation,best,mean\n");
    for h in &result.history {
        history.push_str(&format!("{},{},{}\n", h.generation, h.best, h.mean));
    }
    artifacts.add(HISTORY_FILE, history.into_bytes());
    commit(&artifacts, out)?;
    println!("best fitness {}", result.best_fitness);
    Ok(())
}

fn compare(args: CompareArgs) -> Outcome<()> {
    let scenario = args.world.scenario()?;
    let a = config(experiment::load_rules(&args.rules))?;
    let b = config(experiment::load_rules(&args.rules_b))?;
    let seeds = config(experiment::seed_list(args.seed, args.seeds))?;
    let counts = match args.world.agents {
        Some(n) => vec![n],
        None => experiment::PRESETS.to_vec(),
    };
    let (mut la, mut lb) = (
        experiment::rules_label(&args.rules),
        experiment::rules_label(&args.rules_b),
    );
    if la == lb {
        la.push_str("-a");
        lb.push_str("-b");
    }
    let cmp = runtime(experiment::compare(
        &scenario,
        [(&la, &a), (&lb, &b)],
        &counts,
        &seeds,
        &args.world.fitness(),
    ))?;
    print!("{}", cmp.render_table());
    commit(&cmp.artifacts(), &args.output.out)
}

fn replay(args: ReplayArgs) -> Outcome<()> {
    let scenario = args.world.scenario()?;
    let read = |name: &str| {
        let p = args.input.join(name);
        std::fs::read(&p).map_err(|e| Failure::Config(Error::Io { path: p, source: e }))
    };
    let trajectory = read(experiment::TRAJECTORY_FILE)?;
    let report = String::from_utf8_lossy(&read(experiment::REPORT_FILE)?).into_owned();
    let r = config(experiment::replay(
        &trajectory,
        &report,
        &scenario,
        &args.world.fitness(),
    ))?;
    if let Some((name, stored, recomputed)) = r.divergence(REPLAY_TOLERANCE) {
        return Err(Failure::Mismatch(format!(
            "{name}: stored {stored}, recomputed {recomputed}"
        )));
    }
    let mut artifacts = Artifacts::default();
    artifacts.add(SERIES_FILE, r.series_csv);
    commit(&artifacts, args.out.as_deref().unwrap_or(&args.input))?;
    println!("replay matches stored report");
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Simulate(a) => simulate(a),
        Command::Optimize(a) => optimize(a),
        Command::Compare(a) => compare(a),
        Command::Replay(a) => replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gflock: {f}");
            ExitCode::from(f.code())
        }
    }
}
