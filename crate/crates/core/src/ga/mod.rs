//! Genetic optimizer over the 20-gene rule space.
//!
//! Each generation evaluates every pending member, keeps the `n_seeds` best
//! unchanged, refills the population by single-point crossover among them and
//! applies Gaussian mutation to the children only. Fitness is minimized.

mod checkpoint;
mod genome;
mod operators;

pub use checkpoint::{checkpoint_load, checkpoint_save, CHECKPOINT_VERSION};
pub use genome::{clamp_gene, Genome, GENE_CEIL, GENE_FLOOR, GENOME_LEN, RULE_LEN};
pub use operators::{crossover, mutate, random_genome, select, splice};

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::{fitness, FitnessConfig};
use crate::rng::{stream, Stream};
use crate::scenario::Scenario;
use crate::sim::run_episode;
use crate::swarm::RuleSet;

/// Fitness assigned when an evaluation cannot produce a finite value.
pub const WORST_FITNESS: f64 = 1e300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedGenome {
    pub genome: Genome,
    /// `None` while pending evaluation.
    pub fitness: Option<f64>,
    pub episodes: u32,
    pub seed_base: u64,
    /// The evaluation hit a degenerate input and was scored [`WORST_FITNESS`].
    #[serde(default)]
    pub degenerate: bool,
}

impl EvaluatedGenome {
    pub fn pending(genome: Genome) -> Self {
        EvaluatedGenome {
            genome,
            fitness: None,
            episodes: 0,
            seed_base: 0,
            degenerate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub members: Vec<EvaluatedGenome>,
    /// Number of completed generations.
    pub generation: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub generations: u32,
    pub population: usize,
    /// Elites kept per generation; they also parent the next one.
    pub n_seeds: usize,
    pub mutation_rate: f64,
    pub sigma: f64,
    pub episodes_per_eval: u32,
    /// Episode seeds used for every evaluation are `eval_seed_base + k`.
    pub eval_seed_base: u64,
    pub master_seed: u64,
    pub expert_rules: Option<RuleSet>,
    pub fitness: FitnessConfig,
    pub scenario: Scenario,
}

impl GaConfig {
    pub fn new(scenario: Scenario) -> Self {
        GaConfig {
            generations: 30,
            population: 20,
            n_seeds: 4,
            mutation_rate: 0.1,
            sigma: 0.1,
            episodes_per_eval: 3,
            eval_seed_base: 1_000,
            master_seed: 0,
            expert_rules: None,
            fitness: FitnessConfig::default(),
            scenario,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.n_seeds && self.n_seeds < self.population) {
            return Err(Error::config(format!(
                "need 1 <= n_seeds < population (got {} and {})",
                self.n_seeds, self.population
            )));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::config("mutation_rate must be in [0, 1]"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("sigma must be > 0"));
        }
        if self.episodes_per_eval < 1 {
            return Err(Error::config("episodes_per_eval must be >= 1"));
        }
        if let Some(r) = &self.expert_rules {
            r.validate()?;
            Genome::encode(r).validate()?;
        }
        self.fitness.validate()?;
        self.scenario.validate()
    }

    /// Hash of every setting except the generation count, so a run may be
    /// resumed with a larger budget.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.generations = 0;
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub fitness: f64,
    pub degenerate: bool,
}

/// Something that scores a genome; lower is better. Must be pure.
pub trait Objective: Sync {
    fn evaluate(&self, genome: &Genome) -> Evaluation;

    fn episodes(&self) -> u32 {
        1
    }

    fn seed_base(&self) -> u64 {
        0
    }
}

/// Mean robust fitness over a fixed set of simulated episodes.
pub struct SimulationObjective<'a> {
    pub scenario: &'a Scenario,
    pub fitness: FitnessConfig,
    pub episodes: u32,
    pub seed_base: u64,
}

impl<'a> SimulationObjective<'a> {
    pub fn from_config(cfg: &'a GaConfig) -> Self {
        SimulationObjective {
            scenario: &cfg.scenario,
            fitness: cfg.fitness,
            episodes: cfg.episodes_per_eval,
            seed_base: cfg.eval_seed_base,
        }
    }
}

impl Objective for SimulationObjective<'_> {
    fn evaluate(&self, genome: &Genome) -> Evaluation {
        let rules = genome.decode();
        let mut sum = 0.0;
        for k in 0..u64::from(self.episodes) {
            let log = run_episode(self.scenario, &rules, self.seed_base + k);
            match fitness(&log, &self.fitness) {
                Ok(f) if f.is_finite() => sum += f,
                _ => {
                    return Evaluation {
                        fitness: WORST_FITNESS,
                        degenerate: true,
                    }
                }
            }
        }
        Evaluation {
            fitness: sum / f64::from(self.episodes),
            degenerate: false,
        }
    }

    fn episodes(&self) -> u32 {
        self.episodes
    }

    fn seed_base(&self) -> u64 {
        self.seed_base
    }
}

pub fn evaluate(genome: &Genome, cfg: &GaConfig) -> EvaluatedGenome {
    score(genome, &SimulationObjective::from_config(cfg))
}

fn score<O: Objective + ?Sized>(genome: &Genome, objective: &O) -> EvaluatedGenome {
    let e = objective.evaluate(genome);
    EvaluatedGenome {
        genome: *genome,
        fitness: Some(e.fitness),
        episodes: objective.episodes(),
        seed_base: objective.seed_base(),
        degenerate: e.degenerate,
    }
}

/// Evaluates pending members in parallel; results land in member order.
fn evaluate_pending<O: Objective + ?Sized>(members: &mut [EvaluatedGenome], objective: &O) {
    members
        .par_iter_mut()
        .filter(|m| m.fitness.is_none())
        .for_each(|m| *m = score(&m.genome, objective));
}

/// Random initial population; member 0 is the expert rule set when given.
pub fn init_population(cfg: &GaConfig) -> Population {
    let mut rng = stream(cfg.master_seed, Stream::Mutation);
    init_with(cfg, &mut rng)
}

fn init_with(cfg: &GaConfig, rng: &mut ChaCha8Rng) -> Population {
    let members = (0..cfg.population)
        .map(|i| match (&cfg.expert_rules, i) {
            (Some(r), 0) => Genome::encode(r),
            _ => random_genome(rng),
        })
        .map(EvaluatedGenome::pending)
        .collect();
    Population {
        members,
        generation: 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: u32,
    pub best: f64,
    pub mean: f64,
}

/// Everything needed to continue a run exactly where it stopped.
#[derive(Debug, Clone)]
pub struct GaState {
    pub population: Population,
    pub history: Vec<GenerationStats>,
    pub mutation_rng: ChaCha8Rng,
    pub crossover_rng: ChaCha8Rng,
}

impl PartialEq for GaState {
    fn eq(&self, other: &Self) -> bool {
        self.population == other.population
            && self.history == other.history
            && self.mutation_rng.get_word_pos() == other.mutation_rng.get_word_pos()
            && self.crossover_rng.get_word_pos() == other.crossover_rng.get_word_pos()
            && self.mutation_rng.get_stream() == other.mutation_rng.get_stream()
            && self.crossover_rng.get_stream() == other.crossover_rng.get_stream()
    }
}

impl GaState {
    /// Initial population, evaluated (generation 0).
    pub fn start<O: Objective + ?Sized>(cfg: &GaConfig, objective: &O) -> Self {
        let mut mutation_rng = stream(cfg.master_seed, Stream::Mutation);
        let mut population = init_with(cfg, &mut mutation_rng);
        evaluate_pending(&mut population.members, objective);
        let mut state = GaState {
            population,
            history: Vec::new(),
            mutation_rng,
            crossover_rng: stream(cfg.master_seed, Stream::Crossover),
        };
        state.record();
        state
    }

    fn record(&mut self) {
        let fits: Vec<f64> = self
            .population
            .members
            .iter()
            .map(|m| m.fitness.expect("evaluated"))
            .collect();
        let best = fits.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = fits.iter().sum::<f64>() / fits.len() as f64;
        self.history.push(GenerationStats {
            generation: self.population.generation,
            best,
            mean,
        });
    }

    /// One generation: select, crossover, mutate children, evaluate.
    pub fn advance<O: Objective + ?Sized>(&mut self, cfg: &GaConfig, objective: &O) {
        let elites =
            select(&self.population.members, cfg.n_seeds).expect("population is evaluated");
        let mut children = crossover(&elites, cfg.population, &mut self.crossover_rng);
        mutate(
            &mut children,
            cfg.mutation_rate,
            cfg.sigma,
            &mut self.mutation_rng,
        );
        let mut members = elites;
        members.extend(children.into_iter().map(EvaluatedGenome::pending));
        evaluate_pending(&mut members, objective);
        self.population = Population {
            members,
            generation: self.population.generation + 1,
        };
        self.record();
    }

    /// Lowest-fitness member; ties go to the lower index.
    pub fn best(&self) -> &EvaluatedGenome {
        self.population
            .members
            .iter()
            .enumerate()
            .min_by(|(i, a), (j, b)| {
                a.fitness
                    .unwrap()
                    .total_cmp(&b.fitness.unwrap())
                    .then(i.cmp(j))
            })
            .map(|(_, m)| m)
            .expect("population is nonempty")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveResult {
    pub best_rules: RuleSet,
    pub best_fitness: f64,
    pub history: Vec<GenerationStats>,
}

/// Runs generations until `cfg.generations` are complete, reporting each one.
pub fn resume_with<O: Objective + ?Sized>(
    mut state: GaState,
    cfg: &GaConfig,
    objective: &O,
    progress: &mut dyn FnMut(&GaState),
) -> (EvolveResult, GaState) {
    while state.population.generation < cfg.generations {
        state.advance(cfg, objective);
        progress(&state);
    }
    let best = state.best();
    let result = EvolveResult {
        best_rules: best.genome.decode(),
        best_fitness: best.fitness.expect("evaluated"),
        history: state.history.clone(),
    };
    (result, state)
}

pub fn evolve_with<O: Objective + ?Sized>(
    cfg: &GaConfig,
    objective: &O,
    progress: &mut dyn FnMut(&GaState),
) -> (EvolveResult, GaState) {
    let state = GaState::start(cfg, objective);
    progress(&state);
    resume_with(state, cfg, objective, progress)
}

/// Optimizes the rule set on `cfg.scenario`.
pub fn evolve(cfg: &GaConfig, progress: &mut dyn FnMut(&GaState)) -> Result<EvolveResult> {
    cfg.validate()?;
    Ok(evolve_with(cfg, &SimulationObjective::from_config(cfg), progress).0)
}
