//! Versioned, checksummed optimizer checkpoints.
//!
//! Layout: a header line `GFLOCK-CKPT <version> <sha256 of body>` followed by
//! a JSON body. Floats are stored as IEEE-754 bit patterns.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EvaluatedGenome, GaConfig, GaState, GenerationStats, Genome, Population, GENOME_LEN};
use crate::error::{Error, Result};
use crate::rng::StreamState;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "GFLOCK-CKPT";

#[derive(Serialize, Deserialize)]
struct MemberRecord {
    genes: Vec<u64>,
    fitness: Option<u64>,
    episodes: u32,
    seed_base: u64,
    degenerate: bool,
}

#[derive(Serialize, Deserialize)]
struct HistoryRecord {
    generation: u32,
    best: u64,
    mean: u64,
}

#[derive(Serialize, Deserialize)]
struct Body {
    config_digest: String,
    generation: u32,
    members: Vec<MemberRecord>,
    history: Vec<HistoryRecord>,
    mutation_rng: StreamState,
    crossover_rng: StreamState,
}

fn encode(state: &GaState, cfg: &GaConfig) -> Body {
    Body {
        config_digest: cfg.digest(),
        generation: state.population.generation,
        members: state
            .population
            .members
            .iter()
            .map(|m| MemberRecord {
                genes: m.genome.genes.iter().map(|g| g.to_bits()).collect(),
                fitness: m.fitness.map(f64::to_bits),
                episodes: m.episodes,
                seed_base: m.seed_base,
                degenerate: m.degenerate,
            })
            .collect(),
        history: state
            .history
            .iter()
            .map(|h| HistoryRecord {
                generation: h.generation,
                best: h.best.to_bits(),
                mean: h.mean.to_bits(),
            })
            .collect(),
        mutation_rng: StreamState::capture(cfg.master_seed, &state.mutation_rng),
        crossover_rng: StreamState::capture(cfg.master_seed, &state.crossover_rng),
    }
}

fn decode(body: Body) -> Result<GaState> {
    let members = body
        .members
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            let genes: [u64; GENOME_LEN] = m.genes.try_into().map_err(|_| {
                Error::Integrity(format!("member {i} does not have {GENOME_LEN} genes"))
            })?;
            Ok(EvaluatedGenome {
                genome: Genome {
                    genes: genes.map(f64::from_bits),
                },
                fitness: m.fitness.map(f64::from_bits),
                episodes: m.episodes,
                seed_base: m.seed_base,
                degenerate: m.degenerate,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let history = body
        .history
        .into_iter()
        .map(|h| GenerationStats {
            generation: h.generation,
            best: f64::from_bits(h.best),
            mean: f64::from_bits(h.mean),
        })
        .collect();
    let restore = |s: &StreamState| {
        s.restore()
            .ok_or_else(|| Error::Integrity("bad rng state".into()))
    };
    Ok(GaState {
        population: Population {
            members,
            generation: body.generation,
        },
        history,
        mutation_rng: restore(&body.mutation_rng)?,
        crossover_rng: restore(&body.crossover_rng)?,
    })
}

/// Writes `state` to `path` via a temporary file and rename.
pub fn checkpoint_save(state: &GaState, cfg: &GaConfig, path: &Path) -> Result<()> {
    let body = serde_json::to_string(&encode(state, cfg)).expect("checkpoint serializes");
    let sum = hex::encode(Sha256::digest(body.as_bytes()));
    let tmp = path.with_extension("tmp");
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        writeln!(f, "{MAGIC} {CHECKPOINT_VERSION} {sum}")?;
        f.write_all(body.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| Error::io(path, e))
}

/// Loads a checkpoint, refusing files written under a different config.
pub fn checkpoint_load(path: &Path, cfg: &GaConfig) -> Result<GaState> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (header, body) = text
        .split_once('\n')
        .ok_or_else(|| Error::Integrity("missing header".into()))?;
    let parts: Vec<&str> = header.split(' ').collect();
    if parts.len() != 3 || parts[0] != MAGIC {
        return Err(Error::Integrity("not a checkpoint file".into()));
    }
    if parts[1] != CHECKPOINT_VERSION.to_string() {
        return Err(Error::Compatibility(format!(
            "unsupported checkpoint version {}",
            parts[1]
        )));
    }
    if hex::encode(Sha256::digest(body.as_bytes())) != parts[2] {
        return Err(Error::Integrity(
            "checksum mismatch (truncated or edited file)".into(),
        ));
    }
    let body: Body = serde_json::from_str(body).map_err(|e| Error::Integrity(e.to_string()))?;
    if body.config_digest != cfg.digest() {
        return Err(Error::Compatibility(
            "checkpoint was written under a different configuration".into(),
        ));
    }
    decode(body)
}
