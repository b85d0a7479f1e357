//! Selection, crossover and mutation over fixed-length real genomes.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::genome::{clamp_gene, Genome, GENE_CEIL, GENE_FLOOR, GENOME_LEN};
use super::EvaluatedGenome;
use crate::error::{Error, Result};

/// A genome with genes uniform in `[GENE_FLOOR, GENE_CEIL]`.
pub fn random_genome(rng: &mut ChaCha8Rng) -> Genome {
    let mut genes = [0.0; GENOME_LEN];
    for g in &mut genes {
        *g = rng.random_range(GENE_FLOOR..=GENE_CEIL);
    }
    Genome { genes }
}

/// The `n_seeds` lowest-fitness members, best first; ties go to the lower index.
pub fn select(members: &[EvaluatedGenome], n_seeds: usize) -> Result<Vec<EvaluatedGenome>> {
    let mut ranked = Vec::with_capacity(members.len());
    for (i, m) in members.iter().enumerate() {
        let f = m
            .fitness
            .ok_or_else(|| Error::Contract(format!("member {i} has no fitness")))?;
        ranked.push((f, i));
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(ranked
        .into_iter()
        .take(n_seeds)
        .map(|(_, i)| members[i].clone())
        .collect())
}

/// Single-point crossover: `a[..cut]` followed by `b[cut..]`.
pub fn splice(a: &Genome, b: &Genome, cut: usize) -> Genome {
    let mut genes = b.genes;
    genes[..cut].copy_from_slice(&a.genes[..cut]);
    Genome { genes }
}

/// Produces `n_pop - seeds.len()` children from parents drawn with replacement.
pub fn crossover(seeds: &[EvaluatedGenome], n_pop: usize, rng: &mut ChaCha8Rng) -> Vec<Genome> {
    assert!(!seeds.is_empty(), "crossover needs at least one seed");
    let n_children = n_pop.saturating_sub(seeds.len());
    (0..n_children)
        .map(|_| {
            let p1 = &seeds[rng.random_range(0..seeds.len())].genome;
            let p2 = &seeds[rng.random_range(0..seeds.len())].genome;
            let cut = rng.random_range(1..GENOME_LEN);
            splice(p1, p2, cut)
        })
        .collect()
}

/// Adds N(0, sigma) noise to each gene with probability `rate`, then clamps.
///
/// Every gene consumes one uniform draw; mutated genes consume one normal draw.
pub fn mutate(genomes: &mut [Genome], rate: f64, sigma: f64, rng: &mut ChaCha8Rng) {
    let noise = Normal::new(0.0, sigma).expect("sigma > 0");
    for g in genomes.iter_mut() {
        for gene in g.genes.iter_mut() {
            if rng.random::<f64>() < rate {
                *gene = clamp_gene(*gene + noise.sample(rng));
            }
        }
    }
}
