use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::swarm::RuleSet;

pub const GENOME_LEN: usize = RuleSet::GENES;
/// Genes per rule.
pub const RULE_LEN: usize = 5;
pub const GENE_FLOOR: f64 = 1e-6;
pub const GENE_CEIL: f64 = 1.0 - 1e-6;

/// Four consecutive 5-weight blocks, one per context, in context order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub genes: [f64; GENOME_LEN],
}

impl Genome {
    pub fn encode(rules: &RuleSet) -> Self {
        Genome {
            genes: rules.flatten(),
        }
    }

    pub fn decode(&self) -> RuleSet {
        RuleSet::from_flat(&self.genes)
    }

    pub fn in_bounds(&self) -> bool {
        self.genes
            .iter()
            .all(|g| (GENE_FLOOR..=GENE_CEIL).contains(g))
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_bounds() {
            Ok(())
        } else {
            Err(Error::config(format!(
                "genes must lie in [{GENE_FLOOR}, {GENE_CEIL}]"
            )))
        }
    }
}

pub fn clamp_gene(g: f64) -> f64 {
    g.clamp(GENE_FLOOR, GENE_CEIL)
}
