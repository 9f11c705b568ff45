//! Agent population synthesis.
//!
//! Agents are allocated to the survey cohorts proportionally to the
//! respondent counts (largest-remainder apportionment) and each agent's
//! attribute `i` is an independent Bernoulli draw with the cohort's
//! prevalence as success probability. A single seeded RNG stream drives the
//! whole synthesis, so a (table, size, seed) triple always produces the
//! same population.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::factor::FactorInputs;
use crate::schema::{AttributeSchema, Category};
use crate::similarity::FeatureVector;
use crate::survey::{Gender, SurveyTable, SurveyError};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("survey table has no cohorts")]
    EmptyTable,
    #[error("population size must be >= 1")]
    ZeroSize,
    #[error(transparent)]
    Table(#[from] SurveyError),
}

/// One synthesized individual. `attributes` holds the Bernoulli
/// realizations (0 or 1 per attribute, schema order); `inputs` is the
/// category split the recurrence consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: usize,
    pub society: String,
    pub gender: Gender,
    pub attributes: FeatureVector,
    pub inputs: FactorInputs,
}

/// Immutable set of agents plus the schema they are aligned to.
#[derive(Debug, Clone)]
pub struct Population {
    schema: AttributeSchema,
    agents: Vec<Agent>,
}

impl Population {
    pub fn new(schema: AttributeSchema, agents: Vec<Agent>) -> Self {
        Self { schema, agents }
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// Society label per agent, in agent order.
    pub fn societies(&self) -> Vec<&str> {
        self.agents.iter().map(|a| a.society.as_str()).collect()
    }
}

/// Largest-remainder apportionment of `size` units over `counts`. Each
/// share differs from the exact proportional quota by less than one unit;
/// remainder ties go to the lower index.
pub fn apportion(counts: &[u32], size: usize) -> Vec<usize> {
    let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    if total == 0 || counts.is_empty() {
        return vec![0; counts.len()];
    }
    let size = size as u64;
    let mut shares: Vec<u64> = Vec::with_capacity(counts.len());
    let mut remainders: Vec<(u64, usize)> = Vec::with_capacity(counts.len());
    for (i, &c) in counts.iter().enumerate() {
        let scaled = u64::from(c) * size;
        shares.push(scaled / total);
        remainders.push((scaled % total, i));
    }
    let assigned: u64 = shares.iter().sum();
    let mut leftover = (size - assigned) as usize;
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take(leftover.min(remainders.len())) {
        shares[i] += 1;
    }
    leftover = leftover.saturating_sub(remainders.len());
    debug_assert_eq!(leftover, 0, "remainder units exceed cohort count");
    shares.into_iter().map(|s| s as usize).collect()
}

/// Splits an attribute realization into recurrence inputs: modernization
/// and intervening levels become `x`, resultant levels become `z`, and `q`
/// is the weighted mean attribute level (the same statistic used as the
/// initial factor).
pub fn derive_inputs(attributes: &FeatureVector, schema: &AttributeSchema) -> FactorInputs {
    let comps = attributes.components();
    let mut x = Vec::new();
    let mut z = Vec::new();
    for (i, attr) in schema.attributes().iter().enumerate() {
        match attr.category {
            Category::Resultant => z.push(comps[i]),
            _ => x.push(comps[i]),
        }
    }
    FactorInputs { q: weighted_mean(comps, &schema.weights()), x, z }
}

/// Weighted mean with the convention 0 for an all-zero weight vector.
pub(crate) fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&v, &w) in values.iter().zip(weights) {
        num += w * v;
        den += w;
    }
    if den > 0.0 { num / den } else { 0.0 }
}

/// Synthesizes `size` agents from the survey's cohort prevalences,
/// deterministically in `seed`.
pub fn synthesize_population(
    table: &SurveyTable,
    size: usize,
    seed: u64,
) -> Result<Population, SynthesisError> {
    if table.cohorts().is_empty() {
        return Err(SynthesisError::EmptyTable);
    }
    if size == 0 {
        return Err(SynthesisError::ZeroSize);
    }
    let schema = table.schema().clone();
    let counts: Vec<u32> = table.cohorts().iter().map(|c| c.n).collect();
    let shares = apportion(&counts, size);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agents = Vec::with_capacity(size);
    let mut id = 0;
    for (cohort, &share) in table.cohorts().iter().zip(&shares) {
        let probabilities: Vec<f64> = table
            .cohort_vector(&cohort.society, cohort.gender)?
            .components()
            .to_vec();
        for _ in 0..share {
            let realization: Vec<f64> = probabilities
                .iter()
                .map(|&p| if rng.random_bool(p) { 1.0 } else { 0.0 })
                .collect();
            let attributes = FeatureVector::new(realization).expect("realizations are 0/1");
            let inputs = derive_inputs(&attributes, &schema);
            agents.push(Agent {
                id,
                society: cohort.society.clone(),
                gender: cohort.gender,
                attributes,
                inputs,
            });
            id += 1;
        }
    }
    Ok(Population::new(schema, agents))
}
