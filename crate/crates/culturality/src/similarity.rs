//! Weighted attribute similarity.
//!
//! Two individuals are compared attribute by attribute with the kernel
//! `sim(a, b) = 1 - |a - b|` and the per-attribute similarities are combined
//! into a weighted mean: `sum_i(w_i * sim_i) / sum_i(w_i)`. The result lives
//! in `[0, 1]`, is symmetric, and equals 1 exactly for identical vectors.
//! Clustering consumes the complementary dissimilarity `1 - similarity`.

use rayon::prelude::*;
use thiserror::Error;

use crate::population::Population;

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("attribute value {0} outside [0, 1]")]
    DomainError(f64),
    #[error("vector length mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("weights must sum to a positive value")]
    ZeroWeightSum,
    #[error("weight {0} is negative or not finite")]
    InvalidWeight(f64),
    #[error("empty population")]
    EmptyPopulation,
}

/// Schema-aligned attribute levels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(components: Vec<f64>) -> Result<Self, SimilarityError> {
        for &c in &components {
            if !(c.is_finite() && (0.0..=1.0).contains(&c)) {
                return Err(SimilarityError::DomainError(c));
            }
        }
        Ok(Self(components))
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Non-negative importance weights with a positive sum.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(components: Vec<f64>) -> Result<Self, SimilarityError> {
        for &w in &components {
            if !(w.is_finite() && w >= 0.0) {
                return Err(SimilarityError::InvalidWeight(w));
            }
        }
        if components.iter().sum::<f64>() <= 0.0 {
            return Err(SimilarityError::ZeroWeightSum);
        }
        Ok(Self(components))
    }

    /// Uniform weights of 1, the default when a schema assigns none.
    pub fn uniform(len: usize) -> Result<Self, SimilarityError> {
        Self::new(vec![1.0; len])
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-attribute similarity kernel: `1 - |a - b|` for values in `[0, 1]`.
pub fn attr_similarity(a: f64, b: f64) -> Result<f64, SimilarityError> {
    for v in [a, b] {
        if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
            return Err(SimilarityError::DomainError(v));
        }
    }
    Ok(1.0 - (a - b).abs())
}

/// Weighted mean of the per-attribute similarities between two vectors.
pub fn weighted_similarity(
    input: &FeatureVector,
    retrieved: &FeatureVector,
    weights: &WeightVector,
) -> Result<f64, SimilarityError> {
    if input.len() != retrieved.len() {
        return Err(SimilarityError::DimensionMismatch {
            left: input.len(),
            right: retrieved.len(),
        });
    }
    if weights.len() != input.len() {
        return Err(SimilarityError::DimensionMismatch {
            left: weights.len(),
            right: input.len(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&a, &b), &w) in input
        .components()
        .iter()
        .zip(retrieved.components())
        .zip(weights.components())
    {
        num += w * (1.0 - (a - b).abs());
        den += w;
    }
    if den <= 0.0 {
        return Err(SimilarityError::ZeroWeightSum);
    }
    Ok(num / den)
}

/// Symmetric pairwise similarity matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    /// Builds the matrix over a set of feature vectors. Each unordered pair
    /// is evaluated once; the mirror entry is copied.
    pub fn from_vectors(
        vectors: &[FeatureVector],
        weights: &WeightVector,
    ) -> Result<Self, SimilarityError> {
        let n = vectors.len();
        if n == 0 {
            return Err(SimilarityError::EmptyPopulation);
        }
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let computed: Vec<f64> = pairs
            .par_iter()
            .map(|&(i, j)| weighted_similarity(&vectors[i], &vectors[j], weights))
            .collect::<Result<_, _>>()?;
        let mut data = vec![1.0; n * n];
        for (&(i, j), &s) in pairs.iter().zip(&computed) {
            data[i * n + j] = s;
            data[j * n + i] = s;
        }
        Ok(Self { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// `1 - similarity`, the dissimilarity clustering operates on.
    pub fn dissimilarity(&self, i: usize, j: usize) -> f64 {
        1.0 - self.get(i, j)
    }

    /// CSV dump of the full matrix, one row per agent.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Pairwise similarity over a population's attribute vectors.
pub fn similarity_matrix(
    population: &Population,
    weights: &WeightVector,
) -> Result<SimilarityMatrix, SimilarityError> {
    let vectors: Vec<FeatureVector> = population
        .agents()
        .iter()
        .map(|a| a.attributes.clone())
        .collect();
    SimilarityMatrix::from_vectors(&vectors, weights)
}
