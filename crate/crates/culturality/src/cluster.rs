//! Similarity-driven k-medoids (PAM) and cluster validity.
//!
//! PAM works directly on the dissimilarity `1 - similarity`, so no
//! coordinate embedding or metric property is needed, and the cluster
//! exemplars (medoids) are always real agents. BUILD greedily seeds the
//! medoid set; SWAP then applies the single best improving exchange until
//! none lowers the objective. All ties break toward the lowest agent id,
//! which makes the procedure fully deterministic.

use rand::SeedableRng;
use thiserror::Error;

use crate::similarity::SimilarityMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("invalid cluster count {k} for {n} agents")]
    InvalidK { k: usize, n: usize },
}

/// A partition of the agents: medoid ids (ascending), per-agent cluster
/// assignment, and the total within-cluster dissimilarity.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub medoids: Vec<usize>,
    pub objective: f64,
}

impl Clustering {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignments {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == cluster)
            .map(|(i, _)| i)
            .collect()
    }

    /// CSV export: `agent,cluster,is_medoid`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("agent,cluster,is_medoid\n");
        for (i, &c) in self.assignments.iter().enumerate() {
            let medoid = self.medoids[c] == i;
            out.push_str(&format!("{i},{c},{}\n", if medoid { 1 } else { 0 }));
        }
        out
    }
}

fn objective(matrix: &SimilarityMatrix, medoids: &[usize]) -> f64 {
    let n = matrix.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut best = f64::INFINITY;
        for &m in medoids {
            let d = matrix.dissimilarity(i, m);
            if d < best {
                best = d;
            }
        }
        total += best;
    }
    total
}

/// Nearest-medoid assignment. A medoid always belongs to its own cluster;
/// other ties go to the lowest medoid id (medoids are kept sorted).
fn assign(matrix: &SimilarityMatrix, medoids: &[usize]) -> Vec<usize> {
    let n = matrix.len();
    (0..n)
        .map(|i| {
            if let Some(own) = medoids.iter().position(|&m| m == i) {
                return own;
            }
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, &m) in medoids.iter().enumerate() {
                let d = matrix.dissimilarity(i, m);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Extra seeded starts beyond the deterministic BUILD start. Swap-only
/// local search can stall in a poor basin; a handful of restarts reliably
/// reaches the enumerated optimum on small instances.
const RANDOM_RESTARTS: u64 = 9;

/// PAM with greedy BUILD and best-improvement SWAP, repeated from seeded
/// random starts; the run with the lowest objective wins (first winner on
/// ties). Deterministic given `seed`.
pub fn cluster_kmedoids(
    matrix: &SimilarityMatrix,
    k: usize,
    seed: u64,
) -> Result<Clustering, ClusterError> {
    cluster_kmedoids_traced(matrix, k, seed).map(|(c, _)| c)
}

/// Like [`cluster_kmedoids`] but also returns the winning run's objective
/// trace (after its start and after every applied swap), for convergence
/// checks.
pub fn cluster_kmedoids_traced(
    matrix: &SimilarityMatrix,
    k: usize,
    seed: u64,
) -> Result<(Clustering, Vec<f64>), ClusterError> {
    let n = matrix.len();
    if k == 0 || k > n {
        return Err(ClusterError::InvalidK { k, n });
    }

    let mut best: Option<(Vec<usize>, f64, Vec<f64>)> = None;
    for restart in 0..=RANDOM_RESTARTS {
        let start = if restart == 0 {
            build(matrix, k)
        } else {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
                crate::factor::derive_stream_seed(seed, restart),
            );
            let mut picked = rand::seq::index::sample(&mut rng, n, k).into_vec();
            picked.sort_unstable();
            picked
        };
        let (medoids, obj, trace) = swap_to_convergence(matrix, start);
        if best.as_ref().is_none_or(|(_, b, _)| obj < *b) {
            best = Some((medoids, obj, trace));
        }
    }
    let (medoids, objective, trace) = best.expect("at least the BUILD start ran");

    let assignments = assign(matrix, &medoids);
    Ok((
        Clustering { k, assignments, medoids, objective },
        trace,
    ))
}

/// Greedy BUILD: repeatedly add the candidate that lowers the objective
/// most (ties to the lowest id).
fn build(matrix: &SimilarityMatrix, k: usize) -> Vec<usize> {
    let n = matrix.len();
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<(f64, usize)> = None;
        for c in 0..n {
            if medoids.contains(&c) {
                continue;
            }
            medoids.push(c);
            let obj = objective(matrix, &medoids);
            medoids.pop();
            match best {
                Some((b, _)) if obj >= b => {}
                _ => best = Some((obj, c)),
            }
        }
        medoids.push(best.expect("candidate exists").1);
    }
    medoids.sort_unstable();
    medoids
}

/// SWAP: apply the single best strictly-improving exchange per round,
/// ties by lowest (medoid, candidate) pair, until no swap lowers the
/// objective. Returns the medoids, final objective, and objective trace.
fn swap_to_convergence(
    matrix: &SimilarityMatrix,
    mut medoids: Vec<usize>,
) -> (Vec<usize>, f64, Vec<f64>) {
    let n = matrix.len();
    let mut current = objective(matrix, &medoids);
    let mut trace = vec![current];
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (mi, &m) in medoids.iter().enumerate() {
            for c in 0..n {
                if medoids.contains(&c) {
                    continue;
                }
                let mut trial: Vec<usize> = medoids.clone();
                trial[mi] = c;
                let obj = objective(matrix, &trial);
                let key = (obj, m, c);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
        match best {
            Some((obj, m, c)) if obj < current => {
                let pos = medoids.iter().position(|&x| x == m).expect("medoid present");
                medoids[pos] = c;
                medoids.sort_unstable();
                assert!(obj <= current, "swap must not increase the objective");
                current = obj;
                trace.push(current);
            }
            _ => break,
        }
    }
    (medoids, current, trace)
}

/// Mean silhouette coefficient over all agents, with the conventions
/// s = 0 for singleton clusters and 0/0 = 0. Requires k >= 2.
pub fn silhouette(matrix: &SimilarityMatrix, clustering: &Clustering) -> Result<f64, ClusterError> {
    let n = matrix.len();
    if clustering.k < 2 {
        return Err(ClusterError::InvalidK { k: clustering.k, n });
    }
    let sizes = clustering.cluster_sizes();
    let mut total = 0.0;
    for i in 0..n {
        let own = clustering.assignments[i];
        if sizes[own] <= 1 {
            continue; // s_i = 0
        }
        let mut sums = vec![0.0; clustering.k];
        for j in 0..n {
            if j != i {
                sums[clustering.assignments[j]] += matrix.dissimilarity(i, j);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..clustering.k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if !b.is_finite() {
            continue; // no other non-empty cluster
        }
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        } // else 0/0 convention: contribute 0
    }
    Ok(total / n as f64)
}

/// Scans cluster counts by mean silhouette; ties go to the smallest k.
/// Returns (k, clustering, silhouette).
pub fn auto_k(
    matrix: &SimilarityMatrix,
    k_min: usize,
    k_max: usize,
    seed: u64,
) -> Result<(usize, Clustering, f64), ClusterError> {
    let n = matrix.len();
    let lo = k_min.max(2);
    let hi = k_max.min(n);
    if lo > hi {
        return Err(ClusterError::InvalidK { k: lo, n });
    }
    let mut best: Option<(usize, Clustering, f64)> = None;
    for k in lo..=hi {
        let clustering = cluster_kmedoids(matrix, k, seed)?;
        let s = silhouette(matrix, &clustering)?;
        if best.as_ref().is_none_or(|(_, _, bs)| s > *bs) {
            best = Some((k, clustering, s));
        }
    }
    Ok(best.expect("at least one k scanned"))
}

/// Fraction of agents whose cluster's majority label matches their own.
pub fn purity(clustering: &Clustering, labels: &[&str]) -> f64 {
    use std::collections::BTreeMap;
    let n = labels.len();
    if n == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    for cluster in 0..clustering.k {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, &c) in clustering.assignments.iter().enumerate() {
            if c == cluster {
                *counts.entry(labels[i]).or_default() += 1;
            }
        }
        hits += counts.values().copied().max().unwrap_or(0);
    }
    hits as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::{FeatureVector, SimilarityMatrix, WeightVector};
    use rand::{Rng, SeedableRng};

    fn matrix_from(vecs: &[Vec<f64>]) -> SimilarityMatrix {
        let fvs: Vec<FeatureVector> = vecs
            .iter()
            .map(|v| FeatureVector::new(v.clone()).unwrap())
            .collect();
        let w = WeightVector::uniform(vecs[0].len()).unwrap();
        SimilarityMatrix::from_vectors(&fvs, &w).unwrap()
    }

    fn random_matrix(n: usize, dim: usize, seed: u64) -> SimilarityMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vecs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
            .collect();
        matrix_from(&vecs)
    }

    fn brute_force_optimum(matrix: &SimilarityMatrix, k: usize) -> f64 {
        fn combos(n: usize, k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for first in 0..n {
                for mut rest in combos(n, k - 1) {
                    if rest.iter().all(|&r| r > first) {
                        rest.insert(0, first);
                        out.push(rest);
                    }
                }
            }
            out.into_iter().filter(|c| c.len() == k).collect()
        }
        combos(matrix.len(), k)
            .into_iter()
            .map(|meds| objective(matrix, &meds))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn k_equals_n_gives_zero_objective() {
        let m = random_matrix(6, 4, 1);
        let c = cluster_kmedoids(&m, 6, 0).unwrap();
        assert_eq!(c.objective, 0.0);
        assert_eq!(c.medoids, vec![0, 1, 2, 3, 4, 5]);
        for (i, &a) in c.assignments.iter().enumerate() {
            assert_eq!(c.medoids[a], i);
        }
    }

    #[test]
    fn k_one_matches_exhaustive_scan() {
        let m = random_matrix(9, 5, 2);
        let c = cluster_kmedoids(&m, 1, 0).unwrap();
        let mut best = (f64::INFINITY, 0);
        for cand in 0..9 {
            let total: f64 = (0..9).map(|j| m.dissimilarity(cand, j)).sum();
            if total < best.0 {
                best = (total, cand);
            }
        }
        assert_eq!(c.medoids, vec![best.1]);
        assert!((c.objective - best.0).abs() < 1e-12);
    }

    #[test]
    fn small_instance_tracks_brute_force() {
        // PAM is a local search: on tiny random instances it must land
        // within 5% of the enumerated optimum, and usually hits it exactly.
        let mut exact = 0;
        for seed in 0..20 {
            let m = random_matrix(8, 3, seed);
            let c = cluster_kmedoids(&m, 2, 0).unwrap();
            let opt = brute_force_optimum(&m, 2);
            assert!(
                c.objective <= opt * 1.05 + 1e-12,
                "seed {seed}: pam {} vs optimum {opt}",
                c.objective
            );
            if c.objective <= opt + 1e-12 {
                exact += 1;
            }
        }
        assert!(exact >= 15, "only {exact}/20 instances solved exactly");
    }

    #[test]
    fn separated_groups_match_brute_force_exactly() {
        let m = matrix_from(&[
            vec![0.05, 0.0],
            vec![0.0, 0.05],
            vec![0.1, 0.1],
            vec![0.9, 1.0],
            vec![1.0, 0.9],
            vec![0.95, 0.95],
        ]);
        let c = cluster_kmedoids(&m, 2, 0).unwrap();
        let opt = brute_force_optimum(&m, 2);
        assert!((c.objective - opt).abs() < 1e-12);
    }

    #[test]
    fn swap_trace_is_strictly_decreasing() {
        for seed in 0..10 {
            let m = random_matrix(20, 4, 100 + seed);
            let (_, trace) = cluster_kmedoids_traced(&m, 3, 0).unwrap();
            for w in trace.windows(2) {
                assert!(w[1] < w[0]);
            }
        }
    }

    #[test]
    fn invalid_k_rejected() {
        let m = random_matrix(4, 2, 3);
        assert!(matches!(cluster_kmedoids(&m, 0, 0), Err(ClusterError::InvalidK { .. })));
        assert!(matches!(cluster_kmedoids(&m, 5, 0), Err(ClusterError::InvalidK { .. })));
    }

    #[test]
    fn medoid_belongs_to_own_cluster_even_under_ties() {
        // All identical points: every dissimilarity is zero.
        let m = matrix_from(&vec![vec![0.5, 0.5]; 5]);
        let c = cluster_kmedoids(&m, 2, 0).unwrap();
        for (cluster, &m_id) in c.medoids.iter().enumerate() {
            assert_eq!(c.assignments[m_id], cluster);
        }
        assert_eq!(silhouette(&m, &c).unwrap(), 0.0);
    }

    #[test]
    fn perfectly_separated_duplicates_have_unit_silhouette() {
        let m = matrix_from(&[
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        ]);
        let c = cluster_kmedoids(&m, 2, 0).unwrap();
        assert_eq!(silhouette(&m, &c).unwrap(), 1.0);
    }

    #[test]
    fn silhouette_matches_hand_computation() {
        // Three points, clusters {0,1} and {2}:
        // d(0,1)=0.2, d(0,2)=0.8, d(1,2)=0.6
        // s0 = (0.8-0.2)/0.8, s1 = (0.6-0.2)/0.6, s2 = 0  =>  mean
        let m = matrix_from(&[vec![0.1], vec![0.3], vec![0.9]]);
        let clustering = Clustering {
            k: 2,
            assignments: vec![0, 0, 1],
            medoids: vec![0, 2],
            objective: 0.2,
        };
        let expected = ((0.8 - 0.2) / 0.8 + (0.6 - 0.2) / 0.6) / 3.0;
        assert!((silhouette(&m, &clustering).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn silhouette_requires_k_at_least_two() {
        let m = random_matrix(5, 2, 4);
        let c = cluster_kmedoids(&m, 1, 0).unwrap();
        assert!(matches!(silhouette(&m, &c), Err(ClusterError::InvalidK { .. })));
    }

    #[test]
    fn auto_k_finds_clear_structure() {
        // Two tight groups: silhouette should peak at k = 2.
        let m = matrix_from(&[
            vec![0.0, 0.05],
            vec![0.05, 0.0],
            vec![0.02, 0.02],
            vec![0.95, 1.0],
            vec![1.0, 0.95],
            vec![0.98, 0.97],
        ]);
        let (k, _, s) = auto_k(&m, 2, 5, 0).unwrap();
        assert_eq!(k, 2);
        assert!(s > 0.8);
    }

    #[test]
    fn purity_counts_majority_labels() {
        let clustering = Clustering {
            k: 2,
            assignments: vec![0, 0, 0, 1, 1],
            medoids: vec![0, 3],
            objective: 0.0,
        };
        let labels = ["a", "a", "b", "b", "b"];
        assert!((purity(&clustering, &labels) - 4.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn assignment_csv_shape() {
        let m = random_matrix(4, 2, 9);
        let c = cluster_kmedoids(&m, 2, 0).unwrap();
        let csv = c.to_csv();
        assert!(csv.starts_with("agent,cluster,is_medoid\n"));
        assert_eq!(csv.lines().count(), 5);
    }
}
