//! The transcultural-factor recurrence.
//!
//! Per individual, the factor evolves as an affine first-order recurrence:
//!
//! ```text
//! v_t = alpha * v_{t-1} + beta1 * q + sum_k(beta_k * x_k) + sum_l(gamma_l * z_l) + u_t
//! ```
//!
//! `q` is the expected-culture level, `x` the modernization/intervening
//! attribute levels, `z` the resultant (status) levels, and `u_t` a seeded
//! disturbance. With `|alpha| < 1` and no noise the sequence converges
//! geometrically to the fixed point `drive / (1 - alpha)` where `drive` is
//! the constant part of the right-hand side.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FactorError {
    #[error("coefficient/input length mismatch: {vector} has {coeffs} coefficients but {inputs} inputs")]
    DimensionMismatch { vector: &'static str, coeffs: usize, inputs: usize },
    #[error("alpha = 1 has no fixed point")]
    SingularAlpha,
}

/// Recurrence coefficients: persistence `alpha`, expected-culture weight
/// `beta1`, and the per-attribute weight vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorCoefficients {
    pub alpha: f64,
    pub beta1: f64,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl FactorCoefficients {
    /// Spreads block totals evenly: each `beta_k = beta_total / x_len` and
    /// each `gamma_l = gamma_total / z_len`.
    pub fn uniform(alpha: f64, beta1: f64, beta_total: f64, x_len: usize, gamma_total: f64, z_len: usize) -> Self {
        let spread = |total: f64, len: usize| {
            if len == 0 { Vec::new() } else { vec![total / len as f64; len] }
        };
        Self {
            alpha,
            beta1,
            beta: spread(beta_total, x_len),
            gamma: spread(gamma_total, z_len),
        }
    }
}

/// Inputs an individual feeds into the recurrence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorInputs {
    pub q: f64,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

/// Disturbance model for `u_t`. `None` keeps runs exactly reproducible
/// without consuming random state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    Uniform { half_width: f64 },
    Gaussian { std_dev: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self { kind: NoiseKind::None, seed: 0 }
    }

    /// Same distribution, different seed. Used to give each agent its own
    /// stream.
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn stream(&self) -> NoiseStream {
        NoiseStream {
            kind: self.kind,
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        }
    }
}

/// Deterministic sequence of disturbances, one per step.
pub struct NoiseStream {
    kind: NoiseKind,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn next_disturbance(&mut self) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            NoiseKind::Uniform { half_width } => (self.rng.random::<f64>() * 2.0 - 1.0) * half_width,
            NoiseKind::Gaussian { std_dev } => {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                z * std_dev
            }
        }
    }
}

/// Mixes a stream id into a base seed (splitmix64 finalizer). Agent `i` of a
/// run seeded with `s` draws noise from `derive_stream_seed(s, i)`, which
/// makes parallel and serial execution identical.
pub fn derive_stream_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_dims(coeffs: &FactorCoefficients, inputs: &FactorInputs) -> Result<(), FactorError> {
    if coeffs.beta.len() != inputs.x.len() {
        return Err(FactorError::DimensionMismatch {
            vector: "beta/x",
            coeffs: coeffs.beta.len(),
            inputs: inputs.x.len(),
        });
    }
    if coeffs.gamma.len() != inputs.z.len() {
        return Err(FactorError::DimensionMismatch {
            vector: "gamma/z",
            coeffs: coeffs.gamma.len(),
            inputs: inputs.z.len(),
        });
    }
    Ok(())
}

/// The constant part of the recurrence right-hand side:
/// `beta1*q + sum(beta*x) + sum(gamma*z)`.
fn drive(coeffs: &FactorCoefficients, inputs: &FactorInputs) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(&c, &v)| c * v).sum::<f64>();
    coeffs.beta1 * inputs.q + dot(&coeffs.beta, &inputs.x) + dot(&coeffs.gamma, &inputs.z)
}

/// One step of the recurrence with disturbance `u`.
pub fn step_factor(
    v_prev: f64,
    coeffs: &FactorCoefficients,
    inputs: &FactorInputs,
    u: f64,
) -> Result<f64, FactorError> {
    check_dims(coeffs, inputs)?;
    Ok(coeffs.alpha * v_prev + drive(coeffs, inputs) + u)
}

/// The factor values of one run, together with what produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub values: Vec<f64>,
    pub coefficients: FactorCoefficients,
    pub inputs: FactorInputs,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("trajectory has at least v0")
    }
}

/// Runs the recurrence for `steps` transitions from `v0`, drawing one
/// disturbance per step from `noise`. Deterministic given the noise seed.
pub fn trajectory(
    v0: f64,
    coeffs: &FactorCoefficients,
    inputs: &FactorInputs,
    steps: usize,
    noise: &NoiseSpec,
) -> Result<Trajectory, FactorError> {
    check_dims(coeffs, inputs)?;
    let mut values = Vec::with_capacity(steps + 1);
    values.push(v0);
    let mut stream = noise.stream();
    let constant = drive(coeffs, inputs);
    let mut v = v0;
    for _ in 0..steps {
        v = coeffs.alpha * v + constant + stream.next_disturbance();
        values.push(v);
    }
    Ok(Trajectory {
        values,
        coefficients: coeffs.clone(),
        inputs: inputs.clone(),
    })
}

/// The zero-noise stationary value `drive / (1 - alpha)`; requires
/// `alpha != 1`.
pub fn fixed_point(coeffs: &FactorCoefficients, inputs: &FactorInputs) -> Result<f64, FactorError> {
    check_dims(coeffs, inputs)?;
    if coeffs.alpha == 1.0 {
        return Err(FactorError::SingularAlpha);
    }
    Ok(drive(coeffs, inputs) / (1.0 - coeffs.alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_coeffs(alpha: f64, beta1: f64) -> FactorCoefficients {
        FactorCoefficients { alpha, beta1, beta: vec![], gamma: vec![] }
    }

    fn scalar_inputs(q: f64) -> FactorInputs {
        FactorInputs { q, x: vec![], z: vec![] }
    }

    #[test]
    fn pure_persistence_identity() {
        let v = step_factor(0.37, &scalar_coeffs(1.0, 0.0), &scalar_inputs(0.0), 0.0).unwrap();
        assert_eq!(v, 0.37);
    }

    #[test]
    fn affine_form_hand_evaluation() {
        let v = step_factor(0.0, &scalar_coeffs(0.5, 1.0), &scalar_inputs(2.0), 0.0).unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn memoryless_when_alpha_zero() {
        let coeffs = FactorCoefficients {
            alpha: 0.0,
            beta1: 0.4,
            beta: vec![0.1, 0.2],
            gamma: vec![0.3],
        };
        let inputs = FactorInputs { q: 0.5, x: vec![0.6, 0.7], z: vec![0.8] };
        let expected = 0.4 * 0.5 + 0.1 * 0.6 + 0.2 * 0.7 + 0.3 * 0.8;
        for v_prev in [-3.0, 0.0, 17.5] {
            assert_eq!(step_factor(v_prev, &coeffs, &inputs, 0.0).unwrap(), expected);
        }
    }

    #[test]
    fn dimension_mismatch_detected() {
        let coeffs = FactorCoefficients { alpha: 0.5, beta1: 0.0, beta: vec![0.1], gamma: vec![] };
        let inputs = FactorInputs { q: 0.0, x: vec![], z: vec![] };
        assert!(matches!(
            step_factor(0.0, &coeffs, &inputs, 0.0),
            Err(FactorError::DimensionMismatch { vector: "beta/x", .. })
        ));
    }

    #[test]
    fn geometric_approach_to_fixed_point() {
        // v_{t+1} = 0.5 v_t + 2  =>  v = [0, 2, 3, 3.5], fixed point 4.
        let coeffs = scalar_coeffs(0.5, 1.0);
        let inputs = scalar_inputs(2.0);
        let traj = trajectory(0.0, &coeffs, &inputs, 3, &NoiseSpec::none()).unwrap();
        assert_eq!(traj.values, vec![0.0, 2.0, 3.0, 3.5]);
        assert_eq!(fixed_point(&coeffs, &inputs).unwrap(), 4.0);
        // closed form v_t = 4 (1 - 0.5^t)
        for (t, &v) in traj.values.iter().enumerate() {
            assert!((v - 4.0 * (1.0 - 0.5f64.powi(t as i32))).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_steps_is_initial_value_only() {
        let traj = trajectory(0.25, &scalar_coeffs(0.9, 0.0), &scalar_inputs(0.0), 0, &NoiseSpec::none()).unwrap();
        assert_eq!(traj.values, vec![0.25]);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let coeffs = scalar_coeffs(0.8, 1.0);
        let inputs = scalar_inputs(0.3);
        let noise = NoiseSpec { kind: NoiseKind::Gaussian { std_dev: 0.1 }, seed: 99 };
        let a = trajectory(0.0, &coeffs, &inputs, 40, &noise).unwrap();
        let b = trajectory(0.0, &coeffs, &inputs, 40, &noise).unwrap();
        assert_eq!(a.values, b.values);
        let other = trajectory(0.0, &coeffs, &inputs, 40, &noise.with_seed(100)).unwrap();
        assert_ne!(a.values, other.values);
    }

    #[test]
    fn fixed_point_cases() {
        assert_eq!(
            fixed_point(&scalar_coeffs(0.0, 0.0), &scalar_inputs(0.0)).unwrap(),
            0.0
        );
        assert_eq!(
            fixed_point(&scalar_coeffs(1.0, 1.0), &scalar_inputs(1.0)),
            Err(FactorError::SingularAlpha)
        );
    }

    #[test]
    fn uniform_spread_sums_to_totals() {
        let c = FactorCoefficients::uniform(0.6, 0.2, 0.2, 22, 0.2, 6);
        assert_eq!(c.beta.len(), 22);
        assert_eq!(c.gamma.len(), 6);
        assert!((c.beta.iter().sum::<f64>() - 0.2).abs() < 1e-12);
        assert!((c.gamma.iter().sum::<f64>() - 0.2).abs() < 1e-12);
        let empty = FactorCoefficients::uniform(0.6, 0.2, 0.2, 0, 0.2, 0);
        assert!(empty.beta.is_empty() && empty.gamma.is_empty());
    }

    #[test]
    fn derived_seeds_differ_per_stream() {
        let s0 = derive_stream_seed(42, 0);
        let s1 = derive_stream_seed(42, 1);
        assert_ne!(s0, s1);
        assert_eq!(s0, derive_stream_seed(42, 0));
    }
}
