//! Multi-agent simulation protocol.
//!
//! Every agent evolves its transcultural factor independently for a fixed
//! number of steps (50 by default, matching the survey protocol's stop
//! condition). Scheduled paradigm shifts replace the recurrence
//! coefficients mid-run: a shift at step `s` is in force for the transition
//! that produces `v_s` and stays active until the next shift.
//!
//! Agents never interact; the factor couples them only through the shared
//! coefficients. That makes the run embarrassingly parallel, and because
//! each agent draws noise from its own derived seed, parallel and serial
//! execution produce bit-identical results.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::factor::{
    derive_stream_seed, step_factor, FactorCoefficients, FactorError, NoiseSpec, Trajectory,
};
use crate::population::{weighted_mean, Population};

pub const DEFAULT_STEPS: usize = 50;
pub const DEFAULT_POPULATION: usize = 150;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("paradigm shift steps must be strictly increasing and within (0, steps]")]
    InvalidShiftSchedule,
    #[error(transparent)]
    Factor(#[from] FactorError),
}

/// A scheduled coefficient replacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftEvent {
    pub step: usize,
    pub coefficients: FactorCoefficients,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub steps: usize,
    pub population_size: usize,
    pub seed: u64,
    pub coefficients: FactorCoefficients,
    pub noise: NoiseSpec,
    pub shifts: Vec<ShiftEvent>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let mut prev = 0;
        for shift in &self.shifts {
            if shift.step <= prev || shift.step > self.steps {
                return Err(SimError::InvalidShiftSchedule);
            }
            prev = shift.step;
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form; identifies a run setup.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(json.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Coefficients in force at `step`: the last shift scheduled at or before
/// it, else the base coefficients.
pub fn apply_paradigm_shift(config: &SimConfig, step: usize) -> &FactorCoefficients {
    config
        .shifts
        .iter()
        .rev()
        .find(|s| s.step <= step)
        .map(|s| &s.coefficients)
        .unwrap_or(&config.coefficients)
}

/// Outcome of a run: one trajectory per agent (index-aligned with the
/// population) plus reproduction metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub trajectories: Vec<Trajectory>,
    pub final_values: Vec<f64>,
    pub seed: u64,
    pub config_digest: String,
}

impl SimResult {
    /// CSV export: `agent_id,society,gender,v_0,...,v_T`.
    pub fn to_csv(&self, population: &Population) -> String {
        let steps = self.trajectories.first().map_or(0, |t| t.values.len() - 1);
        let mut out = String::from("agent_id,society,gender");
        for t in 0..=steps {
            out.push_str(&format!(",v_{t}"));
        }
        out.push('\n');
        for (agent, traj) in population.agents().iter().zip(&self.trajectories) {
            out.push_str(&format!("{},{},{}", agent.id, agent.society, agent.gender));
            for v in &traj.values {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Runs the protocol over the whole population. Each agent starts from the
/// weighted mean of its attribute realizations and steps through the
/// recurrence with the coefficients active at each step.
pub fn run(population: &Population, config: &SimConfig) -> Result<SimResult, SimError> {
    config.validate()?;
    let weights = population.schema().weights();
    let trajectories: Vec<Trajectory> = population
        .agents()
        .par_iter()
        .map(|agent| -> Result<Trajectory, SimError> {
            let v0 = weighted_mean(agent.attributes.components(), &weights);
            let agent_noise = config
                .noise
                .with_seed(derive_stream_seed(config.seed, agent.id as u64));
            let mut stream = agent_noise.stream();
            let mut values = Vec::with_capacity(config.steps + 1);
            values.push(v0);
            let mut v = v0;
            for step in 1..=config.steps {
                let coeffs = apply_paradigm_shift(config, step);
                v = step_factor(v, coeffs, &agent.inputs, stream.next_disturbance())?;
                values.push(v);
            }
            Ok(Trajectory {
                values,
                coefficients: config.coefficients.clone(),
                inputs: agent.inputs.clone(),
            })
        })
        .collect::<Result<_, _>>()?;
    let final_values = trajectories.iter().map(|t| t.final_value()).collect();
    Ok(SimResult {
        trajectories,
        final_values,
        seed: config.seed,
        config_digest: config.digest(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::{fixed_point, NoiseKind};
    use crate::population::synthesize_population;
    use crate::survey::SurveyTable;

    fn base_config(steps: usize) -> SimConfig {
        SimConfig {
            steps,
            population_size: DEFAULT_POPULATION,
            seed: 42,
            coefficients: FactorCoefficients::uniform(0.6, 0.2, 0.2, 22, 0.2, 6),
            noise: NoiseSpec::none(),
            shifts: vec![],
        }
    }

    #[test]
    fn zero_noise_run_converges_to_per_agent_fixed_points() {
        let table = SurveyTable::bundled();
        let pop = synthesize_population(&table, 150, 42).unwrap();
        let config = base_config(50);
        let result = run(&pop, &config).unwrap();
        let weights = pop.schema().weights();
        for (agent, traj) in pop.agents().iter().zip(&result.trajectories) {
            let fp = fixed_point(&config.coefficients, &agent.inputs).unwrap();
            let v0 = weighted_mean(agent.attributes.components(), &weights);
            let bound = 0.6f64.powi(50) * (v0 - fp).abs() + 1e-12;
            assert!(
                (traj.final_value() - fp).abs() <= bound,
                "agent {} final {} fp {}",
                agent.id,
                traj.final_value(),
                fp
            );
        }
    }

    #[test]
    fn zero_steps_yields_initial_values_only() {
        let table = SurveyTable::bundled();
        let pop = synthesize_population(&table, 20, 1).unwrap();
        let result = run(&pop, &base_config(0)).unwrap();
        assert!(result.trajectories.iter().all(|t| t.values.len() == 1));
    }

    #[test]
    fn shift_to_zero_alpha_makes_later_steps_memoryless() {
        let table = SurveyTable::bundled();
        let pop = synthesize_population(&table, 10, 7).unwrap();
        let mut config = base_config(50);
        let shifted = FactorCoefficients::uniform(0.0, 0.2, 0.2, 22, 0.2, 6);
        config.shifts = vec![ShiftEvent { step: 25, coefficients: shifted.clone() }];
        let result = run(&pop, &config).unwrap();
        for (agent, traj) in pop.agents().iter().zip(&result.trajectories) {
            let flat = step_factor(0.0, &shifted, &agent.inputs, 0.0).unwrap();
            // From v_25 onward every value is the memoryless affine evaluation.
            for t in 25..=50 {
                assert!((traj.values[t] - flat).abs() < 1e-12, "step {t}");
            }
            assert!((traj.values[24] - flat).abs() > 1e-9, "v_24 still carries memory");
        }
    }

    #[test]
    fn shift_lookup_uses_interval_semantics() {
        let mut config = base_config(50);
        let c10 = FactorCoefficients::uniform(0.1, 0.0, 0.0, 0, 0.0, 0);
        let c30 = FactorCoefficients::uniform(0.3, 0.0, 0.0, 0, 0.0, 0);
        config.shifts = vec![
            ShiftEvent { step: 10, coefficients: c10.clone() },
            ShiftEvent { step: 30, coefficients: c30.clone() },
        ];
        assert_eq!(apply_paradigm_shift(&config, 5), &config.coefficients);
        assert_eq!(apply_paradigm_shift(&config, 20), &c10);
        // A shift applies at its own step.
        assert_eq!(apply_paradigm_shift(&config, 10), &c10);
        assert_eq!(apply_paradigm_shift(&config, 30), &c30);
        assert_eq!(apply_paradigm_shift(&config, 50), &c30);
    }

    #[test]
    fn shift_schedule_validated() {
        let mut config = base_config(50);
        let c = config.coefficients.clone();
        config.shifts = vec![
            ShiftEvent { step: 30, coefficients: c.clone() },
            ShiftEvent { step: 10, coefficients: c.clone() },
        ];
        assert!(matches!(config.validate(), Err(SimError::InvalidShiftSchedule)));
        config.shifts = vec![ShiftEvent { step: 51, coefficients: c.clone() }];
        assert!(config.validate().is_err());
        config.shifts = vec![ShiftEvent { step: 0, coefficients: c }];
        assert!(config.validate().is_err());
    }

    #[test]
    fn runs_are_bit_identical_for_same_seed() {
        let table = SurveyTable::bundled();
        let pop = synthesize_population(&table, 60, 9).unwrap();
        let mut config = base_config(30);
        config.noise = NoiseSpec { kind: NoiseKind::Uniform { half_width: 0.05 }, seed: 0 };
        let a = run(&pop, &config).unwrap();
        let b = run(&pop, &config).unwrap();
        assert_eq!(a, b);
        config.seed = 43;
        let c = run(&pop, &config).unwrap();
        assert_ne!(a.final_values, c.final_values);
    }

    #[test]
    fn parallel_result_matches_serial_reference() {
        let table = SurveyTable::bundled();
        let pop = synthesize_population(&table, 40, 3).unwrap();
        let mut config = base_config(20);
        config.noise = NoiseSpec { kind: NoiseKind::Gaussian { std_dev: 0.02 }, seed: 0 };
        let result = run(&pop, &config).unwrap();
        let weights = pop.schema().weights();
        // Serial recomputation, reversed agent order.
        for agent in pop.agents().iter().rev() {
            let v0 = weighted_mean(agent.attributes.components(), &weights);
            let mut stream = config
                .noise
                .with_seed(derive_stream_seed(config.seed, agent.id as u64))
                .stream();
            let mut v = v0;
            for step in 1..=config.steps {
                let coeffs = apply_paradigm_shift(&config, step);
                v = step_factor(v, coeffs, &agent.inputs, stream.next_disturbance()).unwrap();
            }
            assert_eq!(v, result.trajectories[agent.id].final_value());
        }
    }

    #[test]
    fn csv_export_shape() {
        let table = SurveyTable::bundled();
        let pop = synthesize_population(&table, 5, 2).unwrap();
        let result = run(&pop, &base_config(3)).unwrap();
        let csv = result.to_csv(&pop);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "agent_id,society,gender,v_0,v_1,v_2,v_3");
        assert_eq!(csv.lines().count(), 6);
        assert_eq!(result.config_digest.len(), 64);
    }
}
