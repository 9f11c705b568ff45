//! Survey-driven transculturality analytics.
//!
//! The crate ingests cross-society behavioral survey tables, synthesizes an
//! agent population from the cohort prevalences, evolves a per-agent
//! transcultural factor through a linear recurrence, groups agents into
//! "culturality" clusters by weighted attribute similarity, and renders
//! comparative reports plus an HDI-colored cluster map.
//!
//! The pipeline stages map onto the top-level modules:
//!
//! * [`schema`] / [`survey`] — attribute taxonomy, survey loading, validation
//! * [`factor`] — the transcultural-factor recurrence and its fixed point
//! * [`population`] / [`sim`] — agent synthesis and the simulation protocol
//! * [`similarity`] / [`cluster`] — the weighted similarity kernel and
//!   k-medoids clustering with silhouette-based validity
//! * [`report`] / [`map`] — scoring, cohort ranking, SVG cluster maps
//! * [`config`] / [`cli`] — run configuration and the `culturality` binary
//!
//! The `book/` directory in the repository walks through each stage with
//! runnable examples; every snippet there is compiled and executed by
//! `cargo test --doc`.

pub mod cli;
pub mod cluster;
pub mod config;
pub mod factor;
pub mod map;
pub mod population;
pub mod report;
pub mod schema;
pub mod sim;
pub mod similarity;
pub mod survey;

#[cfg(doctest)]
mod guide;

pub use cluster::{cluster_kmedoids, silhouette, Clustering};
pub use factor::{fixed_point, step_factor, trajectory, FactorCoefficients, FactorInputs, NoiseSpec, Trajectory};
pub use population::{synthesize_population, Agent, Population};
pub use report::{rank_cohorts, score_transculturality};
pub use schema::{AttributeDef, AttributeSchema, Category};
pub use sim::{apply_paradigm_shift, run, SimConfig, SimResult};
pub use similarity::{attr_similarity, similarity_matrix, weighted_similarity, FeatureVector, SimilarityMatrix, WeightVector};
pub use survey::{load_survey, Gender, SurveyTable};
