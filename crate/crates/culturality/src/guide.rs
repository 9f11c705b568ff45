//! Book chapters compiled as doc-tests. Every fenced Rust block in
//! `book/src/` runs under `cargo test --doc`, which keeps the guide and the
//! library honest with each other.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/survey-data.md")]
mod survey_data {}

#[doc = include_str!("../../../book/src/factor-dynamics.md")]
mod factor_dynamics {}

#[doc = include_str!("../../../book/src/population-synthesis.md")]
mod population_synthesis {}

#[doc = include_str!("../../../book/src/similarity-and-clusters.md")]
mod similarity_and_clusters {}

#[doc = include_str!("../../../book/src/reports-and-maps.md")]
mod reports_and_maps {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
