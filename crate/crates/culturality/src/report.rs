//! Transculturality scoring and cohort ranking.
//!
//! The score of an attribute profile is its weighted mean level,
//! `sum_i(w_i * a_i) / sum_i(w_i)` — a monotone statistic in every
//! positively-weighted attribute and invariant under rescaling all weights.
//! The survey's published aggregate row is not derivable from the column
//! values, so reports show it alongside the computed score, labeled
//! "as published", and never recompute it.

use thiserror::Error;

use crate::schema::AttributeSchema;
use crate::similarity::FeatureVector;
use crate::survey::{Gender, SurveyError, SurveyTable};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("weights must sum to a positive value")]
    ZeroWeightSum,
    #[error("attribute vector has {got} components, schema has {expected}")]
    SchemaMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Survey(#[from] SurveyError),
}

/// Weighted mean attribute level of a schema-aligned vector.
pub fn score_transculturality(
    attributes: &FeatureVector,
    schema: &AttributeSchema,
) -> Result<f64, ReportError> {
    if attributes.len() != schema.len() {
        return Err(ReportError::SchemaMismatch {
            got: attributes.len(),
            expected: schema.len(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (&a, attr) in attributes.components().iter().zip(schema.attributes()) {
        num += attr.weight * a;
        den += attr.weight;
    }
    if den <= 0.0 {
        return Err(ReportError::ZeroWeightSum);
    }
    Ok(num / den)
}

/// One row of the cohort ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortScore {
    pub society: String,
    pub gender: Gender,
    pub score: f64,
}

/// Cohorts ordered by descending transculturality score; ties break by
/// society id, then gender.
pub fn rank_cohorts(table: &SurveyTable) -> Result<Vec<CohortScore>, ReportError> {
    let mut rows = Vec::with_capacity(table.cohorts().len());
    for cohort in table.cohorts() {
        let vector = table.cohort_vector(&cohort.society, cohort.gender)?;
        let score = score_transculturality(&vector, table.schema())?;
        rows.push(CohortScore {
            society: cohort.society.clone(),
            gender: cohort.gender,
            score,
        });
    }
    rows.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("scores are finite")
            .then_with(|| a.society.cmp(&b.society))
            .then_with(|| a.gender.cmp(&b.gender))
    });
    Ok(rows)
}

/// CSV export of a ranking, with the stored aggregate shown "as published".
pub fn ranking_csv(table: &SurveyTable, ranking: &[CohortScore]) -> String {
    let mut out = String::from("rank,society,gender,score,aggregate_as_published\n");
    for (i, row) in ranking.iter().enumerate() {
        let published = table
            .stored_aggregate()
            .get(&(row.society.clone(), row.gender))
            .map_or(String::new(), |v| v.to_string());
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            row.society,
            row.gender,
            row.score,
            published
        ));
    }
    out
}
