//! Survey table ingestion and validation.
//!
//! A survey file is UTF-8 CSV with one attribute per row and one value
//! column per cohort. The first three rows are headers:
//!
//! ```text
//! society,Sample 1,Sample 1,Sample 2,...   societies, one per column
//! gender,F,M,F,...                         cohort genders
//! N,5,7,8,...                              respondent counts
//! ```
//!
//! Attribute rows follow (`Urbanization,84,87,...`), values are percentages
//! in `[0, 100]` with an optional trailing `%`. A final
//! `Sum of Transculturality (mean)` row, when present, is stored verbatim as
//! the published aggregate and is never recomputed.
//!
//! Duplicate attribute names are resolved positionally: when the schema
//! carries suffixed variants such as `Inversion of Status (intervening)` and
//! `Inversion of Status (resultant)`, file rows named `Inversion of Status`
//! are matched to the variants in row order.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::AttributeSchema;
use crate::similarity::FeatureVector;

pub const AGGREGATE_LABEL: &str = "Sum of Transculturality (mean)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gender {
    F,
    M,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::F => "F",
            Gender::M => "M",
        })
    }
}

impl FromStr for Gender {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim() {
            "F" | "f" => Ok(Gender::F),
            "M" | "m" => Ok(Gender::M),
            _ => Err(()),
        }
    }
}

/// One (society, gender) group: respondent count and per-attribute
/// prevalence percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortObservation {
    pub society: String,
    pub gender: Gender,
    pub n: u32,
    values: BTreeMap<String, f64>,
}

impl CohortObservation {
    pub fn new(society: String, gender: Gender, n: u32, values: BTreeMap<String, f64>) -> Self {
        Self { society, gender, n, values }
    }

    pub fn value(&self, attribute: &str) -> Option<f64> {
        self.values.get(attribute).copied()
    }

    pub fn values(&self) -> &BTreeMap<String, f64> {
        &self.values
    }

    pub fn label(&self) -> String {
        format!("{} {}", self.society, self.gender)
    }
}

/// A validated survey: schema, cohorts in file column order, and the
/// published aggregate row kept verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct SurveyTable {
    schema: AttributeSchema,
    cohorts: Vec<CohortObservation>,
    stored_aggregate: BTreeMap<(String, Gender), f64>,
}

#[derive(Debug, Error)]
pub enum SurveyError {
    #[error("io error reading survey: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: unknown attribute {name:?}")]
    UnknownAttribute { name: String, line: usize },
    #[error("line {line}: attribute {name:?} given more than once")]
    DuplicateAttribute { name: String, line: usize },
    #[error("cohort {society} {gender}: missing attribute {name:?}")]
    MissingAttribute { name: String, society: String, gender: Gender },
    #[error("cohort {society} {gender}: attribute {name:?} value {value} outside [0, 100]")]
    OutOfRange { name: String, society: String, gender: Gender, value: f64 },
    #[error("duplicate cohort ({society}, {gender})")]
    DuplicateCohort { society: String, gender: Gender },
    #[error("cohort {society} {gender}: respondent count {n} must be >= 1")]
    InvalidCount { society: String, gender: Gender, n: u32 },
    #[error("unknown cohort ({society}, {gender})")]
    UnknownCohort { society: String, gender: Gender },
}

/// One validation finding; `validate` returns these instead of failing fast.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    MissingAttribute { society: String, gender: Gender, attribute: String },
    OutOfRange { society: String, gender: Gender, attribute: String, value: f64 },
    CountNotPositive { society: String, gender: Gender },
    DuplicateCohort { society: String, gender: Gender },
    UnknownAttribute { society: String, gender: Gender, attribute: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::MissingAttribute { society, gender, attribute } => {
                write!(f, "{society} {gender}: missing attribute {attribute:?}")
            }
            Diagnostic::OutOfRange { society, gender, attribute, value } => {
                write!(f, "{society} {gender}: {attribute:?} value {value} outside [0, 100]")
            }
            Diagnostic::CountNotPositive { society, gender } => {
                write!(f, "{society} {gender}: respondent count must be >= 1")
            }
            Diagnostic::DuplicateCohort { society, gender } => {
                write!(f, "duplicate cohort ({society}, {gender})")
            }
            Diagnostic::UnknownAttribute { society, gender, attribute } => {
                write!(f, "{society} {gender}: attribute {attribute:?} not in schema")
            }
        }
    }
}

impl Diagnostic {
    fn into_error(self) -> SurveyError {
        match self {
            Diagnostic::MissingAttribute { society, gender, attribute } => {
                SurveyError::MissingAttribute { name: attribute, society, gender }
            }
            Diagnostic::OutOfRange { society, gender, attribute, value } => {
                SurveyError::OutOfRange { name: attribute, society, gender, value }
            }
            Diagnostic::CountNotPositive { society, gender } => {
                SurveyError::InvalidCount { society, gender, n: 0 }
            }
            Diagnostic::DuplicateCohort { society, gender } => {
                SurveyError::DuplicateCohort { society, gender }
            }
            Diagnostic::UnknownAttribute { attribute, .. } => {
                SurveyError::UnknownAttribute { name: attribute, line: 0 }
            }
        }
    }
}

const BUNDLED_CSV: &str = include_str!("../data/table1.csv");

/// Reads, parses, and validates a survey file. Any diagnostic is promoted
/// to the corresponding error.
pub fn load_survey(path: &Path, schema: &AttributeSchema) -> Result<SurveyTable, SurveyError> {
    let text = std::fs::read_to_string(path)?;
    let table = SurveyTable::parse(&text, schema)?;
    match table.validate().into_iter().next() {
        None => Ok(table),
        Some(diag) => Err(diag.into_error()),
    }
}

fn parse_value(raw: &str, line: usize) -> Result<f64, SurveyError> {
    let trimmed = raw.trim().strip_suffix('%').unwrap_or(raw.trim());
    trimmed.parse::<f64>().map_err(|_| SurveyError::MalformedRow {
        line,
        reason: format!("cannot parse {raw:?} as a number"),
    })
}

impl SurveyTable {
    /// The survey shipped with the crate, loaded against the default schema.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_CSV, &AttributeSchema::bundled()).expect("bundled survey is valid")
    }

    /// Assembles a table without validation; pair with [`SurveyTable::validate`].
    pub fn from_parts(
        schema: AttributeSchema,
        cohorts: Vec<CohortObservation>,
        stored_aggregate: BTreeMap<(String, Gender), f64>,
    ) -> Self {
        Self { schema, cohorts, stored_aggregate }
    }

    /// Parses CSV text into a table. Structural problems (bad headers,
    /// unparseable numbers, unknown or repeated attributes, repeated
    /// cohorts) fail here; value-level checks are left to `validate`.
    pub fn parse(text: &str, schema: &AttributeSchema) -> Result<Self, SurveyError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(text.as_bytes());

        let mut records = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| SurveyError::MalformedRow {
                line: i + 1,
                reason: e.to_string(),
            })?;
            records.push(rec);
        }
        if records.len() < 3 {
            return Err(SurveyError::MalformedRow {
                line: records.len() + 1,
                reason: "expected society, gender, and N header rows".into(),
            });
        }

        let expect_label = |idx: usize, label: &str| -> Result<(), SurveyError> {
            let got = records[idx].get(0).unwrap_or("");
            if got.trim() == label {
                Ok(())
            } else {
                Err(SurveyError::MalformedRow {
                    line: idx + 1,
                    reason: format!("expected {label:?} header row, found {got:?}"),
                })
            }
        };
        expect_label(0, "society")?;
        expect_label(1, "gender")?;
        expect_label(2, "N")?;

        let width = records[0].len();
        if width < 2 {
            return Err(SurveyError::MalformedRow {
                line: 1,
                reason: "no cohort columns".into(),
            });
        }
        for (idx, rec) in records.iter().enumerate() {
            if rec.len() != width {
                return Err(SurveyError::MalformedRow {
                    line: idx + 1,
                    reason: format!("expected {} columns, found {}", width, rec.len()),
                });
            }
        }

        let n_cohorts = width - 1;
        let mut societies = Vec::with_capacity(n_cohorts);
        let mut genders = Vec::with_capacity(n_cohorts);
        let mut counts = Vec::with_capacity(n_cohorts);
        for c in 0..n_cohorts {
            let society = records[0].get(c + 1).unwrap().trim().to_string();
            if society.is_empty() {
                return Err(SurveyError::MalformedRow {
                    line: 1,
                    reason: format!("empty society name in column {}", c + 2),
                });
            }
            societies.push(society);
            let g = records[1].get(c + 1).unwrap();
            genders.push(g.parse::<Gender>().map_err(|_| SurveyError::MalformedRow {
                line: 2,
                reason: format!("gender must be F or M, found {g:?}"),
            })?);
            let n_raw = records[2].get(c + 1).unwrap().trim();
            counts.push(n_raw.parse::<u32>().map_err(|_| SurveyError::MalformedRow {
                line: 3,
                reason: format!("cannot parse respondent count {n_raw:?}"),
            })?);
        }
        for c in 0..n_cohorts {
            for d in 0..c {
                if societies[c] == societies[d] && genders[c] == genders[d] {
                    return Err(SurveyError::DuplicateCohort {
                        society: societies[c].clone(),
                        gender: genders[c],
                    });
                }
            }
        }

        let mut cohort_values: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); n_cohorts];
        let mut aggregate = BTreeMap::new();
        let mut filled: Vec<bool> = vec![false; schema.len()];

        for (idx, rec) in records.iter().enumerate().skip(3) {
            let line = idx + 1;
            let label = rec.get(0).unwrap().trim().to_string();
            if label == AGGREGATE_LABEL {
                if !aggregate.is_empty() {
                    return Err(SurveyError::DuplicateAttribute { name: label, line });
                }
                for c in 0..n_cohorts {
                    let v = parse_value(rec.get(c + 1).unwrap(), line)?;
                    aggregate.insert((societies[c].clone(), genders[c]), v);
                }
                continue;
            }
            let slot = resolve_attribute(schema, &label, &filled)
                .map_err(|kind| match kind {
                    ResolveError::Unknown => SurveyError::UnknownAttribute { name: label.clone(), line },
                    ResolveError::Exhausted => SurveyError::DuplicateAttribute { name: label.clone(), line },
                })?;
            filled[slot] = true;
            let canonical = schema.attributes()[slot].name.clone();
            for (c, values) in cohort_values.iter_mut().enumerate() {
                let v = parse_value(rec.get(c + 1).unwrap(), line)?;
                values.insert(canonical.clone(), v);
            }
        }

        let cohorts = societies
            .into_iter()
            .zip(genders)
            .zip(counts)
            .zip(cohort_values)
            .map(|(((society, gender), n), values)| CohortObservation::new(society, gender, n, values))
            .collect();

        Ok(Self {
            schema: schema.clone(),
            cohorts,
            stored_aggregate: aggregate,
        })
    }

    /// Canonical CSV serialization: headers, attributes in schema order
    /// (disambiguated names), then the stored aggregate row if present.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut push_row = |label: &str, cells: Vec<String>| {
            out.push_str(label);
            for cell in cells {
                out.push(',');
                out.push_str(&cell);
            }
            out.push('\n');
        };
        push_row("society", self.cohorts.iter().map(|c| c.society.clone()).collect());
        push_row("gender", self.cohorts.iter().map(|c| c.gender.to_string()).collect());
        push_row("N", self.cohorts.iter().map(|c| c.n.to_string()).collect());
        for attr in self.schema.attributes() {
            let cells = self
                .cohorts
                .iter()
                .map(|c| c.value(&attr.name).map_or(String::new(), |v| v.to_string()))
                .collect();
            push_row(&attr.name, cells);
        }
        if !self.stored_aggregate.is_empty() {
            let cells = self
                .cohorts
                .iter()
                .map(|c| {
                    self.stored_aggregate
                        .get(&(c.society.clone(), c.gender))
                        .map_or(String::new(), |v| v.to_string())
                })
                .collect();
            push_row(AGGREGATE_LABEL, cells);
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), SurveyError> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn cohorts(&self) -> &[CohortObservation] {
        &self.cohorts
    }

    pub fn cohort(&self, society: &str, gender: Gender) -> Option<&CohortObservation> {
        self.cohorts
            .iter()
            .find(|c| c.society == society && c.gender == gender)
    }

    /// The published aggregate row, exactly as loaded.
    pub fn stored_aggregate(&self) -> &BTreeMap<(String, Gender), f64> {
        &self.stored_aggregate
    }

    /// A cohort's attribute levels normalized to `[0, 1]`, in schema order.
    pub fn cohort_vector(&self, society: &str, gender: Gender) -> Result<FeatureVector, SurveyError> {
        let cohort = self.cohort(society, gender).ok_or(SurveyError::UnknownCohort {
            society: society.to_string(),
            gender,
        })?;
        let mut components = Vec::with_capacity(self.schema.len());
        for attr in self.schema.attributes() {
            let v = cohort.value(&attr.name).ok_or_else(|| SurveyError::MissingAttribute {
                name: attr.name.clone(),
                society: society.to_string(),
                gender,
            })?;
            components.push(v / 100.0);
        }
        FeatureVector::new(components).map_err(|_| SurveyError::OutOfRange {
            name: "cohort vector".into(),
            society: society.to_string(),
            gender,
            value: f64::NAN,
        })
    }

    /// Checks every type invariant; returns an empty list iff all hold.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for (i, cohort) in self.cohorts.iter().enumerate() {
            for prev in &self.cohorts[..i] {
                if prev.society == cohort.society && prev.gender == cohort.gender {
                    out.push(Diagnostic::DuplicateCohort {
                        society: cohort.society.clone(),
                        gender: cohort.gender,
                    });
                }
            }
            if cohort.n == 0 {
                out.push(Diagnostic::CountNotPositive {
                    society: cohort.society.clone(),
                    gender: cohort.gender,
                });
            }
            for attr in self.schema.attributes() {
                match cohort.value(&attr.name) {
                    None => out.push(Diagnostic::MissingAttribute {
                        society: cohort.society.clone(),
                        gender: cohort.gender,
                        attribute: attr.name.clone(),
                    }),
                    Some(v) => {
                        if !(v.is_finite() && (0.0..=100.0).contains(&v)) {
                            out.push(Diagnostic::OutOfRange {
                                society: cohort.society.clone(),
                                gender: cohort.gender,
                                attribute: attr.name.clone(),
                                value: v,
                            });
                        }
                    }
                }
            }
            for name in cohort.values().keys() {
                if self.schema.index_of(name).is_none() {
                    out.push(Diagnostic::UnknownAttribute {
                        society: cohort.society.clone(),
                        gender: cohort.gender,
                        attribute: name.clone(),
                    });
                }
            }
        }
        out
    }
}

enum ResolveError {
    Unknown,
    Exhausted,
}

/// Maps a file row label to a schema slot. Exact names win; otherwise the
/// label matches suffixed variants (`"name (...)"`) positionally, taking the
/// first variant not yet filled.
fn resolve_attribute(
    schema: &AttributeSchema,
    label: &str,
    filled: &[bool],
) -> Result<usize, ResolveError> {
    if let Some(idx) = schema.index_of(label) {
        return if filled[idx] { Err(ResolveError::Exhausted) } else { Ok(idx) };
    }
    let prefix = format!("{label} (");
    let variants: Vec<usize> = schema
        .attributes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.name.starts_with(&prefix) && a.name.ends_with(')'))
        .map(|(i, _)| i)
        .collect();
    if variants.is_empty() {
        return Err(ResolveError::Unknown);
    }
    variants
        .into_iter()
        .find(|&i| !filled[i])
        .ok_or(ResolveError::Exhausted)
}
