//! HDI-colored cluster maps.
//!
//! Agents are placed on the canvas anti-diagonal by transculturality score:
//! the highest score sits in the upper-left corner and the lowest in the
//! lower-right, with a small seeded jitter so coincident scores stay
//! visible. Glyph color encodes the agent's society through its HDI bin
//! and glyph radius grows with the size of the agent's cluster.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;
use thiserror::Error;

use crate::cluster::Clustering;
use crate::factor::derive_stream_seed;
use crate::population::Population;

pub const CANVAS_WIDTH: f64 = 800.0;
pub const CANVAS_HEIGHT: f64 = 600.0;

/// Fraction of the canvas spanned by the score axis; the rest absorbs
/// jitter and glyph radii.
const PLACEMENT_SPAN: f64 = 0.8;
const JITTER_SPAN: f64 = 0.02;
const RADIUS_SPAN: f64 = 0.1;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("no HDI value configured for society {0:?}")]
    MissingHdi(String),
    #[error("HDI values must lie in [0, 1]: {society:?} has {value}")]
    InvalidHdi { society: String, value: f64 },
    #[error("color ramp thresholds must be strictly increasing within [0, 1]")]
    InvalidRamp,
    #[error("score/society count {got} does not match agent count {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("HDI config parse error: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Society-to-HDI mapping plus the color bins over the HDI range.
#[derive(Debug, Clone, PartialEq)]
pub struct HdiConfig {
    hdi: BTreeMap<String, f64>,
    ramp: Vec<(f64, String)>,
}

#[derive(Deserialize)]
struct HdiFile {
    hdi: BTreeMap<String, f64>,
    #[serde(rename = "bin")]
    bins: Vec<HdiBin>,
}

#[derive(Deserialize)]
struct HdiBin {
    threshold: f64,
    color: String,
}

const DEFAULT_HDI_TOML: &str = include_str!("../data/hdi.toml");

impl HdiConfig {
    pub fn new(hdi: BTreeMap<String, f64>, ramp: Vec<(f64, String)>) -> Result<Self, MapError> {
        for (society, &value) in &hdi {
            if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
                return Err(MapError::InvalidHdi { society: society.clone(), value });
            }
        }
        if ramp.is_empty() {
            return Err(MapError::InvalidRamp);
        }
        for pair in ramp.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(MapError::InvalidRamp);
            }
        }
        if ramp.iter().any(|(t, _)| !(t.is_finite() && (0.0..=1.0).contains(t))) {
            return Err(MapError::InvalidRamp);
        }
        Ok(Self { hdi, ramp })
    }

    pub fn from_toml(text: &str) -> Result<Self, MapError> {
        let file: HdiFile = toml::from_str(text)?;
        Self::new(file.hdi, file.bins.into_iter().map(|b| (b.threshold, b.color)).collect())
    }

    /// The shipped defaults for the four bundled societies.
    pub fn bundled() -> Self {
        Self::from_toml(DEFAULT_HDI_TOML).expect("bundled HDI config is valid")
    }

    pub fn hdi(&self, society: &str) -> Option<f64> {
        self.hdi.get(society).copied()
    }

    /// Color of the bin containing `value`: the entry with the largest
    /// threshold at or below it (the first bin catches anything lower).
    pub fn color_for(&self, value: f64) -> &str {
        self.ramp
            .iter()
            .rev()
            .find(|(t, _)| *t <= value)
            .map(|(_, c)| c.as_str())
            .unwrap_or(&self.ramp[0].1)
    }
}

/// One placed agent glyph.
#[derive(Debug, Clone, PartialEq)]
pub struct Glyph {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub color: String,
    pub cluster: usize,
    pub score: f64,
}

/// The laid-out figure; `to_svg` serializes it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMap {
    pub glyphs: Vec<Glyph>,
    pub width: f64,
    pub height: f64,
}

/// Deterministic per-agent jitter in [0, 1).
fn jitter(agent: usize, axis: u64) -> f64 {
    let bits = derive_stream_seed(0x6a69_7474_6572, (agent as u64) << 1 | axis);
    (bits >> 11) as f64 / (1u64 << 53) as f64
}

/// Lays out the cluster map and renders it as an SVG 1.1 document.
///
/// Scores are min-max normalized over the population, so the best-scoring
/// agent anchors the upper-left corner and the worst the lower-right; when
/// all scores coincide (or there is a single agent) everything sits at the
/// upper-left.
pub fn render_cluster_map(
    clustering: &Clustering,
    scores: &[f64],
    population: &Population,
    hdi: &HdiConfig,
) -> Result<(ClusterMap, String), MapError> {
    let n = population.len();
    if scores.len() != n || clustering.assignments.len() != n {
        return Err(MapError::LengthMismatch {
            got: scores.len().min(clustering.assignments.len()),
            expected: n,
        });
    }
    let sizes = clustering.cluster_sizes();
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;

    let mut glyphs = Vec::with_capacity(n);
    for (i, agent) in population.agents().iter().enumerate() {
        let value = hdi
            .hdi(&agent.society)
            .ok_or_else(|| MapError::MissingHdi(agent.society.clone()))?;
        let normalized = if range > 0.0 { (scores[i] - min) / range } else { 1.0 };
        let x = (1.0 - normalized) * CANVAS_WIDTH * PLACEMENT_SPAN
            + jitter(i, 0) * CANVAS_WIDTH * JITTER_SPAN;
        let y = (1.0 - normalized) * CANVAS_HEIGHT * PLACEMENT_SPAN
            + jitter(i, 1) * CANVAS_HEIGHT * JITTER_SPAN;
        let cluster = clustering.assignments[i];
        let radius =
            sizes[cluster] as f64 / n as f64 * RADIUS_SPAN * CANVAS_WIDTH.min(CANVAS_HEIGHT);
        glyphs.push(Glyph {
            x,
            y,
            radius,
            color: hdi.color_for(value).to_string(),
            cluster,
            score: scores[i],
        });
    }
    let map = ClusterMap { glyphs, width: CANVAS_WIDTH, height: CANVAS_HEIGHT };
    let svg = map.to_svg();
    Ok((map, svg))
}

fn escape_xml(raw: &str) -> String {
    raw.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

impl ClusterMap {
    /// Serializes the map as standalone SVG 1.1. Numbers use fixed
    /// precision so identical maps yield byte-identical documents.
    pub fn to_svg(&self) -> String {
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
            w = self.width,
            h = self.height
        );
        let _ = writeln!(
            out,
            "  <rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>",
            self.width, self.height
        );
        for (i, g) in self.glyphs.iter().enumerate() {
            let _ = writeln!(
                out,
                "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"{}\" fill-opacity=\"0.7\"><title>agent {} cluster {} score {:.4}</title></circle>",
                g.x,
                g.y,
                g.radius,
                escape_xml(&g.color),
                i,
                g.cluster,
                g.score
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::cluster_kmedoids;
    use crate::population::synthesize_population;
    use crate::similarity::{similarity_matrix, WeightVector};
    use crate::survey::SurveyTable;

    fn small_population(size: usize, seed: u64) -> Population {
        synthesize_population(&SurveyTable::bundled(), size, seed).unwrap()
    }

    fn trivial_clustering(n: usize) -> Clustering {
        Clustering { k: 1, assignments: vec![0; n], medoids: vec![0], objective: 0.0 }
    }

    #[test]
    fn default_bins_separate_the_four_societies() {
        let hdi = HdiConfig::bundled();
        let colors: std::collections::BTreeSet<_> = ["Sample 1", "Sample 2", "Sample 3", "Sample 4"]
            .iter()
            .map(|s| hdi.color_for(hdi.hdi(s).unwrap()))
            .collect();
        assert_eq!(colors.len(), 4);
    }

    #[test]
    fn single_agent_sits_in_upper_left_corner() {
        let pop = small_population(1, 3);
        let (map, _) =
            render_cluster_map(&trivial_clustering(1), &[0.37], &pop, &HdiConfig::bundled()).unwrap();
        let g = &map.glyphs[0];
        assert!(g.x <= CANVAS_WIDTH * JITTER_SPAN);
        assert!(g.y <= CANVAS_HEIGHT * JITTER_SPAN);
    }

    #[test]
    fn placement_is_monotone_in_score() {
        let pop = small_population(2, 4);
        let clustering = Clustering {
            k: 2,
            assignments: vec![0, 1],
            medoids: vec![0, 1],
            objective: 0.0,
        };
        let (map, _) =
            render_cluster_map(&clustering, &[0.9, 0.1], &pop, &HdiConfig::bundled()).unwrap();
        assert!(map.glyphs[0].x < map.glyphs[1].x);
        assert!(map.glyphs[0].y < map.glyphs[1].y);
    }

    #[test]
    fn glyphs_stay_inside_canvas_with_positive_radius() {
        let pop = small_population(40, 5);
        let weights = WeightVector::new(pop.schema().weights()).unwrap();
        let matrix = similarity_matrix(&pop, &weights).unwrap();
        let clustering = cluster_kmedoids(&matrix, 4, 0).unwrap();
        let scores: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
        let (map, svg) =
            render_cluster_map(&clustering, &scores, &pop, &HdiConfig::bundled()).unwrap();
        for g in &map.glyphs {
            assert!((0.0..=CANVAS_WIDTH).contains(&g.x));
            assert!((0.0..=CANVAS_HEIGHT).contains(&g.y));
            assert!(g.radius > 0.0);
        }
        assert!(svg.contains("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\""));
    }

    #[test]
    fn missing_hdi_is_reported() {
        let pop = small_population(2, 6);
        let hdi = HdiConfig::new(
            BTreeMap::from([("Somewhere Else".to_string(), 0.5)]),
            vec![(0.0, "#000000".to_string())],
        )
        .unwrap();
        let err = render_cluster_map(&trivial_clustering(2), &[0.5, 0.6], &pop, &hdi).unwrap_err();
        assert!(matches!(err, MapError::MissingHdi(s) if s.starts_with("Sample")));
    }

    #[test]
    fn rerender_is_byte_identical() {
        let pop = small_population(10, 7);
        let clustering = trivial_clustering(10);
        let scores: Vec<f64> = (0..10).map(|i| 0.1 + 0.07 * i as f64).collect();
        let (_, a) = render_cluster_map(&clustering, &scores, &pop, &HdiConfig::bundled()).unwrap();
        let (_, b) = render_cluster_map(&clustering, &scores, &pop, &HdiConfig::bundled()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ramp_validation() {
        assert!(matches!(
            HdiConfig::new(BTreeMap::new(), vec![]),
            Err(MapError::InvalidRamp)
        ));
        assert!(matches!(
            HdiConfig::new(
                BTreeMap::new(),
                vec![(0.5, "#fff".into()), (0.5, "#000".into())]
            ),
            Err(MapError::InvalidRamp)
        ));
        assert!(matches!(
            HdiConfig::new(BTreeMap::from([("X".to_string(), 1.5)]), vec![(0.0, "#fff".into())]),
            Err(MapError::InvalidHdi { .. })
        ));
    }
}
