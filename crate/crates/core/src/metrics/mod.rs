//! Visibility, hypergraph closeness centrality and the visibility/centrality
//! quadrant report.

mod centrality;
mod quadrant;

use std::collections::BTreeMap;
use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use centrality::{all_closeness, closeness_centrality, s_distances};
pub use quadrant::{quadrant, Quadrant, QuadrantPoint};

use crate::graph::{match_entities, EntityHypergraph, EntityKind, EntityLexicon};
use crate::splitter::AtomicStatement;
use crate::tagger::IgLabel;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("visibility needs at least one statement")]
    NoStatements,
    #[error("no weight for visibility class {0}")]
    UnknownClass(u8),
    #[error("weights must be positive and strictly decreasing from class 6 to class 1")]
    BadWeights,
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
    #[error("s must be at least 1")]
    ZeroS,
    #[error("quadrants need at least two actors, got {0}")]
    TooFewActors(usize),
    #[error("weights file: {0}")]
    Io(#[from] std::io::Error),
    #[error("weights file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Visibility class (6 highest, 1 lowest) of an entity found in a span
/// with `label`, where `owner` is the component a property span describes.
pub fn visibility_class(label: IgLabel, owner: Option<IgLabel>) -> Option<u8> {
    use IgLabel::*;
    match label {
        A | E => Some(6),
        BDir | P => Some(5),
        BInd => Some(4),
        AProp | EProp => Some(3),
        PProp => Some(2),
        BProp => match owner {
            Some(BDir) => Some(2),
            _ => Some(1),
        },
        _ => Option::None,
    }
}

/// Integer weight per visibility class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<u8, i64>", into = "BTreeMap<u8, i64>")]
pub struct VisibilityWeights {
    weights: BTreeMap<u8, i64>,
}

impl TryFrom<BTreeMap<u8, i64>> for VisibilityWeights {
    type Error = MetricsError;

    fn try_from(weights: BTreeMap<u8, i64>) -> Result<Self, Self::Error> {
        VisibilityWeights::new(weights)
    }
}

impl From<VisibilityWeights> for BTreeMap<u8, i64> {
    fn from(w: VisibilityWeights) -> Self {
        w.weights
    }
}

impl Default for VisibilityWeights {
    fn default() -> Self {
        VisibilityWeights {
            weights: (1..=6).map(|c| (c, i64::from(c))).collect(),
        }
    }
}

impl VisibilityWeights {
    pub fn new(weights: BTreeMap<u8, i64>) -> Result<Self, MetricsError> {
        let keys: Vec<u8> = weights.keys().copied().collect();
        let values: Vec<i64> = weights.values().copied().collect();
        if keys != [1, 2, 3, 4, 5, 6] || values[0] <= 0 || values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MetricsError::BadWeights);
        }
        Ok(VisibilityWeights { weights })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MetricsError> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    pub fn weight(&self, class: u8) -> Option<i64> {
        self.weights.get(&class).copied()
    }

    pub fn scaled(&self, factor: i64) -> Result<Self, MetricsError> {
        VisibilityWeights::new(
            self.weights
                .iter()
                .map(|(&c, &w)| (c, w * factor))
                .collect(),
        )
    }
}

/// Weighted occurrence count divided by the number of statements.
pub fn visibility(
    counts: &BTreeMap<u8, u64>,
    statements: u64,
    weights: &VisibilityWeights,
) -> Result<Ratio<i64>, MetricsError> {
    if statements == 0 {
        return Err(MetricsError::NoStatements);
    }
    let mut sum = 0i64;
    for (&class, &n) in counts {
        let w = weights
            .weight(class)
            .ok_or(MetricsError::UnknownClass(class))?;
        sum += w * n as i64;
    }
    Ok(Ratio::new(sum, statements as i64))
}

/// Which count divides the weighted occurrences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Denominator {
    #[default]
    Atomic,
    /// Distinct parent statements.
    Statement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    #[serde(default)]
    pub weights: VisibilityWeights,
    /// Minimum shared vertices for two hyperedges to be adjacent.
    #[serde(default = "one")]
    pub s: usize,
    #[serde(default)]
    pub denominator: Denominator,
}

fn one() -> usize {
    1
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            weights: VisibilityWeights::default(),
            s: 1,
            denominator: Denominator::Atomic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorMetrics {
    pub entity: String,
    pub kind: EntityKind,
    /// Mentions per visibility class.
    pub occurrences: BTreeMap<u8, u64>,
    /// Exact value as `numerator/denominator`.
    pub visibility_exact: String,
    pub visibility: f64,
    pub centrality: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrant: Option<Quadrant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub entity: String,
    pub kind: EntityKind,
    pub visibility: f64,
    pub centrality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub statements: u64,
    /// Sorted by visibility descending, then name.
    pub rows: Vec<ActorMetrics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl MetricsReport {
    pub fn row(&self, entity: &str) -> Option<&ActorMetrics> {
        self.rows.iter().find(|r| r.entity == entity)
    }

    pub fn scatter(&self) -> Vec<ScatterPoint> {
        self.rows
            .iter()
            .map(|r| ScatterPoint {
                entity: r.entity.clone(),
                kind: r.kind,
                visibility: r.visibility,
                centrality: r.centrality,
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "entity",
            "kind",
            "visibility",
            "centrality",
            "quadrant",
            "residual",
        ])
        .expect("in-memory write");
        for r in &self.rows {
            let kind = match r.kind {
                EntityKind::Actor => "actor",
                EntityKind::Object => "object",
            };
            w.write_record([
                r.entity.clone(),
                kind.to_string(),
                r.visibility.to_string(),
                r.centrality.to_string(),
                r.quadrant
                    .map(|q| q.as_str().to_string())
                    .unwrap_or_default(),
                r.residual.map(|x| x.to_string()).unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

/// Per-entity mention counts by visibility class.
pub fn occurrence_counts(
    atomics: &[AtomicStatement],
    lexicon: &EntityLexicon,
) -> BTreeMap<String, BTreeMap<u8, u64>> {
    let mut out: BTreeMap<String, BTreeMap<u8, u64>> = lexicon
        .entries()
        .iter()
        .map(|e| (e.canonical.clone(), BTreeMap::new()))
        .collect();
    for a in atomics {
        for m in match_entities(a, lexicon) {
            if let Some(c) = visibility_class(m.label, m.owner) {
                *out.get_mut(&m.entity)
                    .expect("matched from lexicon")
                    .entry(c)
                    .or_insert(0) += 1;
            }
        }
    }
    out
}

/// One row per vertex of `h`. An empty corpus yields all-zero rows.
pub fn metrics_report(
    h: &EntityHypergraph,
    atomics: &[AtomicStatement],
    lexicon: &EntityLexicon,
    cfg: &MetricsConfig,
) -> Result<MetricsReport, MetricsError> {
    let statements = match cfg.denominator {
        Denominator::Atomic => atomics.len() as u64,
        Denominator::Statement => atomics
            .iter()
            .map(|a| a.parent_statement.as_str())
            .collect::<std::collections::BTreeSet<_>>()
            .len() as u64,
    };
    let counts = occurrence_counts(atomics, lexicon);
    let closeness = all_closeness(h, cfg.s)?;
    let mut rows = Vec::with_capacity(h.vertices().len());
    for (v, vx) in h.vertices().iter().enumerate() {
        let occ = counts.get(&vx.name).cloned().unwrap_or_default();
        let exact = if statements == 0 {
            Ratio::from_integer(0)
        } else {
            visibility(&occ, statements, &cfg.weights)?
        };
        rows.push(ActorMetrics {
            entity: vx.name.clone(),
            kind: vx.kind,
            occurrences: occ,
            visibility_exact: exact.to_string(),
            visibility: *exact.numer() as f64 / *exact.denom() as f64,
            centrality: closeness[v],
            quadrant: None,
            residual: None,
        });
    }
    rows.sort_by(|a, b| {
        b.visibility
            .total_cmp(&a.visibility)
            .then_with(|| a.entity.cmp(&b.entity))
    });

    let mut diagnostics = Vec::new();
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.visibility, r.centrality)).collect();
    match quadrant(&points) {
        Ok(qs) => {
            for (r, q) in rows.iter_mut().zip(qs) {
                r.quadrant = Some(q.quadrant);
                r.residual = Some(q.residual);
            }
        }
        Err(e) => diagnostics.push(e.to_string()),
    }
    Ok(MetricsReport {
        statements,
        rows,
        diagnostics,
    })
}
