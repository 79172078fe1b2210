//! Canonical entities and the statement hypergraph over them.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::splitter::AtomicStatement;
use crate::tagger::IgLabel;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("duplicate canonical name {0:?}")]
    Duplicate(String),
    #[error("entity {0:?} has no aliases")]
    NoAliases(String),
    #[error("entity {0:?} has an empty alias")]
    EmptyAlias(String),
    #[error("lexicon: {0}")]
    Io(#[from] std::io::Error),
    #[error("lexicon: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Actor,
    Object,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub canonical: String,
    pub kind: EntityKind,
    /// Lemma sequences, compared case-insensitively.
    pub aliases: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LexiconEntry>", into = "Vec<LexiconEntry>")]
pub struct EntityLexicon {
    entries: Vec<LexiconEntry>,
}

impl TryFrom<Vec<LexiconEntry>> for EntityLexicon {
    type Error = LexiconError;

    fn try_from(entries: Vec<LexiconEntry>) -> Result<Self, Self::Error> {
        EntityLexicon::new(entries)
    }
}

impl From<EntityLexicon> for Vec<LexiconEntry> {
    fn from(l: EntityLexicon) -> Self {
        l.entries
    }
}

impl EntityLexicon {
    pub fn new(mut entries: Vec<LexiconEntry>) -> Result<Self, LexiconError> {
        let mut seen = BTreeSet::new();
        for e in &mut entries {
            if !seen.insert(e.canonical.clone()) {
                return Err(LexiconError::Duplicate(e.canonical.clone()));
            }
            if e.aliases.is_empty() {
                return Err(LexiconError::NoAliases(e.canonical.clone()));
            }
            for a in &mut e.aliases {
                if a.is_empty() || a.iter().any(|w| w.is_empty()) {
                    return Err(LexiconError::EmptyAlias(e.canonical.clone()));
                }
                for w in a.iter_mut() {
                    *w = w.to_lowercase();
                }
            }
        }
        Ok(EntityLexicon { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn position(&self, canonical: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.canonical == canonical)
    }
}

/// Labels whose spans are searched for entity mentions.
pub const ENTITY_POSITIONS: [IgLabel; 9] = [
    IgLabel::A,
    IgLabel::AProp,
    IgLabel::BDir,
    IgLabel::BInd,
    IgLabel::BProp,
    IgLabel::E,
    IgLabel::EProp,
    IgLabel::P,
    IgLabel::PProp,
];

/// One occurrence of a lexicon entity inside a component span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub entity: String,
    pub label: IgLabel,
    /// Component described by the span when `label` is a property label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<IgLabel>,
    pub tokens: Vec<usize>,
}

/// Lexicon matches in the entity-bearing spans of `atomic`, in token order.
/// Overlapping matches resolve to the longest, then the earliest.
pub fn match_entities(atomic: &AtomicStatement, lexicon: &EntityLexicon) -> Vec<EntityMention> {
    let mut out = Vec::new();
    for span in atomic
        .spans
        .iter()
        .filter(|s| ENTITY_POSITIONS.contains(&s.label))
    {
        let lemmas: Vec<String> = span.lemmas.iter().map(|l| l.to_lowercase()).collect();
        // (length, start, entry)
        let mut hits: Vec<(usize, usize, usize)> = Vec::new();
        for (e, entry) in lexicon.entries.iter().enumerate() {
            for alias in &entry.aliases {
                let n = alias.len();
                if n > lemmas.len() {
                    continue;
                }
                for start in 0..=lemmas.len() - n {
                    if lemmas[start..start + n] == alias[..] {
                        hits.push((n, start, e));
                    }
                }
            }
        }
        hits.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut taken = vec![false; lemmas.len()];
        let mut chosen = Vec::new();
        for (n, start, e) in hits {
            if taken[start..start + n].iter().any(|&t| t) {
                continue;
            }
            taken[start..start + n].iter_mut().for_each(|t| *t = true);
            chosen.push((start, n, e));
        }
        chosen.sort_unstable();
        out.extend(chosen.into_iter().map(|(start, n, e)| EntityMention {
            entity: lexicon.entries[e].canonical.clone(),
            label: span.label,
            owner: span.owner,
            tokens: span.tokens[start..start + n].to_vec(),
        }));
    }
    out.sort_by_key(|m| m.tokens[0]);
    out
}

/// What one hyperedge stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HyperedgeUnit {
    /// One edge per atomic statement.
    #[default]
    Atomic,
    /// One edge per source statement, merging its atomic statements.
    Statement,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub name: String,
    pub kind: EntityKind,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Hyperedge {
    pub statement: String,
    /// Vertex indices, ascending and non-empty.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityHypergraph {
    vertices: Vec<Vertex>,
    edges: Vec<Hyperedge>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("hyperedge {0:?} is empty")]
    EmptyEdge(String),
    #[error("hyperedge {statement:?} references vertex {vertex} of {n}")]
    UnknownVertex {
        statement: String,
        vertex: usize,
        n: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramMode {
    ActorsOnly,
    ActorsAndObjects,
}

#[derive(Serialize)]
struct EdgeExport<'a> {
    statement: &'a str,
    members: Vec<&'a str>,
}

#[derive(Serialize)]
struct GraphExport<'a> {
    vertices: &'a [Vertex],
    edges: Vec<EdgeExport<'a>>,
}

impl EntityHypergraph {
    /// Edges are sorted and their members deduplicated.
    pub fn new(vertices: Vec<Vertex>, mut edges: Vec<Hyperedge>) -> Result<Self, GraphError> {
        for e in &mut edges {
            e.members.sort_unstable();
            e.members.dedup();
            if e.members.is_empty() {
                return Err(GraphError::EmptyEdge(e.statement.clone()));
            }
            if let Some(&v) = e.members.iter().find(|&&v| v >= vertices.len()) {
                return Err(GraphError::UnknownVertex {
                    statement: e.statement.clone(),
                    vertex: v,
                    n: vertices.len(),
                });
            }
        }
        edges.sort();
        Ok(EntityHypergraph { vertices, edges })
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Hyperedge] {
        &self.edges
    }

    pub fn vertex(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.name == name)
    }

    /// Number of hyperedges incident to each vertex.
    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertices.len()];
        for e in &self.edges {
            for &v in &e.members {
                d[v] += 1;
            }
        }
        d
    }

    pub fn to_json(&self) -> String {
        let export = GraphExport {
            vertices: &self.vertices,
            edges: self
                .edges
                .iter()
                .map(|e| EdgeExport {
                    statement: &e.statement,
                    members: e
                        .members
                        .iter()
                        .map(|&v| self.vertices[v].name.as_str())
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&export).expect("graph serializes")
    }

    /// Bipartite statement/entity edge list.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["statement", "entity", "kind"])
            .expect("in-memory write");
        for e in &self.edges {
            for &v in &e.members {
                let vx = &self.vertices[v];
                let kind = match vx.kind {
                    EntityKind::Actor => "actor",
                    EntityKind::Object => "object",
                };
                w.write_record([e.statement.as_str(), vx.name.as_str(), kind])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

pub fn build_hypergraph(
    atomics: &[AtomicStatement],
    lexicon: &EntityLexicon,
    unit: HyperedgeUnit,
) -> EntityHypergraph {
    let vertices = lexicon
        .entries
        .iter()
        .map(|e| Vertex {
            name: e.canonical.clone(),
            kind: e.kind,
        })
        .collect();
    let mut groups: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for a in atomics {
        let key = match unit {
            HyperedgeUnit::Atomic => a.id.as_str(),
            HyperedgeUnit::Statement => a.parent_statement.as_str(),
        };
        let members = groups.entry(key).or_default();
        for m in match_entities(a, lexicon) {
            members.insert(lexicon.position(&m.entity).expect("matched from lexicon"));
        }
    }
    let edges = groups
        .into_iter()
        .filter(|(_, m)| !m.is_empty())
        .map(|(s, m)| Hyperedge {
            statement: s.to_string(),
            members: m.into_iter().collect(),
        })
        .collect();
    EntityHypergraph::new(vertices, edges).expect("edges built from lexicon")
}

/// Hyperedge sizes and how many edges have each size. In actors-only mode
/// edges are restricted to actor vertices and edges without actors dropped.
pub fn occurrence_histogram(h: &EntityHypergraph, mode: HistogramMode) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for e in &h.edges {
        let size = match mode {
            HistogramMode::ActorsAndObjects => e.members.len(),
            HistogramMode::ActorsOnly => e
                .members
                .iter()
                .filter(|&&v| h.vertices[v].kind == EntityKind::Actor)
                .count(),
        };
        if size > 0 {
            *out.entry(size).or_insert(0) += 1;
        }
    }
    out
}
