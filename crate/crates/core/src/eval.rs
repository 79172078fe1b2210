//! Word-level precision, recall and F1 of predicted IG labels against gold.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::StatementType;
use crate::tagger::{IgLabel, TaggedStatement};

/// Evaluation label: property variants fold onto their base and both
/// object kinds onto `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MergedLabel {
    A,
    B,
    D,
    I,
    #[serde(rename = "CTX")]
    Ctx,
    E,
    P,
    F,
    M,
    #[serde(rename = "NONE")]
    None,
}

impl MergedLabel {
    pub fn name(self) -> &'static str {
        match self {
            MergedLabel::A => "Attribute",
            MergedLabel::B => "Object",
            MergedLabel::D => "Deontic",
            MergedLabel::I => "Aim",
            MergedLabel::Ctx => "Context",
            MergedLabel::E => "Entity",
            MergedLabel::P => "Property",
            MergedLabel::F => "Function",
            MergedLabel::M => "Modal",
            MergedLabel::None => "None",
        }
    }

    /// Rows reported for a layer, in table order.
    pub fn components(layer: StatementType) -> &'static [MergedLabel] {
        use MergedLabel::*;
        match layer {
            StatementType::Regulative => &[A, B, D, I, Ctx],
            StatementType::Constitutive => &[E, P, F, M, Ctx],
        }
    }
}

impl From<IgLabel> for MergedLabel {
    fn from(l: IgLabel) -> Self {
        match l {
            IgLabel::A | IgLabel::AProp => MergedLabel::A,
            IgLabel::BDir | IgLabel::BInd | IgLabel::BProp => MergedLabel::B,
            IgLabel::D => MergedLabel::D,
            IgLabel::I => MergedLabel::I,
            IgLabel::Ctx => MergedLabel::Ctx,
            IgLabel::E | IgLabel::EProp => MergedLabel::E,
            IgLabel::P | IgLabel::PProp => MergedLabel::P,
            IgLabel::F => MergedLabel::F,
            IgLabel::M => MergedLabel::M,
            IgLabel::None => MergedLabel::None,
        }
    }
}

/// Label merging on the tag vocabulary itself: `-prop` variants become
/// their base label and both object kinds become `B-dir`.
pub fn merge_labels(labels: &[IgLabel]) -> Vec<IgLabel> {
    labels
        .iter()
        .map(|&l| match l {
            IgLabel::AProp => IgLabel::A,
            IgLabel::BInd | IgLabel::BProp => IgLabel::BDir,
            IgLabel::EProp => IgLabel::E,
            IgLabel::PProp => IgLabel::P,
            other => other,
        })
        .collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlignmentError {
    #[error("statement {0:?} is missing from the predictions")]
    MissingPrediction(String),
    #[error("statement {0:?} is predicted but not in the gold corpus")]
    UnexpectedPrediction(String),
    #[error("statement {0:?} appears more than once")]
    Duplicate(String),
    #[error("statement {id:?}: token {index} is {pred:?} in predictions but {gold:?} in gold")]
    Token {
        id: String,
        index: usize,
        pred: String,
        gold: String,
    },
    #[error("statement {id:?}: {pred} predicted tokens, {gold} gold tokens")]
    Length {
        id: String,
        pred: usize,
        gold: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p > 0.0 && r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentScore {
    pub component: MergedLabel,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    #[serde(flatten)]
    pub scores: Scores,
    /// False when the component occurs in neither corpus; such rows score
    /// 1.0 and stay out of the overall average.
    pub present: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub layer: StatementType,
    pub statements: usize,
    pub tokens: u64,
    pub rows: Vec<ComponentScore>,
    pub overall: Scores,
    /// Gold label, then predicted label, then word count.
    pub confusion: BTreeMap<MergedLabel, BTreeMap<MergedLabel, u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// How the overall row averages components.
    pub averaging: String,
    pub layers: Vec<LayerReport>,
}

impl EvalReport {
    pub fn layer(&self, layer: StatementType) -> Option<&LayerReport> {
        self.layers.iter().find(|l| l.layer == layer)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table: layer, component, F1, precision, recall.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<13} {:<10} {:>8} {:>9} {:>7}",
            "Layer", "Component", "F1", "Precision", "Recall"
        );
        for l in &self.layers {
            let rows = l
                .rows
                .iter()
                .map(|r| (r.component.name(), r.scores))
                .chain([("Overall", l.overall)]);
            for (name, s) in rows {
                let _ = writeln!(
                    out,
                    "{:<13} {:<10} {:>8.2} {:>9.2} {:>7.2}",
                    l.layer.as_str(),
                    name,
                    s.f1,
                    s.precision,
                    s.recall
                );
            }
        }
        out
    }
}

/// Pair each gold statement with the prediction of the same id and check
/// that both cover the same tokens.
fn align<'a>(
    pred: &'a [TaggedStatement],
    gold: &'a [TaggedStatement],
) -> Result<Vec<(&'a TaggedStatement, &'a TaggedStatement)>, AlignmentError> {
    let mut by_id: BTreeMap<&str, &TaggedStatement> = BTreeMap::new();
    for p in pred {
        if by_id.insert(&p.id, p).is_some() {
            return Err(AlignmentError::Duplicate(p.id.clone()));
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut pairs = Vec::with_capacity(gold.len());
    for g in gold {
        if !seen.insert(g.id.as_str()) {
            return Err(AlignmentError::Duplicate(g.id.clone()));
        }
        let p = by_id
            .remove(g.id.as_str())
            .ok_or_else(|| AlignmentError::MissingPrediction(g.id.clone()))?;
        if p.labels.len() != g.labels.len() || p.tree.len() != g.tree.len() {
            return Err(AlignmentError::Length {
                id: g.id.clone(),
                pred: p.labels.len(),
                gold: g.labels.len(),
            });
        }
        for (pt, gt) in p.tree.tokens().iter().zip(g.tree.tokens()) {
            if pt.surface != gt.surface {
                return Err(AlignmentError::Token {
                    id: g.id.clone(),
                    index: gt.index,
                    pred: pt.surface.clone(),
                    gold: gt.surface.clone(),
                });
            }
        }
        pairs.push((p, g));
    }
    if let Some((id, _)) = by_id.into_iter().next() {
        return Err(AlignmentError::UnexpectedPrediction(id.to_string()));
    }
    Ok(pairs)
}

fn layer_report(
    layer: StatementType,
    pairs: &[(&TaggedStatement, &TaggedStatement)],
) -> LayerReport {
    let mut confusion: BTreeMap<MergedLabel, BTreeMap<MergedLabel, u64>> = BTreeMap::new();
    let mut statements = 0;
    let mut tokens = 0;
    for (p, g) in pairs.iter().filter(|(_, g)| g.stype == layer) {
        statements += 1;
        for (&pl, &gl) in p.labels.iter().zip(&g.labels) {
            tokens += 1;
            *confusion
                .entry(gl.into())
                .or_default()
                .entry(pl.into())
                .or_insert(0) += 1;
        }
    }
    let count = |gold: Option<MergedLabel>, pred: Option<MergedLabel>| -> u64 {
        confusion
            .iter()
            .filter(|(g, _)| gold.is_none_or(|x| x == **g))
            .flat_map(|(_, row)| row.iter())
            .filter(|(p, _)| pred.is_none_or(|x| x == **p))
            .map(|(_, n)| n)
            .sum()
    };
    let rows: Vec<ComponentScore> = MergedLabel::components(layer)
        .iter()
        .map(|&c| {
            let tp = count(Some(c), Some(c));
            let fp = count(None, Some(c)) - tp;
            let fn_ = count(Some(c), None) - tp;
            let present = tp + fp + fn_ > 0;
            let (precision, recall) = if present {
                let ratio = |num: u64, den: u64| {
                    if den == 0 {
                        0.0
                    } else {
                        num as f64 / den as f64
                    }
                };
                (ratio(tp, tp + fp), ratio(tp, tp + fn_))
            } else {
                (1.0, 1.0)
            };
            ComponentScore {
                component: c,
                tp,
                fp,
                fn_,
                scores: Scores {
                    precision,
                    recall,
                    f1: harmonic(precision, recall),
                },
                present,
            }
        })
        .collect();
    let counted: Vec<&ComponentScore> = rows.iter().filter(|r| r.present).collect();
    let overall = if counted.is_empty() {
        Scores::default()
    } else {
        let n = counted.len() as f64;
        let precision = counted.iter().map(|r| r.scores.precision).sum::<f64>() / n;
        let recall = counted.iter().map(|r| r.scores.recall).sum::<f64>() / n;
        Scores {
            precision,
            recall,
            f1: harmonic(precision, recall),
        }
    };
    LayerReport {
        layer,
        statements,
        tokens,
        rows,
        overall,
        confusion,
    }
}

/// Score `pred` against `gold`, statements paired by id and split into
/// layers by the gold statement type. With `layer` set only that layer is
/// reported.
pub fn component_prf(
    pred: &[TaggedStatement],
    gold: &[TaggedStatement],
    layer: Option<StatementType>,
) -> Result<EvalReport, AlignmentError> {
    let pairs = align(pred, gold)?;
    let layers = [StatementType::Regulative, StatementType::Constitutive]
        .into_iter()
        .filter(|l| layer.is_none_or(|x| x == *l))
        .map(|l| layer_report(l, &pairs))
        .collect();
    Ok(EvalReport {
        averaging: "macro".into(),
        layers,
    })
}
