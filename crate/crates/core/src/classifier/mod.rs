//! Statement-type and legal-act classifiers: TF-IDF n-gram features fed to
//! a random forest.

mod forest;
mod tfidf;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forest::{train_forest, DecisionTree, ForestModel, ForestParams, Node};
pub use tfidf::{smoothed_idf, TermSelection, TfidfModel};

use crate::conllu::Document;
use crate::text::NgramRangeError;

/// Vocabulary size for statement typing.
pub const STATEMENT_FEATURES: usize = 70;
/// Vocabulary size for the legal-act document filter.
pub const LEGAL_ACT_FEATURES: usize = 80;
/// n-gram range used by both models.
pub const NGRAM_RANGE: (usize, usize) = (1, 3);

pub const LEGAL_ACT: &str = "legal_act";
pub const NOT_LEGAL_ACT: &str = "other";

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error(transparent)]
    Ngram(#[from] NgramRangeError),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("feature count must be at least 1")]
    ZeroFeatures,
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("row {row} has {found} features, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("split feature {feature} is outside the {k}-term vocabulary")]
    FeatureOutOfRange { feature: usize, k: usize },
    #[error("model classes {found:?} do not match expected {expected:?}")]
    Classes {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("unknown statement type {0:?}")]
    UnknownType(String),
    #[error("model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatementType {
    Regulative,
    Constitutive,
}

impl StatementType {
    pub fn as_str(self) -> &'static str {
        match self {
            StatementType::Regulative => "regulative",
            StatementType::Constitutive => "constitutive",
        }
    }
}

impl fmt::Display for StatementType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StatementType {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "regulative" => Ok(StatementType::Regulative),
            "constitutive" => Ok(StatementType::Constitutive),
            _ => Err(ClassifierError::UnknownType(s.to_string())),
        }
    }
}

/// Which task a persisted model solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    StatementType,
    LegalAct,
}

impl ModelKind {
    fn classes(self) -> [&'static str; 2] {
        match self {
            ModelKind::StatementType => ["constitutive", "regulative"],
            ModelKind::LegalAct => [LEGAL_ACT, NOT_LEGAL_ACT],
        }
    }
}

/// A fitted vectorizer and forest, persisted as a single JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct TextModel {
    kind: ModelKind,
    tfidf: TfidfModel,
    forest: ForestModel,
}

#[derive(Deserialize)]
struct RawModel {
    kind: ModelKind,
    tfidf: TfidfModel,
    forest: ForestModel,
}

impl TryFrom<RawModel> for TextModel {
    type Error = ClassifierError;

    fn try_from(r: RawModel) -> Result<Self, Self::Error> {
        TextModel::new(r.kind, r.tfidf, r.forest)
    }
}

/// Training settings shared by both models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub k: usize,
    pub ngram_range: (usize, usize),
    pub forest: ForestParams,
    pub seed: u64,
}

impl TrainConfig {
    pub fn statement_type(seed: u64) -> Self {
        TrainConfig {
            k: STATEMENT_FEATURES,
            ngram_range: NGRAM_RANGE,
            forest: ForestParams::default(),
            seed,
        }
    }

    pub fn legal_act(seed: u64) -> Self {
        TrainConfig {
            k: LEGAL_ACT_FEATURES,
            ..Self::statement_type(seed)
        }
    }
}

impl TextModel {
    pub fn new(
        kind: ModelKind,
        tfidf: TfidfModel,
        forest: ForestModel,
    ) -> Result<Self, ClassifierError> {
        forest.check_features(tfidf.k())?;
        let allowed = kind.classes();
        if forest
            .classes()
            .iter()
            .any(|c| !allowed.contains(&c.as_str()))
        {
            return Err(ClassifierError::Classes {
                expected: allowed.iter().map(|s| s.to_string()).collect(),
                found: forest.classes().to_vec(),
            });
        }
        Ok(TextModel {
            kind,
            tfidf,
            forest,
        })
    }

    fn train(
        kind: ModelKind,
        texts: &[&str],
        labels: &[&str],
        config: &TrainConfig,
    ) -> Result<Self, ClassifierError> {
        let (n_min, n_max) = config.ngram_range;
        let tfidf = TfidfModel::fit_supervised(texts, labels, config.k, n_min, n_max)?;
        let x: Vec<Vec<f64>> = texts.iter().map(|t| tfidf.vectorize(t)).collect();
        let forest = train_forest(&x, labels, &config.forest, config.seed)?;
        TextModel::new(kind, tfidf, forest)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn tfidf(&self) -> &TfidfModel {
        &self.tfidf
    }

    pub fn forest(&self) -> &ForestModel {
        &self.forest
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifierError> {
        let bytes = std::fs::read(path)?;
        Ok(serde_json::from_slice(&bytes)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    /// Vote fraction for `class`, or 0 if the forest never saw it.
    fn vote_share(&self, text: &str, class: &str) -> (f64, f64) {
        let votes = self.forest.votes(&self.tfidf.vectorize(text));
        let total: usize = votes.iter().sum();
        let of = |name: &str| {
            self.forest
                .classes()
                .iter()
                .position(|c| c == name)
                .map_or(0, |i| votes[i])
        };
        let yes = of(class) as f64 / total.max(1) as f64;
        let other = (total - of(class)) as f64 / total.max(1) as f64;
        (yes, other)
    }
}

/// Regulative-vs-constitutive model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StatementModel(TextModel);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub stype: StatementType,
    /// Fraction of trees voting for `stype`.
    pub confidence: f64,
}

impl StatementModel {
    pub fn train(
        texts: &[&str],
        labels: &[StatementType],
        config: &TrainConfig,
    ) -> Result<Self, ClassifierError> {
        let names: Vec<&str> = labels.iter().map(|l| l.as_str()).collect();
        Ok(StatementModel(TextModel::train(
            ModelKind::StatementType,
            texts,
            &names,
            config,
        )?))
    }

    pub fn from_model(model: TextModel) -> Result<Self, ClassifierError> {
        match model.kind() {
            ModelKind::StatementType => Ok(StatementModel(model)),
            ModelKind::LegalAct => Err(ClassifierError::Classes {
                expected: ModelKind::StatementType
                    .classes()
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
                found: model.forest().classes().to_vec(),
            }),
        }
    }

    pub fn model(&self) -> &TextModel {
        &self.0
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifierError> {
        Self::from_model(TextModel::load(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
        self.0.save(path)
    }
}

/// Classify a statement. An even vote resolves to constitutive.
pub fn classify_statement(text: &str, model: &StatementModel) -> Classification {
    let (reg, con) = model.0.vote_share(text, StatementType::Regulative.as_str());
    if reg > con {
        Classification {
            stype: StatementType::Regulative,
            confidence: reg,
        }
    } else {
        Classification {
            stype: StatementType::Constitutive,
            confidence: con,
        }
    }
}

/// Legal-act vs other document model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LegalActModel(TextModel);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegalActPrediction {
    pub is_legal_act: bool,
    pub confidence: f64,
}

impl LegalActModel {
    pub fn train(
        texts: &[&str],
        is_legal_act: &[bool],
        config: &TrainConfig,
    ) -> Result<Self, ClassifierError> {
        let names: Vec<&str> = is_legal_act
            .iter()
            .map(|&b| if b { LEGAL_ACT } else { NOT_LEGAL_ACT })
            .collect();
        Ok(LegalActModel(TextModel::train(
            ModelKind::LegalAct,
            texts,
            &names,
            config,
        )?))
    }

    pub fn from_model(model: TextModel) -> Result<Self, ClassifierError> {
        match model.kind() {
            ModelKind::LegalAct => Ok(LegalActModel(model)),
            ModelKind::StatementType => Err(ClassifierError::Classes {
                expected: vec![LEGAL_ACT.into(), NOT_LEGAL_ACT.into()],
                found: model.forest().classes().to_vec(),
            }),
        }
    }

    pub fn model(&self) -> &TextModel {
        &self.0
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifierError> {
        Self::from_model(TextModel::load(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
        self.0.save(path)
    }
}

/// Predict whether a document is a legal act. Empty documents are not, with
/// zero confidence; an even vote is also a "no".
pub fn classify_legal_act(doc: &Document, model: &LegalActModel) -> LegalActPrediction {
    let text = doc.text();
    if text.trim().is_empty() {
        return LegalActPrediction {
            is_legal_act: false,
            confidence: 0.0,
        };
    }
    let (yes, no) = model.0.vote_share(&text, LEGAL_ACT);
    if yes > no {
        LegalActPrediction {
            is_legal_act: true,
            confidence: yes,
        }
    } else {
        LegalActPrediction {
            is_legal_act: false,
            confidence: no,
        }
    }
}

/// Metadata keys written by [`annotate_legal_act`].
pub const META_LEGAL_ACT: &str = "legal_act";
pub const META_LEGAL_ACT_CONFIDENCE: &str = "legal_act_confidence";

/// Runs the legal-act model and stores the flag in the document metadata.
pub fn annotate_legal_act(doc: &mut Document, model: &LegalActModel) -> LegalActPrediction {
    let p = classify_legal_act(doc, model);
    doc.metadata
        .insert(META_LEGAL_ACT.into(), p.is_legal_act.to_string());
    doc.metadata.insert(
        META_LEGAL_ACT_CONFIDENCE.into(),
        format!("{:.4}", p.confidence),
    );
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statement_type_parsing() {
        assert_eq!(
            "Regulative".parse::<StatementType>().unwrap(),
            StatementType::Regulative
        );
        assert!("other".parse::<StatementType>().is_err());
        assert_eq!(
            serde_json::to_string(&StatementType::Constitutive).unwrap(),
            "\"constitutive\""
        );
    }

    #[test]
    fn tie_resolves_to_constitutive() {
        // two single-leaf trees voting opposite ways
        let tfidf = TfidfModel::fit(&["x"], 1, 1, 1).unwrap();
        let forest: ForestModel = serde_json::from_value(serde_json::json!({
            "classes": ["constitutive", "regulative"],
            "n_features": 1,
            "trees": [
                {"nodes": [{"node": "leaf", "class": 1}]},
                {"nodes": [{"node": "leaf", "class": 0}]}
            ],
            "params": ForestParams::default(),
            "seed": 0,
            "degenerate": false
        }))
        .unwrap();
        let model = StatementModel::from_model(
            TextModel::new(ModelKind::StatementType, tfidf, forest).unwrap(),
        )
        .unwrap();
        let c = classify_statement("anything", &model);
        assert_eq!(c.stype, StatementType::Constitutive);
        assert_eq!(c.confidence, 0.5);
    }

    #[test]
    fn foreign_classes_rejected() {
        let tfidf = TfidfModel::fit(&["x", "y"], 2, 1, 1).unwrap();
        let forest = train_forest(
            &[tfidf.vectorize("x"), tfidf.vectorize("y")],
            &["cat", "dog"],
            &ForestParams::default(),
            0,
        )
        .unwrap();
        assert!(TextModel::new(ModelKind::StatementType, tfidf, forest).is_err());
    }

    #[test]
    fn empty_document_is_not_a_legal_act() {
        let cfg = TrainConfig {
            forest: ForestParams {
                n_trees: 5,
                ..Default::default()
            },
            ..TrainConfig::legal_act(1)
        };
        let model = LegalActModel::train(
            &[
                "article 1 the state party shall",
                "the match ended in a draw",
            ],
            &[true, false],
            &cfg,
        )
        .unwrap();
        let doc = Document {
            id: "e".into(),
            source_path: String::new(),
            metadata: Default::default(),
            sentences: vec![],
        };
        assert_eq!(
            classify_legal_act(&doc, &model),
            LegalActPrediction {
                is_legal_act: false,
                confidence: 0.0
            }
        );
    }
}
