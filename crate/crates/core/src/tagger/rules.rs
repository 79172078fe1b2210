//! Declarative tagging rules.
//!
//! A rule selects candidate tokens (the root, or dependents of some anchor
//! tokens), filters them by relation, POS and lemma, and assigns a label to
//! the candidate and optionally to its descendants. Rules run in file order
//! and the first rule to label a token wins.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::label::IgLabel;
use crate::classifier::StatementType;

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("rule {rule}: label {label} is not legal in {stype} statements")]
    IllegalLabel {
        rule: String,
        label: IgLabel,
        stype: StatementType,
    },
    #[error("rule set is for {found} statements, expected {expected}")]
    WrongType {
        expected: StatementType,
        found: StatementType,
    },
    #[error("duplicate rule id {0:?}")]
    DuplicateId(String),
    #[error("rule {0}: children_of target needs at least one relation")]
    NoRelations(String),
    #[error("rule file: {0}")]
    Io(#[from] std::io::Error),
    #[error("rule file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which tokens a rule considers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// The sentence root itself.
    Root,
    /// Direct dependents of the anchor tokens.
    ChildrenOf(Anchor),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    /// The root and every token joined to it by a chain of `conj` relations.
    Predicates,
    /// Tokens currently carrying one of these labels.
    Labels(Vec<IgLabel>),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaGuard {
    #[default]
    Any,
    /// Lemma must be in the modal lexicon.
    Modal,
    OneOf(Vec<String>),
}

/// Label a rule assigns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSpec {
    Fixed(IgLabel),
    /// Same label as the anchor.
    Inherit,
    /// Property variant of the anchor's label.
    Prop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expansion {
    /// Only the matched token.
    #[default]
    None,
    /// Also dependents reached through the rule set's core relations.
    Core,
    /// The whole subtree, minus branches entered through `exclude` relations.
    Subtree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub target: Target,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relations: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pos: Vec<String>,
    #[serde(default, skip_serializing_if = "is_any")]
    pub lemma: LemmaGuard,
    /// Candidate must have a `case` or `mark` dependent with one of these lemmas.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub marker_lemmas: Vec<String>,
    pub label: LabelSpec,
    #[serde(default)]
    pub expand: Expansion,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclude: Vec<String>,
    /// Not among the published rules; rebuilt from the component correspondence.
    #[serde(default)]
    pub reconstructed: bool,
}

fn is_any(g: &LemmaGuard) -> bool {
    *g == LemmaGuard::Any
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    pub stype: StatementType,
    /// The root must carry one of these POS tags for any rule to run.
    pub root_pos: Vec<String>,
    pub core_relations: Vec<String>,
    pub rules: Vec<Rule>,
}

impl RuleSet {
    pub fn validate(&self) -> Result<(), RuleError> {
        let mut seen = BTreeSet::new();
        for r in &self.rules {
            if !seen.insert(&r.id) {
                return Err(RuleError::DuplicateId(r.id.clone()));
            }
            if let LabelSpec::Fixed(label) = r.label {
                if !label.allowed_in(self.stype) || label.is_none() {
                    return Err(RuleError::IllegalLabel {
                        rule: r.id.clone(),
                        label,
                        stype: self.stype,
                    });
                }
            }
            if matches!(r.target, Target::ChildrenOf(_)) && r.relations.is_empty() {
                return Err(RuleError::NoRelations(r.id.clone()));
            }
            if let Target::ChildrenOf(Anchor::Labels(ls)) = &r.target {
                if let Some(&label) = ls.iter().find(|l| !l.allowed_in(self.stype)) {
                    return Err(RuleError::IllegalLabel {
                        rule: r.id.clone(),
                        label,
                        stype: self.stype,
                    });
                }
            }
        }
        Ok(())
    }

    /// Rules up to and including `rule_id`.
    pub fn prefix_through(&self, rule_id: &str) -> Option<RuleSet> {
        let end = self.rules.iter().position(|r| r.id == rule_id)?;
        Some(RuleSet {
            rules: self.rules[..=end].to_vec(),
            ..self.clone()
        })
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }
}

/// Complete tagger configuration as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleFile {
    pub modal_lemmas: Vec<String>,
    pub regulative: RuleSet,
    pub constitutive: RuleSet,
}

impl RuleFile {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, RuleError> {
        let file: RuleFile = serde_json::from_slice(&std::fs::read(path)?)?;
        file.regulative.validate()?;
        file.constitutive.validate()?;
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rule file serializes")
    }
}

pub const DEFAULT_MODALS: [&str; 9] = [
    "must", "should", "may", "might", "can", "could", "need", "ought", "shall",
];

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn core_relations() -> Vec<String> {
    strings(&[
        "det", "compound", "case", "flat", "fixed", "nummod", "goeswith",
    ])
}

const PROP_RELATIONS: [&str; 4] = ["amod", "nmod", "acl", "appos"];

fn children(id: &str, anchor: Anchor, relations: &[&str], label: LabelSpec) -> Rule {
    Rule {
        id: id.to_string(),
        target: Target::ChildrenOf(anchor),
        relations: strings(relations),
        pos: Vec::new(),
        lemma: LemmaGuard::Any,
        marker_lemmas: Vec::new(),
        label,
        expand: Expansion::None,
        exclude: Vec::new(),
        reconstructed: false,
    }
}

fn root(id: &str, pos: &[&str], label: IgLabel) -> Rule {
    Rule {
        target: Target::Root,
        relations: Vec::new(),
        pos: strings(pos),
        ..children(id, Anchor::Predicates, &[], LabelSpec::Fixed(label))
    }
}

impl Rule {
    fn expand(mut self, e: Expansion) -> Self {
        self.expand = e;
        self
    }

    fn exclude(mut self, rels: &[&str]) -> Self {
        self.exclude = strings(rels);
        self
    }

    fn modal(mut self) -> Self {
        self.lemma = LemmaGuard::Modal;
        self
    }

    fn reconstructed(mut self) -> Self {
        self.reconstructed = true;
        self
    }
}

/// The published constitutive rules (1a-1e, 2), followed by reconstructed
/// rules for objects, conjuncts and property dependents.
pub fn default_constitutive() -> RuleSet {
    use IgLabel::*;
    let fixed = LabelSpec::Fixed;
    RuleSet {
        stype: StatementType::Constitutive,
        root_pos: strings(&["VERB", "ADJ"]),
        core_relations: core_relations(),
        rules: vec![
            root("1a-verb", &["VERB"], F),
            root("1a-adj", &["ADJ"], P),
            children("1b", Anchor::Predicates, &["aux:pass", "cop"], fixed(F)),
            children(
                "1c",
                Anchor::Predicates,
                &["nsubj", "nsubj:pass", "expl"],
                fixed(E),
            ),
            children(
                "1d",
                Anchor::Labels(vec![E]),
                &["det", "compound", "mark"],
                fixed(E),
            )
            .expand(Expansion::Subtree)
            .exclude(&["punct"]),
            children(
                "1e",
                Anchor::Predicates,
                &["obl", "advmod", "xcomp"],
                fixed(Ctx),
            )
            .expand(Expansion::Subtree)
            .exclude(&["punct"]),
            children("2", Anchor::Predicates, &["aux"], fixed(M)).modal(),
            children("c-object", Anchor::Predicates, &["obj"], fixed(P))
                .expand(Expansion::Core)
                .reconstructed(),
            children(
                "c-conj",
                Anchor::Labels(vec![E, P, F]),
                &["conj"],
                LabelSpec::Inherit,
            )
            .expand(Expansion::Core)
            .reconstructed(),
            children(
                "c-entity-prop",
                Anchor::Labels(vec![E]),
                &PROP_RELATIONS,
                LabelSpec::Prop,
            )
            .expand(Expansion::Subtree)
            .exclude(&["punct", "cc"])
            .reconstructed(),
            children(
                "c-property-prop",
                Anchor::Labels(vec![P]),
                &PROP_RELATIONS,
                LabelSpec::Prop,
            )
            .expand(Expansion::Subtree)
            .exclude(&["punct", "cc"])
            .reconstructed(),
        ],
    }
}

/// Regulative rules mirrored from the constitutive ones through the
/// component correspondence E/A, F/I, M/D, P/B.
pub fn default_regulative() -> RuleSet {
    use IgLabel::*;
    let fixed = LabelSpec::Fixed;
    let mut indirect_obl = children("r-indirect-obl", Anchor::Predicates, &["obl"], fixed(BInd))
        .expand(Expansion::Core)
        .reconstructed();
    indirect_obl.marker_lemmas = strings(&["to", "by"]);
    RuleSet {
        stype: StatementType::Regulative,
        root_pos: strings(&["VERB", "ADJ"]),
        core_relations: core_relations(),
        rules: vec![
            root("r-aim", &["VERB", "ADJ"], I).reconstructed(),
            children(
                "r-aim-aux",
                Anchor::Predicates,
                &["aux:pass", "cop"],
                fixed(I),
            )
            .reconstructed(),
            children("r-deontic", Anchor::Predicates, &["aux"], fixed(D))
                .modal()
                .reconstructed(),
            children(
                "r-attribute",
                Anchor::Predicates,
                &["nsubj", "nsubj:pass", "expl"],
                fixed(A),
            )
            .expand(Expansion::Core)
            .reconstructed(),
            children("r-direct-object", Anchor::Predicates, &["obj"], fixed(BDir))
                .expand(Expansion::Core)
                .reconstructed(),
            children(
                "r-indirect-object",
                Anchor::Predicates,
                &["iobj"],
                fixed(BInd),
            )
            .expand(Expansion::Core)
            .reconstructed(),
            indirect_obl,
            children(
                "r-context",
                Anchor::Predicates,
                &["obl", "advmod", "xcomp", "advcl"],
                fixed(Ctx),
            )
            .expand(Expansion::Subtree)
            .exclude(&["punct"])
            .reconstructed(),
            children(
                "r-conj",
                Anchor::Labels(vec![I, A, BDir, BInd]),
                &["conj"],
                LabelSpec::Inherit,
            )
            .expand(Expansion::Core)
            .reconstructed(),
            children(
                "r-attribute-prop",
                Anchor::Labels(vec![A]),
                &PROP_RELATIONS,
                LabelSpec::Prop,
            )
            .expand(Expansion::Subtree)
            .exclude(&["punct", "cc"])
            .reconstructed(),
            children(
                "r-object-prop",
                Anchor::Labels(vec![BDir, BInd]),
                &PROP_RELATIONS,
                LabelSpec::Prop,
            )
            .expand(Expansion::Subtree)
            .exclude(&["punct", "cc"])
            .reconstructed(),
        ],
    }
}

impl Default for RuleFile {
    fn default() -> Self {
        RuleFile {
            modal_lemmas: strings(&DEFAULT_MODALS),
            regulative: default_regulative(),
            constitutive: default_constitutive(),
        }
    }
}
