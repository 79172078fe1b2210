//! Rule-based assignment of IG components to the tokens of a statement.
//!
//! Regulative and constitutive statements use separate rule sets (see
//! [`rules`]). The engine is a pure function of the tree and the rules.

mod label;
pub mod rules;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use label::{IgLabel, UnknownLabel};
pub use rules::{
    Anchor, Expansion, LabelSpec, LemmaGuard, Rule, RuleError, RuleFile, RuleSet, Target,
    DEFAULT_MODALS,
};

use crate::classifier::StatementType;
use crate::conllu::{relation_matches, DepTree};

/// Lemmas that make an `aux` dependent a deontic or modal operator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModalLexicon {
    lemmas: BTreeSet<String>,
}

impl ModalLexicon {
    pub fn new<I, S>(lemmas: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        ModalLexicon {
            lemmas: lemmas
                .into_iter()
                .map(|s| s.as_ref().to_lowercase())
                .collect(),
        }
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.lemmas.contains(&lemma.to_lowercase())
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.lemmas.iter().map(String::as_str)
    }
}

impl Default for ModalLexicon {
    fn default() -> Self {
        ModalLexicon::new(DEFAULT_MODALS)
    }
}

/// Which rule labeled a token, and at which token the rule matched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub rule: String,
    pub anchor: usize,
    #[serde(default)]
    pub reconstructed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TagFlags {
    /// The root guard failed; every token is `NONE`.
    #[serde(default)]
    pub precondition_failed: bool,
    /// A predicate has an `aux:pass` or `nsubj:pass` dependent.
    #[serde(default)]
    pub passive: bool,
    /// No Attribute (regulative) or Constituted Entity (constitutive) was found.
    #[serde(default)]
    pub incomplete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedStatement {
    pub id: String,
    pub tree: DepTree,
    pub stype: StatementType,
    pub labels: Vec<IgLabel>,
    pub provenance: Vec<Option<Provenance>>,
    #[serde(default)]
    pub flags: TagFlags,
}

impl TaggedStatement {
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Label of the token at 1-based `index`.
    pub fn label(&self, index: usize) -> IgLabel {
        self.labels[index - 1]
    }

    /// Surfaces of the tokens carrying `label`, in order.
    pub fn words_with(&self, label: IgLabel) -> Vec<&str> {
        self.tree
            .tokens()
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| **l == label)
            .map(|(t, _)| t.surface.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tagger {
    regulative: RuleSet,
    constitutive: RuleSet,
    modals: ModalLexicon,
}

impl Default for Tagger {
    fn default() -> Self {
        Tagger::from_rule_file(RuleFile::default()).expect("default rules are valid")
    }
}

impl Tagger {
    pub fn new(
        regulative: RuleSet,
        constitutive: RuleSet,
        modals: ModalLexicon,
    ) -> Result<Self, RuleError> {
        regulative.validate()?;
        constitutive.validate()?;
        for (rs, want) in [
            (&regulative, StatementType::Regulative),
            (&constitutive, StatementType::Constitutive),
        ] {
            if rs.stype != want {
                return Err(RuleError::WrongType {
                    expected: want,
                    found: rs.stype,
                });
            }
        }
        Ok(Tagger {
            regulative,
            constitutive,
            modals,
        })
    }

    pub fn from_rule_file(file: RuleFile) -> Result<Self, RuleError> {
        Tagger::new(
            file.regulative,
            file.constitutive,
            ModalLexicon::new(&file.modal_lemmas),
        )
    }

    pub fn rules(&self, stype: StatementType) -> &RuleSet {
        match stype {
            StatementType::Regulative => &self.regulative,
            StatementType::Constitutive => &self.constitutive,
        }
    }

    pub fn modals(&self) -> &ModalLexicon {
        &self.modals
    }

    pub fn tag_constitutive(&self, tree: &DepTree) -> TaggedStatement {
        run(&self.constitutive, &self.modals, tree)
    }

    pub fn tag_regulative(&self, tree: &DepTree) -> TaggedStatement {
        run(&self.regulative, &self.modals, tree)
    }

    /// Tag with the rule set matching `stype`.
    pub fn route_and_tag(&self, tree: &DepTree, stype: StatementType) -> TaggedStatement {
        run(self.rules(stype), &self.modals, tree)
    }

    /// Tag using only the rules up to and including `rule_id`.
    pub fn tag_through(
        &self,
        tree: &DepTree,
        stype: StatementType,
        rule_id: &str,
    ) -> Option<TaggedStatement> {
        let rs = self.rules(stype).prefix_through(rule_id)?;
        Some(run(&rs, &self.modals, tree))
    }
}

/// Apply `rules` to `tree`.
pub fn run(rules: &RuleSet, modals: &ModalLexicon, tree: &DepTree) -> TaggedStatement {
    let n = tree.len();
    let mut st = TaggedStatement {
        id: tree.sent_id().unwrap_or_default().to_string(),
        tree: tree.clone(),
        stype: rules.stype,
        labels: vec![IgLabel::None; n],
        provenance: vec![None; n],
        flags: TagFlags::default(),
    };
    if !rules.root_pos.iter().any(|p| *p == tree.root().upos) {
        st.flags.precondition_failed = true;
        st.flags.incomplete = true;
        return st;
    }
    let predicates = predicates(tree);
    let mut engine = Engine {
        tree,
        rules,
        modals,
        labels: &mut st.labels,
        provenance: &mut st.provenance,
    };
    for rule in &rules.rules {
        engine.apply(rule, &predicates);
    }

    st.flags.passive = predicates.iter().any(|&p| {
        tree.child_indices(p).iter().any(|&c| {
            let rel = tree.tokens()[c - 1].deprel.as_str();
            rel == "aux:pass" || rel == "nsubj:pass"
        })
    });
    let actor = match rules.stype {
        StatementType::Regulative => IgLabel::A,
        StatementType::Constitutive => IgLabel::E,
    };
    st.flags.incomplete = !st.labels.contains(&actor);
    st
}

/// The root plus every token linked to it by a chain of `conj` relations.
fn predicates(tree: &DepTree) -> Vec<usize> {
    let mut out = vec![tree.root_index()];
    let mut i = 0;
    while i < out.len() {
        let p = out[i];
        for &c in tree.child_indices(p) {
            if relation_matches(&tree.tokens()[c - 1].deprel, "conj") {
                out.push(c);
            }
        }
        i += 1;
    }
    out.sort_unstable();
    out
}

struct Engine<'a> {
    tree: &'a DepTree,
    rules: &'a RuleSet,
    modals: &'a ModalLexicon,
    labels: &'a mut Vec<IgLabel>,
    provenance: &'a mut Vec<Option<Provenance>>,
}

impl Engine<'_> {
    fn apply(&mut self, rule: &Rule, predicates: &[usize]) {
        let pairs: Vec<(usize, usize)> = match &rule.target {
            Target::Root => {
                let r = self.tree.root_index();
                vec![(r, r)]
            }
            Target::ChildrenOf(anchor) => {
                let anchors: Vec<usize> = match anchor {
                    Anchor::Predicates => predicates.to_vec(),
                    Anchor::Labels(ls) => (1..=self.tree.len())
                        .filter(|&i| ls.contains(&self.labels[i - 1]))
                        .collect(),
                };
                anchors
                    .into_iter()
                    .flat_map(|a| self.tree.child_indices(a).iter().map(move |&c| (a, c)))
                    .filter(|&(_, c)| {
                        let rel = &self.tree.tokens()[c - 1].deprel;
                        rule.relations.iter().any(|p| relation_matches(rel, p))
                    })
                    .collect()
            }
        };
        for (anchor, cand) in pairs {
            if !self.labels[cand - 1].is_none() || !self.guards_hold(rule, cand) {
                continue;
            }
            let label = match rule.label {
                LabelSpec::Fixed(l) => l,
                LabelSpec::Inherit => self.labels[anchor - 1],
                LabelSpec::Prop => match self.labels[anchor - 1].prop_variant() {
                    Some(l) => l,
                    None => continue,
                },
            };
            if label.is_none() {
                continue;
            }
            self.assign(cand, label, rule, cand);
            match rule.expand {
                Expansion::None => {}
                Expansion::Core => self.expand(cand, label, rule, &self.rules.core_relations, true),
                Expansion::Subtree => self.expand(cand, label, rule, &rule.exclude, false),
            }
        }
    }

    fn guards_hold(&self, rule: &Rule, cand: usize) -> bool {
        let tok = &self.tree.tokens()[cand - 1];
        if !rule.pos.is_empty() && !rule.pos.contains(&tok.upos) {
            return false;
        }
        let lemma_ok = match &rule.lemma {
            LemmaGuard::Any => true,
            LemmaGuard::Modal => self.modals.contains(&tok.lemma),
            LemmaGuard::OneOf(ls) => ls.iter().any(|l| l.eq_ignore_ascii_case(&tok.lemma)),
        };
        if !lemma_ok {
            return false;
        }
        rule.marker_lemmas.is_empty()
            || self.tree.child_indices(cand).iter().any(|&c| {
                let t = &self.tree.tokens()[c - 1];
                (relation_matches(&t.deprel, "case") || relation_matches(&t.deprel, "mark"))
                    && rule
                        .marker_lemmas
                        .iter()
                        .any(|l| l.eq_ignore_ascii_case(&t.lemma))
            })
    }

    fn assign(&mut self, idx: usize, label: IgLabel, rule: &Rule, anchor: usize) {
        self.labels[idx - 1] = label;
        self.provenance[idx - 1] = Some(Provenance {
            rule: rule.id.clone(),
            anchor,
            reconstructed: rule.reconstructed,
        });
    }

    /// Labels descendants of `head`. With `follow = true` only edges whose
    /// relation is in `rels` are followed; otherwise edges in `rels` are cut.
    /// Already-labeled tokens are neither relabeled nor entered.
    fn expand(&mut self, head: usize, label: IgLabel, rule: &Rule, rels: &[String], follow: bool) {
        let mut stack = vec![head];
        while let Some(at) = stack.pop() {
            for &c in self.tree.child_indices(at) {
                let rel = &self.tree.tokens()[c - 1].deprel;
                let listed = rels.iter().any(|p| relation_matches(rel, p));
                if listed != follow || !self.labels[c - 1].is_none() {
                    continue;
                }
                self.assign(c, label, rule, head);
                stack.push(c);
            }
        }
    }
}
