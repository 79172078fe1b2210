//! Expansion of tagged statements with conjoined components into atomic
//! statements holding one Attribute, Aim and Object each.
//!
//! Labeled tokens are grouped into spans: a token joins the span of its
//! parent when both carry the same label and the edge between them is not
//! `conj`. Spans of one label linked by `conj` form a chain, and every chain
//! of an expandable label contributes one factor to the cartesian product.
//! Adjectival property chains hanging off the first member of a chain
//! distribute over all its members; on a later member they distribute over
//! that member only.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::classifier::StatementType;
use crate::conllu::{relation_matches, DepTree};
use crate::tagger::{IgLabel, TaggedStatement};

/// Labels whose chains multiply, outermost first.
pub fn expandable_labels(stype: StatementType) -> &'static [IgLabel] {
    match stype {
        StatementType::Regulative => &[IgLabel::I, IgLabel::A, IgLabel::BDir, IgLabel::BInd],
        StatementType::Constitutive => &[IgLabel::F, IgLabel::E, IgLabel::P],
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSpan {
    pub label: IgLabel,
    /// 1-based token indices, ascending.
    pub tokens: Vec<usize>,
    pub words: Vec<String>,
    pub lemmas: Vec<String>,
    /// For property spans, the label of the component they describe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<IgLabel>,
}

impl ComponentSpan {
    pub fn text(&self) -> String {
        self.words.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicStatement {
    pub id: String,
    pub parent_statement: String,
    pub stype: StatementType,
    /// Ordered by first token.
    pub spans: Vec<ComponentSpan>,
    /// Set when the statement was passed through without expansion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl AtomicStatement {
    pub fn components(&self) -> BTreeMap<IgLabel, Vec<&ComponentSpan>> {
        let mut out: BTreeMap<IgLabel, Vec<&ComponentSpan>> = BTreeMap::new();
        for s in &self.spans {
            out.entry(s.label).or_default().push(s);
        }
        out
    }

    pub fn spans_with(&self, label: IgLabel) -> impl Iterator<Item = &ComponentSpan> {
        self.spans.iter().filter(move |s| s.label == label)
    }

    pub fn tokens(&self) -> BTreeSet<usize> {
        self.spans
            .iter()
            .flat_map(|s| s.tokens.iter().copied())
            .collect()
    }

    pub fn text(&self) -> String {
        let mut words: Vec<(usize, &str)> = self
            .spans
            .iter()
            .flat_map(|s| {
                s.tokens
                    .iter()
                    .copied()
                    .zip(s.words.iter().map(String::as_str))
            })
            .collect();
        words.sort_unstable();
        words
            .into_iter()
            .map(|(_, w)| w)
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// The parent statement with every token outside this atomic statement
    /// relabeled `NONE`.
    pub fn to_tagged(&self, parent: &TaggedStatement) -> TaggedStatement {
        let keep = self.tokens();
        let mut st = parent.clone();
        st.id = self.id.clone();
        for i in 1..=st.labels.len() {
            if !keep.contains(&i) {
                st.labels[i - 1] = IgLabel::None;
                st.provenance[i - 1] = None;
            }
        }
        st
    }
}

/// Cartesian product of nouns and adjectives, noun-major. Each output
/// group is the input noun group followed by one adjective.
pub fn distribute_modifiers<T: Clone>(adjectives: &[T], nouns: &[Vec<T>]) -> Vec<Vec<T>> {
    if adjectives.is_empty() {
        return nouns.to_vec();
    }
    nouns
        .iter()
        .flat_map(|n| {
            adjectives.iter().map(move |a| {
                let mut g = n.clone();
                g.push(a.clone());
                g
            })
        })
        .collect()
}

struct Span {
    label: IgLabel,
    head: usize,
    tokens: Vec<usize>,
    /// First span of this span's conj chain.
    chain: usize,
    /// Span containing the parent of the chain head, for property spans.
    owner: Option<usize>,
}

struct Analysis {
    spans: Vec<Span>,
    /// Span ids per chain root, members ascending.
    chains: BTreeMap<usize, Vec<usize>>,
}

fn is_conj(rel: &str) -> bool {
    relation_matches(rel, "conj")
}

#[allow(clippy::needless_range_loop)]
fn analyse(st: &TaggedStatement) -> Result<Analysis, String> {
    let tree = &st.tree;
    let label = |i: usize| st.labels[i - 1];
    let tok = |i: usize| &tree.tokens()[i - 1];

    let mut head_of = vec![0usize; tree.len() + 1];
    let mut by_head: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 1..=tree.len() {
        if label(i).is_none() {
            continue;
        }
        let mut cur = i;
        loop {
            let p = tok(cur).head;
            if p == 0 || label(p) != label(i) || is_conj(&tok(cur).deprel) {
                break;
            }
            cur = p;
        }
        head_of[i] = cur;
        by_head.entry(cur).or_default().push(i);
    }

    let ids: BTreeMap<usize, usize> = by_head.keys().enumerate().map(|(k, &h)| (h, k)).collect();
    let expandable = expandable_labels(st.stype);
    let mut spans: Vec<Span> = by_head
        .into_iter()
        .map(|(head, tokens)| Span {
            label: label(head),
            head,
            tokens,
            chain: ids[&head],
            owner: None,
        })
        .collect();

    for k in 0..spans.len() {
        let h = spans[k].head;
        let p = tok(h).head;
        if p == 0 || label(p).is_none() || !is_conj(&tok(h).deprel) {
            continue;
        }
        let (lh, lp) = (label(h), label(p));
        if lh != lp {
            if expandable.contains(&lh) || expandable.contains(&lp) {
                return Err(format!(
                    "conjunct {} ({lh}) is attached to {} ({lp})",
                    tok(h).surface,
                    tok(p).surface
                ));
            }
            continue;
        }
        spans[k].chain = ids[&head_of[p]];
    }
    for k in 0..spans.len() {
        let mut c = k;
        while spans[c].chain != c {
            c = spans[c].chain;
        }
        spans[k].chain = c;
    }

    for k in 0..spans.len() {
        if !spans[k].label.is_prop() {
            continue;
        }
        let root = spans[k].chain;
        let p = tok(spans[root].head).head;
        if p == 0 {
            continue;
        }
        let owns = |q: usize| label(q).prop_variant() == Some(spans[k].label);
        let target = if !label(p).is_none() {
            Some(p)
        } else {
            // Heads dropped by an earlier expansion: the owner is the
            // remaining conjunct nearest to where the dropped head was.
            let mut q = p;
            loop {
                if q == 0 {
                    break None;
                }
                if !label(q).is_none() {
                    break owns(q).then_some(q);
                }
                if let Some(f) = nearest_below(tree, q, owns) {
                    break Some(f);
                }
                q = tok(q).head;
            }
        };
        spans[k].owner = target.map(|q| ids[&head_of[q]]);
    }

    let mut chains: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, s) in spans.iter().enumerate() {
        chains.entry(s.chain).or_default().push(k);
    }
    Ok(Analysis { spans, chains })
}

/// Breadth-first search of the subtree under `t`, excluding `t`.
fn nearest_below(tree: &DepTree, t: usize, found: impl Fn(usize) -> bool) -> Option<usize> {
    let mut queue: VecDeque<usize> = tree.child_indices(t).iter().copied().collect();
    while let Some(q) = queue.pop_front() {
        if found(q) {
            return Some(q);
        }
        queue.extend(tree.child_indices(q).iter().copied());
    }
    None
}

/// Split `st` into atomic statements. A statement without conjoined
/// components yields one atomic statement carrying the parent's id.
pub fn expand(st: &TaggedStatement) -> Vec<AtomicStatement> {
    let an = match analyse(st) {
        Ok(an) => an,
        Err(msg) => {
            log::warn!("statement {}: not split: {msg}", st.id);
            return vec![passthrough(st, msg)];
        }
    };
    let spans = &an.spans;

    // Each factor is a list of options; an option is a list of span ids
    // that are selected together.
    let mut factors: Vec<Vec<Vec<usize>>> = Vec::new();
    for &label in expandable_labels(st.stype) {
        for (&root, members) in &an.chains {
            if spans[root].label != label {
                continue;
            }
            let mut options: Vec<Vec<usize>> = members.iter().map(|&m| vec![m]).collect();
            for (&adj_root, adjs) in &an.chains {
                let a = &spans[adj_root];
                let Some(owner) = a.owner.filter(|o| members.contains(o)) else {
                    continue;
                };
                if Some(a.label) != label.prop_variant()
                    || !relation_matches(&st.tree.tokens()[a.head - 1].deprel, "amod")
                {
                    continue;
                }
                if owner == root {
                    options = distribute_modifiers(adjs, &options);
                } else {
                    // Modifiers of a later conjunct describe that one only.
                    options = options
                        .into_iter()
                        .flat_map(|o| {
                            if o[0] == owner {
                                distribute_modifiers(adjs, &[o])
                            } else {
                                vec![o]
                            }
                        })
                        .collect();
                }
            }
            factors.push(options);
        }
    }

    let combos = factors
        .iter()
        .fold(vec![Vec::<usize>::new()], |acc, options| {
            acc.iter()
                .flat_map(|prefix| {
                    options.iter().map(move |o| {
                        let mut c = prefix.clone();
                        c.extend(o);
                        c
                    })
                })
                .collect()
        });
    let choosable: BTreeSet<usize> = factors.iter().flatten().flatten().copied().collect();

    let n = combos.len();
    combos
        .into_iter()
        .enumerate()
        .map(|(k, chosen)| {
            let chosen: BTreeSet<usize> = chosen.into_iter().collect();
            let mut memo = vec![None; spans.len()];
            let selected: Vec<usize> = (0..spans.len())
                .filter(|&s| is_selected(s, spans, &choosable, &chosen, &mut memo))
                .collect();
            let id = if n == 1 {
                st.id.clone()
            } else {
                format!("{}.{}", st.id, k + 1)
            };
            AtomicStatement {
                id,
                parent_statement: st.id.clone(),
                stype: st.stype,
                spans: selected
                    .into_iter()
                    .map(|s| component(&st.tree, spans, s))
                    .collect(),
                diagnostic: None,
            }
        })
        .collect()
}

fn is_selected(
    s: usize,
    spans: &[Span],
    choosable: &BTreeSet<usize>,
    chosen: &BTreeSet<usize>,
    memo: &mut Vec<Option<bool>>,
) -> bool {
    if let Some(v) = memo[s] {
        return v;
    }
    let v = if choosable.contains(&s) {
        chosen.contains(&s)
    } else {
        match spans[s].owner {
            Some(o) => is_selected(o, spans, choosable, chosen, memo),
            None => true,
        }
    };
    memo[s] = Some(v);
    v
}

fn owner_label(spans: &[Span], mut s: usize) -> Option<IgLabel> {
    if !spans[s].label.is_prop() {
        return None;
    }
    while let Some(o) = spans[s].owner {
        s = o;
        if !spans[s].label.is_prop() {
            return Some(spans[s].label);
        }
    }
    None
}

fn component(tree: &DepTree, spans: &[Span], s: usize) -> ComponentSpan {
    let span = &spans[s];
    let toks = span.tokens.iter().map(|&i| &tree.tokens()[i - 1]);
    ComponentSpan {
        label: span.label,
        tokens: span.tokens.clone(),
        words: toks.clone().map(|t| t.surface.clone()).collect(),
        lemmas: toks.map(|t| t.lemma.clone()).collect(),
        owner: owner_label(spans, s),
    }
}

/// Nearest ancestor label that is neither `NONE` nor a property label.
fn labeled_ancestor(st: &TaggedStatement, mut t: usize) -> Option<IgLabel> {
    loop {
        t = st.tree.tokens()[t - 1].head;
        if t == 0 {
            return None;
        }
        let l = st.labels[t - 1];
        if !l.is_none() && !l.is_prop() {
            return Some(l);
        }
    }
}

/// One atomic statement holding every labeled token of `st`, one span per
/// maximal run of equally labeled tokens.
fn passthrough(st: &TaggedStatement, msg: String) -> AtomicStatement {
    let mut spans: Vec<ComponentSpan> = Vec::new();
    for (i, (t, &l)) in st.tree.tokens().iter().zip(&st.labels).enumerate() {
        if l.is_none() {
            continue;
        }
        match spans.last_mut() {
            Some(s) if s.label == l && s.tokens.last() == Some(&i) => {
                s.tokens.push(i + 1);
                s.words.push(t.surface.clone());
                s.lemmas.push(t.lemma.clone());
            }
            _ => spans.push(ComponentSpan {
                label: l,
                tokens: vec![i + 1],
                words: vec![t.surface.clone()],
                lemmas: vec![t.lemma.clone()],
                owner: None,
            }),
        }
    }
    for span in &mut spans {
        if span.label.is_prop() {
            span.owner = labeled_ancestor(st, span.tokens[0]);
        }
    }
    AtomicStatement {
        id: st.id.clone(),
        parent_statement: st.id.clone(),
        stype: st.stype,
        spans,
        diagnostic: Some(msg),
    }
}
