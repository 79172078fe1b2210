//! Shared helpers for unit tests.

use proptest::prelude::*;

use crate::conllu::{parse_conllu, DepTree, Token};

/// Parse a file under `data/fixtures`.
pub fn fixture(name: &str) -> DepTree {
    let path = format!(
        "{}/../../data/fixtures/{name}.conllu",
        env!("CARGO_MANIFEST_DIR")
    );
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    parse_conllu(&text).unwrap().remove(0)
}

const RELS: [&str; 20] = [
    "nsubj",
    "nsubj:pass",
    "obj",
    "iobj",
    "obl",
    "obl:tmod",
    "advmod",
    "xcomp",
    "advcl",
    "aux",
    "aux:pass",
    "cop",
    "det",
    "compound",
    "amod",
    "nmod",
    "case",
    "mark",
    "conj",
    "cc",
];
const POS: [&str; 8] = ["VERB", "ADJ", "NOUN", "PROPN", "AUX", "ADP", "DET", "CCONJ"];
const LEMMAS: [&str; 8] = ["shall", "may", "to", "by", "be", "state", "party", "fund"];

/// Random well-formed dependency trees of 1..=`max_len` tokens.
pub fn arb_tree(max_len: usize) -> impl Strategy<Value = DepTree> {
    (1..=max_len)
        .prop_flat_map(|n| {
            (
                Just((1..=n).collect::<Vec<_>>()).prop_shuffle(),
                proptest::collection::vec(0usize..1000, n),
                proptest::collection::vec((0..RELS.len(), 0..POS.len(), 0..LEMMAS.len()), n),
            )
        })
        .prop_map(|(order, picks, attrs)| {
            let n = order.len();
            let mut head = vec![0usize; n + 1];
            for k in 1..n {
                head[order[k]] = order[picks[k] % k];
            }
            let tokens = (1..=n)
                .map(|i| {
                    let (r, p, l) = attrs[i - 1];
                    Token {
                        index: i,
                        surface: format!("w{i}"),
                        lemma: LEMMAS[l].to_string(),
                        upos: POS[p].to_string(),
                        xpos: None,
                        feats: Default::default(),
                        head: head[i],
                        deprel: if head[i] == 0 {
                            "root".into()
                        } else {
                            RELS[r].into()
                        },
                        misc: None,
                    }
                })
                .collect();
            DepTree::new(tokens, Vec::new()).expect("generated tree is valid")
        })
}
