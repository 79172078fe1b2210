//! Inverted index over document text with metadata filters.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifier::{smoothed_idf, META_LEGAL_ACT};
use crate::conllu::Document;
use crate::text::tokenize;

/// Metadata key set by the keyword filter stage.
pub const META_KEYWORDS: &str = "keywords";
/// ISO 8601 date, compared as a string.
pub const META_DATE: &str = "date";
pub const META_COUNTRY: &str = "country";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: String,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusIndex {
    /// Postings sorted by document id.
    postings: BTreeMap<String, Vec<Posting>>,
    /// Filterable metadata per document.
    docs: BTreeMap<String, BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SearchFilters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legal_act: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keywords: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_from: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_to: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country: Option<String>,
}

impl SearchFilters {
    pub fn accepts(&self, meta: &BTreeMap<String, String>) -> bool {
        let flag = |key: &str, want: Option<bool>| {
            want.is_none_or(|w| {
                meta.get(key).map(String::as_str) == Some(if w { "true" } else { "false" })
            })
        };
        let date = meta.get(META_DATE);
        flag(META_LEGAL_ACT, self.legal_act)
            && flag(META_KEYWORDS, self.keywords)
            && self
                .date_from
                .as_ref()
                .is_none_or(|from| date.is_some_and(|d| d >= from))
            && self
                .date_to
                .as_ref()
                .is_none_or(|to| date.is_some_and(|d| d <= to))
            && self.country.as_ref().is_none_or(|c| {
                meta.get(META_COUNTRY)
                    .is_some_and(|m| m.eq_ignore_ascii_case(c))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub id: String,
    pub score: f64,
}

impl CorpusIndex {
    pub fn build<'a>(docs: impl IntoIterator<Item = &'a Document>) -> Self {
        let mut idx = CorpusIndex::default();
        for d in docs {
            idx.insert(d);
        }
        idx
    }

    /// Add or replace one document.
    pub fn insert(&mut self, doc: &Document) {
        self.remove(&doc.id);
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in tokenize(&doc.text()) {
            *tf.entry(t).or_insert(0) += 1;
        }
        for (term, n) in tf {
            let list = self.postings.entry(term).or_default();
            let at = list.partition_point(|p| p.doc < doc.id);
            list.insert(
                at,
                Posting {
                    doc: doc.id.clone(),
                    tf: n,
                },
            );
        }
        self.docs.insert(doc.id.clone(), doc.metadata.clone());
    }

    pub fn remove(&mut self, id: &str) {
        if self.docs.remove(id).is_none() {
            return;
        }
        self.postings.retain(|_, list| {
            list.retain(|p| p.doc != id);
            !list.is_empty()
        });
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    /// Documents containing every query term, by summed tf-idf descending
    /// then id. An empty query lists every document passing the filters.
    pub fn search(&self, query: &str, filters: &SearchFilters) -> Vec<SearchHit> {
        let mut terms = tokenize(query);
        terms.sort();
        terms.dedup();
        let n = self.docs.len();
        let mut scores: BTreeMap<&str, f64> = self
            .docs
            .iter()
            .filter(|(_, meta)| filters.accepts(meta))
            .map(|(id, _)| (id.as_str(), 0.0))
            .collect();
        for t in &terms {
            let list = self.postings(t);
            let idf = smoothed_idf(n, list.len());
            let mut next = BTreeMap::new();
            for p in list {
                if let Some(s) = scores.get(p.doc.as_str()) {
                    next.insert(p.doc.as_str(), s + f64::from(p.tf) * idf);
                }
            }
            scores = next;
        }
        let mut hits: Vec<SearchHit> = scores
            .into_iter()
            .map(|(id, score)| SearchHit {
                id: id.to_string(),
                score,
            })
            .collect();
        hits.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
        hits
    }
}

/// True when any keyword (one or more words) occurs as a lemma sequence
/// in the document, ignoring case.
pub fn keyword_filter(doc: &Document, keywords: &[&str]) -> bool {
    let wanted: Vec<Vec<String>> = keywords
        .iter()
        .map(|k| {
            k.split_whitespace()
                .map(str::to_lowercase)
                .collect::<Vec<_>>()
        })
        .filter(|k| !k.is_empty())
        .collect();
    if wanted.is_empty() {
        return false;
    }
    doc.sentences.iter().any(|s| {
        let lemmas: Vec<String> = s.tokens().iter().map(|t| t.lemma.to_lowercase()).collect();
        wanted
            .iter()
            .any(|k| lemmas.windows(k.len()).any(|w| w == k.as_slice()))
    })
}
