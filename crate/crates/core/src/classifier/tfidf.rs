//! TF-IDF over word n-grams with a fixed-size vocabulary.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::text::extract_ngrams;

/// How the `k` vocabulary terms are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermSelection {
    /// Highest document frequency first.
    DocumentFrequency,
    /// Highest chi-squared association with the training labels first.
    ChiSquared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawTfidf")]
pub struct TfidfModel {
    vocabulary: Vec<String>,
    idf: Vec<f64>,
    n_min: usize,
    n_max: usize,
    requested_k: usize,
    n_docs: usize,
    selection: TermSelection,
    /// Set when the corpus had fewer than `requested_k` distinct terms.
    truncated: bool,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct RawTfidf {
    vocabulary: Vec<String>,
    idf: Vec<f64>,
    n_min: usize,
    n_max: usize,
    requested_k: usize,
    n_docs: usize,
    selection: TermSelection,
    truncated: bool,
}

impl From<RawTfidf> for TfidfModel {
    fn from(r: RawTfidf) -> Self {
        let index = index_of(&r.vocabulary);
        TfidfModel {
            vocabulary: r.vocabulary,
            idf: r.idf,
            n_min: r.n_min,
            n_max: r.n_max,
            requested_k: r.requested_k,
            n_docs: r.n_docs,
            selection: r.selection,
            truncated: r.truncated,
            index,
        }
    }
}

fn index_of(vocab: &[String]) -> HashMap<String, usize> {
    vocab
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect()
}

/// `ln((1 + N) / (1 + df)) + 1`
pub fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

struct CorpusStats {
    /// Distinct n-grams per document.
    doc_terms: Vec<BTreeSet<String>>,
    df: BTreeMap<String, usize>,
}

fn corpus_stats<S: AsRef<str>>(
    corpus: &[S],
    n_min: usize,
    n_max: usize,
) -> Result<CorpusStats, ClassifierError> {
    let mut doc_terms = Vec::with_capacity(corpus.len());
    let mut df = BTreeMap::new();
    for text in corpus {
        let terms: BTreeSet<String> = extract_ngrams(text.as_ref(), n_min, n_max)?
            .into_keys()
            .collect();
        for t in &terms {
            *df.entry(t.clone()).or_insert(0) += 1;
        }
        doc_terms.push(terms);
    }
    Ok(CorpusStats { doc_terms, df })
}

impl TfidfModel {
    /// Unsupervised fit: keeps the `k` terms with the highest document
    /// frequency (ties broken alphabetically).
    pub fn fit<S: AsRef<str>>(
        corpus: &[S],
        k: usize,
        n_min: usize,
        n_max: usize,
    ) -> Result<Self, ClassifierError> {
        check_fit_args(corpus.len(), k)?;
        let stats = corpus_stats(corpus, n_min, n_max)?;
        let mut ranked: Vec<(&String, usize)> = stats.df.iter().map(|(t, &d)| (t, d)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let chosen: Vec<String> = ranked.into_iter().take(k).map(|(t, _)| t.clone()).collect();
        Ok(Self::assemble(
            chosen,
            &stats,
            corpus.len(),
            k,
            n_min,
            n_max,
            TermSelection::DocumentFrequency,
        ))
    }

    /// Supervised fit: keeps the `k` terms whose presence/absence is most
    /// associated with `labels` under a chi-squared contingency test.
    pub fn fit_supervised<S: AsRef<str>, L: Ord>(
        corpus: &[S],
        labels: &[L],
        k: usize,
        n_min: usize,
        n_max: usize,
    ) -> Result<Self, ClassifierError> {
        check_fit_args(corpus.len(), k)?;
        if labels.len() != corpus.len() {
            return Err(ClassifierError::LengthMismatch {
                rows: corpus.len(),
                labels: labels.len(),
            });
        }
        let stats = corpus_stats(corpus, n_min, n_max)?;
        let classes: BTreeSet<&L> = labels.iter().collect();
        let class_of: Vec<usize> = labels
            .iter()
            .map(|l| classes.iter().position(|c| *c == l).unwrap())
            .collect();
        let mut class_size = vec![0usize; classes.len()];
        for &c in &class_of {
            class_size[c] += 1;
        }
        let n = corpus.len();

        let mut scored: Vec<(&String, f64, usize)> = stats
            .df
            .iter()
            .map(|(term, &df)| {
                let mut present = vec![0usize; classes.len()];
                for (doc, &c) in stats.doc_terms.iter().zip(&class_of) {
                    if doc.contains(term) {
                        present[c] += 1;
                    }
                }
                (term, chi_squared(&present, &class_size, df, n), df)
            })
            .collect();
        scored.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| b.2.cmp(&a.2))
                .then_with(|| a.0.cmp(b.0))
        });
        let chosen = scored
            .into_iter()
            .take(k)
            .map(|(t, _, _)| t.clone())
            .collect();
        Ok(Self::assemble(
            chosen,
            &stats,
            n,
            k,
            n_min,
            n_max,
            TermSelection::ChiSquared,
        ))
    }

    fn assemble(
        vocabulary: Vec<String>,
        stats: &CorpusStats,
        n_docs: usize,
        requested_k: usize,
        n_min: usize,
        n_max: usize,
        selection: TermSelection,
    ) -> Self {
        let truncated = vocabulary.len() < requested_k;
        if truncated {
            log::warn!(
                "only {} distinct terms available, {} requested",
                vocabulary.len(),
                requested_k
            );
        }
        let idf = vocabulary
            .iter()
            .map(|t| smoothed_idf(n_docs, stats.df[t]))
            .collect();
        TfidfModel {
            index: index_of(&vocabulary),
            vocabulary,
            idf,
            n_min,
            n_max,
            requested_k,
            n_docs,
            selection,
            truncated,
        }
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    /// Number of features.
    pub fn k(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn requested_k(&self) -> usize {
        self.requested_k
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn selection(&self) -> TermSelection {
        self.selection
    }

    pub fn ngram_range(&self) -> (usize, usize) {
        (self.n_min, self.n_max)
    }

    /// Raw term counts times idf, L2-normalized. Texts without any
    /// vocabulary term map to the zero vector.
    pub fn vectorize(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.k()];
        let grams = extract_ngrams(text, self.n_min, self.n_max).unwrap_or_default();
        for (term, count) in grams {
            if let Some(&i) = self.index.get(&term) {
                v[i] = count as f64 * self.idf[i];
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

fn check_fit_args(n: usize, k: usize) -> Result<(), ClassifierError> {
    if n == 0 {
        return Err(ClassifierError::EmptyCorpus);
    }
    if k == 0 {
        return Err(ClassifierError::ZeroFeatures);
    }
    Ok(())
}

/// Pearson chi-squared over the (class x present/absent) contingency table.
fn chi_squared(present: &[usize], class_size: &[usize], df: usize, n: usize) -> f64 {
    let n = n as f64;
    let cols = [df as f64, n - df as f64];
    let mut chi = 0.0;
    for (&p, &size) in present.iter().zip(class_size) {
        let observed = [p as f64, (size - p) as f64];
        for (o, col) in observed.iter().zip(cols) {
            let expected = size as f64 * col / n;
            if expected > 0.0 {
                chi += (o - expected).powi(2) / expected;
            }
        }
    }
    chi
}
