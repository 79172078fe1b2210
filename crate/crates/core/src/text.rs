//! Lowercasing word tokenizer and contiguous n-gram counting.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid n-gram range [{n_min}, {n_max}]: need 1 <= n_min <= n_max")]
pub struct NgramRangeError {
    pub n_min: usize,
    pub n_max: usize,
}

/// Lowercased runs of alphanumeric characters; everything else separates.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Counts of every contiguous word n-gram with `n_min <= n <= n_max`.
/// Words inside an n-gram are joined by a single space.
pub fn extract_ngrams(
    text: &str,
    n_min: usize,
    n_max: usize,
) -> Result<BTreeMap<String, usize>, NgramRangeError> {
    if n_min < 1 || n_min > n_max {
        return Err(NgramRangeError { n_min, n_max });
    }
    let words = tokenize(text);
    let mut counts = BTreeMap::new();
    for n in n_min..=n_max.min(words.len()) {
        for gram in words.windows(n) {
            *counts.entry(gram.join(" ")).or_insert(0) += 1;
        }
    }
    Ok(counts)
}
