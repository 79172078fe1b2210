//! Institutional Grammar annotation of dependency-parsed legal text.

pub mod classifier;
pub mod conllu;
pub mod eval;
pub mod graph;
pub mod metrics;
pub mod splitter;
pub mod store;
pub mod tagger;
pub mod text;

#[cfg(test)]
mod testutil;
