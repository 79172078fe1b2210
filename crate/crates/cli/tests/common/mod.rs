#![allow(dead_code)]

use std::path::{Path, PathBuf};

use igkit::inputs::statement_examples;
use igkit::PipelineConfig;
use igkit_core::classifier::{StatementModel, TrainConfig};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

/// Train the fixture statement model into `dir`.
pub fn train_model(dir: &Path, seed: u64) -> PathBuf {
    let (texts, labels) = statement_examples(&fixtures().join("train_statements.jsonl")).unwrap();
    let texts: Vec<&str> = texts.iter().map(String::as_str).collect();
    let model = StatementModel::train(&texts, &labels, &TrainConfig::statement_type(seed)).unwrap();
    let path = dir.join("statement_model.json");
    model.save(&path).unwrap();
    path
}

/// The fixture config with its output redirected into `work` and a freshly
/// trained statement model.
pub fn fixture_config(work: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::load(&fixtures().join("run.toml")).unwrap();
    cfg.paths.out = work.join("out");
    cfg.paths.statement_model = Some(train_model(work, cfg.seed));
    cfg
}

/// Three gold-typed statements, no eval.
pub fn review_config(work: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(
        fixtures().join("review"),
        work.join("out"),
        data("lexicon_2003_convention.json"),
    );
    cfg.paths.weights = Some(data("weights.json"));
    cfg
}
