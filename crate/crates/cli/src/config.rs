//! Pipeline configuration, read from TOML.
//!
//! Relative paths are resolved against the directory holding the config
//! file.

use std::path::{Path, PathBuf};

use igkit_core::graph::HyperedgeUnit;
use igkit_core::metrics::Denominator;
use serde::{Deserialize, Serialize};

use crate::PipelineError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    pub paths: Paths,
    #[serde(default)]
    pub stages: StageToggles,
    #[serde(default)]
    pub metrics: MetricsSection,
    /// Keywords for the document keyword flag; empty disables the flag.
    #[serde(default)]
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// Directory of `.conllu` files, one document per file.
    pub corpus: PathBuf,
    /// Stage artifacts and the run manifest.
    pub out: PathBuf,
    /// Corpus store root; defaults to `<out>/store`.
    #[serde(default)]
    pub store: Option<PathBuf>,
    pub lexicon: PathBuf,
    /// Visibility weights; built-in 1..6 when absent.
    #[serde(default)]
    pub weights: Option<PathBuf>,
    /// Tagger rule file; built-in rules when absent.
    #[serde(default)]
    pub rules: Option<PathBuf>,
    #[serde(default)]
    pub statement_model: Option<PathBuf>,
    #[serde(default)]
    pub legal_act_model: Option<PathBuf>,
    /// Gold annotations (JSON list of tagged statements) for the eval stage.
    #[serde(default)]
    pub gold: Option<PathBuf>,
    /// Static files served next to the API.
    #[serde(default)]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageToggles {
    #[serde(default = "yes")]
    pub ingest: bool,
    #[serde(default = "yes")]
    pub classify: bool,
    #[serde(default = "yes")]
    pub tag: bool,
    #[serde(default = "yes")]
    pub split: bool,
    #[serde(default = "yes")]
    pub graph: bool,
    #[serde(default = "yes")]
    pub metrics: bool,
    #[serde(default = "yes")]
    pub eval: bool,
}

fn yes() -> bool {
    true
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles {
            ingest: true,
            classify: true,
            tag: true,
            split: true,
            graph: true,
            metrics: true,
            eval: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    #[serde(default = "one")]
    pub s: usize,
    #[serde(default)]
    pub denominator: Denominator,
    #[serde(default)]
    pub hyperedge_unit: HyperedgeUnit,
}

fn one() -> usize {
    1
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection {
            s: 1,
            denominator: Denominator::Atomic,
            hyperedge_unit: HyperedgeUnit::Atomic,
        }
    }
}

impl PipelineConfig {
    /// Minimal config with built-in rules and weights.
    pub fn new(
        corpus: impl Into<PathBuf>,
        out: impl Into<PathBuf>,
        lexicon: impl Into<PathBuf>,
    ) -> Self {
        PipelineConfig {
            seed: 0,
            paths: Paths {
                corpus: corpus.into(),
                out: out.into(),
                store: None,
                lexicon: lexicon.into(),
                weights: None,
                rules: None,
                statement_model: None,
                legal_act_model: None,
                gold: None,
                ui_dir: None,
            },
            stages: StageToggles::default(),
            metrics: MetricsSection::default(),
            keywords: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::input(path, e))?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| PipelineError::input(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut self.paths;
        fix(&mut paths.corpus);
        fix(&mut paths.out);
        fix(&mut paths.lexicon);
        for p in [
            &mut paths.store,
            &mut paths.weights,
            &mut paths.rules,
            &mut paths.statement_model,
            &mut paths.legal_act_model,
            &mut paths.gold,
            &mut paths.ui_dir,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn store_root(&self) -> PathBuf {
        self.paths
            .store
            .clone()
            .unwrap_or_else(|| self.paths.out.join("store"))
    }

    /// Every referenced input must exist before a run starts.
    pub fn check_inputs(&self) -> Result<(), PipelineError> {
        let p = &self.paths;
        let required = [Some(&p.corpus), Some(&p.lexicon)];
        let optional = [
            p.weights.as_ref(),
            p.rules.as_ref(),
            p.statement_model.as_ref(),
            p.legal_act_model.as_ref(),
            p.gold.as_ref(),
        ];
        for path in required.into_iter().chain(optional).flatten() {
            if !path.exists() {
                return Err(PipelineError::input(
                    path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "missing input"),
                ));
            }
        }
        if self.metrics.s == 0 {
            return Err(PipelineError::Input {
                path: "metrics.s".into(),
                message: "s must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            r#"
seed = 7
[paths]
corpus = "corpus"
out = "/abs/out"
lexicon = "lex.json"
[stages]
eval = false
[metrics]
denominator = "statement"
"#,
        )
        .unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.paths.corpus, dir.path().join("corpus"));
        assert_eq!(cfg.paths.out, PathBuf::from("/abs/out"));
        assert_eq!(cfg.store_root(), PathBuf::from("/abs/out/store"));
        assert!(!cfg.stages.eval && cfg.stages.tag);
        assert_eq!(cfg.metrics.denominator, Denominator::Statement);
        assert_eq!(cfg.metrics.s, 1);
        assert_eq!(cfg.metrics.hyperedge_unit, HyperedgeUnit::Atomic);
    }

    #[test]
    fn unknown_keys_and_missing_files_are_input_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(
            &path,
            "[paths]\ncorpus='c'\nout='o'\nlexicon='l'\nbogus=1\n",
        )
        .unwrap();
        assert!(matches!(
            PipelineConfig::load(&path),
            Err(PipelineError::Input { .. })
        ));

        let cfg = PipelineConfig::new(
            dir.path().join("none"),
            dir.path(),
            dir.path().join("l.json"),
        );
        assert!(matches!(
            cfg.check_inputs(),
            Err(PipelineError::Input { .. })
        ));
    }
}
