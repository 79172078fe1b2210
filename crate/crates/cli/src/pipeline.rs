//! The staged pipeline: ingest, classify, tag, split, graph, metrics, eval.
//!
//! Each stage reads the artifacts of the earlier stages from the output
//! directory (and the store), writes its own artifacts, and reports counts
//! and SHA-256 checksums into `manifest.json`. Nothing time- or
//! path-dependent goes into the manifest, so equal inputs give equal bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use igkit_core::classifier::{
    annotate_legal_act, classify_statement, LegalActModel, StatementModel, StatementType,
};
use igkit_core::conllu::Document;
use igkit_core::eval::component_prf;
use igkit_core::graph::{build_hypergraph, EntityLexicon};
use igkit_core::metrics::{metrics_report, MetricsConfig, VisibilityWeights};
use igkit_core::splitter::AtomicStatement;
use igkit_core::store::{
    keyword_filter, read_json, write_atomic, write_json_atomic, CorpusStore, DocumentSummary,
    ReviewStatus, META_KEYWORDS,
};
use igkit_core::tagger::{RuleFile, TaggedStatement, Tagger};
use serde::{Deserialize, Serialize};

use crate::inputs::{corpus_files, gold_stype, read_document, statement_id};
use crate::{sha256_hex, PipelineConfig, PipelineError, Stage};

pub const MANIFEST: &str = "manifest.json";
pub const DOCUMENTS: &str = "documents.json";
pub const CLASSIFIED: &str = "classified.json";
pub const ANNOTATIONS: &str = "annotations.json";
pub const ATOMICS: &str = "atomics.json";
pub const HYPERGRAPH_JSON: &str = "hypergraph.json";
pub const HYPERGRAPH_CSV: &str = "hypergraph.csv";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_JSON: &str = "report.json";
pub const SCATTER: &str = "scatter.json";
pub const EVAL_JSON: &str = "eval.json";
pub const EVAL_TABLE: &str = "eval.txt";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    /// Checksums of the run inputs, keyed by role (corpus files by name).
    pub inputs: BTreeMap<String, String>,
    /// Records in pipeline order.
    pub stages: Vec<StageRecord>,
}

impl Manifest {
    pub fn stage(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == stage)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub counts: BTreeMap<String, u64>,
    /// Output file name to SHA-256.
    pub outputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// One classified statement, as written by the classify stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedStatement {
    pub statement_id: String,
    pub document_id: String,
    /// 1-based sentence position in the document.
    pub sentence: usize,
    pub stype: StatementType,
    /// `gold` from a sentence comment, `model` from the classifier.
    pub source: String,
    pub confidence: f64,
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    store: CorpusStore,
    out: PathBuf,
}

/// Run the enabled stages, or only `only`, and write the manifest. With
/// `only` set the other stage records of an existing manifest are kept.
pub fn run_pipeline(cfg: &PipelineConfig, only: Option<Stage>) -> Result<Manifest, PipelineError> {
    cfg.check_inputs()?;
    let out = cfg.paths.out.clone();
    fs::create_dir_all(&out).map_err(|e| PipelineError::input(&out, e))?;
    let store = CorpusStore::open(cfg.store_root())
        .map_err(|e| PipelineError::input(cfg.store_root(), e))?;
    let run = Run { cfg, store, out };

    let mut manifest = Manifest {
        seed: cfg.seed,
        inputs: input_checksums(cfg)?,
        stages: Vec::new(),
    };
    if only.is_some() {
        let path = run.out.join(MANIFEST);
        if path.exists() {
            let old: Manifest = read_json(&path).map_err(|e| PipelineError::input(&path, e))?;
            manifest.stages = old.stages;
        }
    }
    let toggles = cfg.stages;
    for stage in Stage::ALL {
        let enabled = match only {
            Some(s) => s == stage,
            None => match stage {
                Stage::Ingest => toggles.ingest,
                Stage::Classify => toggles.classify,
                Stage::Tag => toggles.tag,
                Stage::Split => toggles.split,
                Stage::Graph => toggles.graph,
                Stage::Metrics => toggles.metrics,
                Stage::Eval => toggles.eval,
            },
        };
        if !enabled {
            continue;
        }
        log::info!("stage {stage}");
        let record = run.stage(stage)?;
        manifest.stages.retain(|r| r.stage != stage);
        manifest.stages.push(record);
        manifest.stages.sort_by_key(|r| r.stage);
    }
    let path = run.out.join(MANIFEST);
    write_atomic(&path, manifest.to_json().as_bytes())
        .map_err(|e| PipelineError::input(&path, e))?;
    Ok(manifest)
}

fn input_checksums(cfg: &PipelineConfig) -> Result<BTreeMap<String, String>, PipelineError> {
    let mut out = BTreeMap::new();
    let hash = |p: &Path| -> Result<String, PipelineError> {
        Ok(sha256_hex(
            &fs::read(p).map_err(|e| PipelineError::input(p, e))?,
        ))
    };
    for f in corpus_files(&cfg.paths.corpus)? {
        let name = f.file_name().expect("listed file").to_string_lossy();
        out.insert(format!("corpus/{name}"), hash(&f)?);
        let meta = f.with_extension("meta.json");
        if meta.exists() {
            let name = meta.file_name().expect("sidecar").to_string_lossy();
            out.insert(format!("corpus/{name}"), hash(&meta)?);
        }
    }
    let p = &cfg.paths;
    out.insert("lexicon".into(), hash(&p.lexicon)?);
    for (role, path) in [
        ("weights", &p.weights),
        ("rules", &p.rules),
        ("statement_model", &p.statement_model),
        ("legal_act_model", &p.legal_act_model),
        ("gold", &p.gold),
    ] {
        if let Some(path) = path {
            out.insert(role.into(), hash(path)?);
        }
    }
    Ok(out)
}

/// Accumulates a stage's outputs.
struct Recorder {
    stage: Stage,
    out: PathBuf,
    record: StageRecord,
}

impl Recorder {
    fn new(stage: Stage, out: &Path) -> Self {
        Recorder {
            stage,
            out: out.to_path_buf(),
            record: StageRecord {
                stage,
                counts: BTreeMap::new(),
                outputs: BTreeMap::new(),
                note: None,
            },
        }
    }

    fn count(&mut self, key: &str, n: usize) {
        self.record.counts.insert(key.to_string(), n as u64);
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        write_atomic(&self.out.join(name), bytes)
            .map_err(|e| PipelineError::stage(self.stage, None, e))?;
        self.record
            .outputs
            .insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), PipelineError> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| PipelineError::stage(self.stage, None, e))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    fn finish(self) -> StageRecord {
        self.record
    }
}

impl Run<'_> {
    fn stage(&self, stage: Stage) -> Result<StageRecord, PipelineError> {
        let mut rec = Recorder::new(stage, &self.out);
        match stage {
            Stage::Ingest => self.ingest(&mut rec)?,
            Stage::Classify => self.classify(&mut rec)?,
            Stage::Tag => self.tag(&mut rec)?,
            Stage::Split => self.split(&mut rec)?,
            Stage::Graph => self.graph(&mut rec)?,
            Stage::Metrics => self.metrics(&mut rec)?,
            Stage::Eval => self.eval(&mut rec)?,
        }
        Ok(rec.finish())
    }

    fn artifact<T: for<'de> Deserialize<'de>>(
        &self,
        stage: Stage,
        name: &str,
    ) -> Result<T, PipelineError> {
        let path = self.out.join(name);
        if !path.exists() {
            return Err(PipelineError::stage(
                stage,
                None,
                format!("{name} not found; run the earlier stages first"),
            ));
        }
        read_json(&path).map_err(|e| PipelineError::stage(stage, None, e))
    }

    fn documents(&self, stage: Stage) -> Result<Vec<Document>, PipelineError> {
        let ids: Vec<DocumentSummary> = self.artifact(stage, DOCUMENTS)?;
        ids.iter()
            .map(|d| {
                self.store
                    .get_document(&d.id)
                    .map_err(|e| PipelineError::stage(stage, Some(&d.id), e))
            })
            .collect()
    }

    fn lexicon(&self, stage: Stage) -> Result<EntityLexicon, PipelineError> {
        EntityLexicon::load(&self.cfg.paths.lexicon)
            .map_err(|e| PipelineError::stage(stage, None, e))
    }

    fn ingest(&self, rec: &mut Recorder) -> Result<(), PipelineError> {
        let mut summaries = Vec::new();
        let (mut sentences, mut tokens) = (0, 0);
        for path in corpus_files(&self.cfg.paths.corpus)? {
            let name = path
                .file_name()
                .expect("listed file")
                .to_string_lossy()
                .into_owned();
            let doc = read_document(&path)
                .map_err(|e| PipelineError::stage(Stage::Ingest, Some(&name), e))?;
            self.store
                .upsert_document(&doc)
                .map_err(|e| PipelineError::stage(Stage::Ingest, Some(&doc.id), e))?;
            sentences += doc.sentences.len();
            tokens += doc.sentences.iter().map(|s| s.len()).sum::<usize>();
            summaries.push(DocumentSummary {
                id: doc.id.clone(),
                metadata: doc.metadata.clone(),
                sentences: doc.sentences.len(),
            });
        }
        rec.count("documents", summaries.len());
        rec.count("sentences", sentences);
        rec.count("tokens", tokens);
        rec.write_json(DOCUMENTS, &summaries)
    }

    fn classify(&self, rec: &mut Recorder) -> Result<(), PipelineError> {
        let stage = Stage::Classify;
        let fail = |id: Option<&str>, e: &dyn std::fmt::Display| PipelineError::stage(stage, id, e);
        let statement_model = self
            .cfg
            .paths
            .statement_model
            .as_ref()
            .map(|p| StatementModel::load(p).map_err(|e| PipelineError::input(p, e)))
            .transpose()?;
        let legal_model = self
            .cfg
            .paths
            .legal_act_model
            .as_ref()
            .map(|p| LegalActModel::load(p).map_err(|e| PipelineError::input(p, e)))
            .transpose()?;
        let keywords: Vec<&str> = self.cfg.keywords.iter().map(String::as_str).collect();

        let mut out = Vec::new();
        let (mut legal, mut keyword_docs) = (0, 0);
        for mut doc in self.documents(stage)? {
            let before = doc.clone();
            if let Some(m) = &legal_model {
                if annotate_legal_act(&mut doc, m).is_legal_act {
                    legal += 1;
                }
            }
            if !keywords.is_empty() {
                let hit = keyword_filter(&doc, &keywords);
                keyword_docs += usize::from(hit);
                doc.metadata.insert(META_KEYWORDS.into(), hit.to_string());
            }
            if doc != before {
                self.store
                    .update_document(&doc)
                    .map_err(|e| fail(Some(&doc.id), &e))?;
            }
            for (i, tree) in doc.sentences.iter().enumerate() {
                let id = statement_id(&doc.id, i + 1);
                let (stype, source, confidence) = match gold_stype(tree) {
                    Some(Ok(t)) => (t, "gold", 1.0),
                    Some(Err(e)) => return Err(fail(Some(&id), &e)),
                    None => match &statement_model {
                        Some(m) => {
                            let c = classify_statement(&tree.text(), m);
                            (c.stype, "model", c.confidence)
                        }
                        None => {
                            return Err(fail(
                                Some(&id),
                                &"no gold type and no statement-type model configured",
                            ))
                        }
                    },
                };
                out.push(ClassifiedStatement {
                    statement_id: id,
                    document_id: doc.id.clone(),
                    sentence: i + 1,
                    stype,
                    source: source.into(),
                    confidence,
                });
            }
        }
        let n = |f: &dyn Fn(&ClassifiedStatement) -> bool| out.iter().filter(|c| f(c)).count();
        rec.count("statements", out.len());
        rec.count("regulative", n(&|c| c.stype == StatementType::Regulative));
        rec.count(
            "constitutive",
            n(&|c| c.stype == StatementType::Constitutive),
        );
        rec.count("gold_typed", n(&|c| c.source == "gold"));
        rec.count("model_typed", n(&|c| c.source == "model"));
        if legal_model.is_some() {
            rec.count("legal_acts", legal);
        }
        if !keywords.is_empty() {
            rec.count("keyword_documents", keyword_docs);
        }
        rec.write_json(CLASSIFIED, &out)
    }

    fn tag(&self, rec: &mut Recorder) -> Result<(), PipelineError> {
        let stage = Stage::Tag;
        let tagger = match &self.cfg.paths.rules {
            Some(p) => RuleFile::load(p)
                .and_then(Tagger::from_rule_file)
                .map_err(|e| PipelineError::input(p, e))?,
            None => Tagger::default(),
        };
        let classified: Vec<ClassifiedStatement> = self.artifact(stage, CLASSIFIED)?;
        let mut docs: BTreeMap<String, Document> = BTreeMap::new();
        let mut out = Vec::with_capacity(classified.len());
        for c in &classified {
            let fail =
                |e: &dyn std::fmt::Display| PipelineError::stage(stage, Some(&c.statement_id), e);
            if !docs.contains_key(&c.document_id) {
                let d = self
                    .store
                    .get_document(&c.document_id)
                    .map_err(|e| fail(&e))?;
                docs.insert(c.document_id.clone(), d);
            }
            let tree = docs[&c.document_id]
                .sentences
                .get(c.sentence - 1)
                .ok_or_else(|| fail(&"sentence index out of range"))?;
            let st = tagger.route_and_tag(tree, c.stype).with_id(&c.statement_id);
            let record = igkit_core::store::AnnotationRecord::auto(&c.document_id, c.sentence, st);
            let unchanged = self
                .store
                .get_auto_annotation(&c.statement_id)
                .is_ok_and(|old| old == record);
            if !unchanged {
                self.store.put_annotation(&record).map_err(|e| fail(&e))?;
            }
            out.push(record.statement);
        }
        let flagged = |f: &dyn Fn(&TaggedStatement) -> bool| out.iter().filter(|s| f(s)).count();
        rec.count("statements", out.len());
        rec.count(
            "labelled_tokens",
            out.iter()
                .flat_map(|s| &s.labels)
                .filter(|l| !l.is_none())
                .count(),
        );
        rec.count(
            "precondition_failed",
            flagged(&|s| s.flags.precondition_failed),
        );
        rec.count("passive", flagged(&|s| s.flags.passive));
        rec.count("incomplete", flagged(&|s| s.flags.incomplete));
        rec.write_json(ANNOTATIONS, &out)
    }

    fn split(&self, rec: &mut Recorder) -> Result<(), PipelineError> {
        let stage = Stage::Split;
        let tagged: Vec<TaggedStatement> = self.artifact(stage, ANNOTATIONS)?;
        let mut atomics = Vec::new();
        let (mut corrected, mut diagnostics) = (0, 0);
        for st in &tagged {
            // Reviewed view: expert corrections take precedence.
            let view = self
                .store
                .get_annotation(&st.id)
                .map_err(|e| PipelineError::stage(stage, Some(&st.id), e))?;
            corrected += usize::from(view.review_status == ReviewStatus::ExpertCorrected);
            diagnostics += view
                .atomics
                .iter()
                .filter(|a| a.diagnostic.is_some())
                .count();
            atomics.extend(view.atomics);
        }
        rec.count("statements", tagged.len());
        rec.count("atomic_statements", atomics.len());
        rec.count("expert_corrected", corrected);
        rec.count("diagnostics", diagnostics);
        rec.write_json(ATOMICS, &atomics)
    }

    fn graph(&self, rec: &mut Recorder) -> Result<(), PipelineError> {
        let atomics: Vec<AtomicStatement> = self.artifact(Stage::Graph, ATOMICS)?;
        let h = build_hypergraph(
            &atomics,
            &self.lexicon(Stage::Graph)?,
            self.cfg.metrics.hyperedge_unit,
        );
        rec.count(
            "connected_vertices",
            h.degrees().iter().filter(|&&d| d > 0).count(),
        );
        rec.count("hyperedges", h.edges().len());
        rec.write(HYPERGRAPH_JSON, (h.to_json() + "\n").as_bytes())?;
        rec.write(HYPERGRAPH_CSV, h.to_csv().as_bytes())
    }

    fn metrics(&self, rec: &mut Recorder) -> Result<(), PipelineError> {
        let stage = Stage::Metrics;
        let atomics: Vec<AtomicStatement> = self.artifact(stage, ATOMICS)?;
        let lexicon = self.lexicon(stage)?;
        let weights = match &self.cfg.paths.weights {
            Some(p) => VisibilityWeights::load(p).map_err(|e| PipelineError::input(p, e))?,
            None => VisibilityWeights::default(),
        };
        let mcfg = MetricsConfig {
            weights,
            s: self.cfg.metrics.s,
            denominator: self.cfg.metrics.denominator,
        };
        let h = build_hypergraph(&atomics, &lexicon, self.cfg.metrics.hyperedge_unit);
        let report = metrics_report(&h, &atomics, &lexicon, &mcfg)
            .map_err(|e| PipelineError::stage(stage, None, e))?;
        rec.count(
            "entities_mentioned",
            report
                .rows
                .iter()
                .filter(|r| !r.occurrences.is_empty())
                .count(),
        );
        rec.count("denominator", report.statements as usize);
        rec.count("diagnostics", report.diagnostics.len());
        rec.write(REPORT_CSV, report.to_csv().as_bytes())?;
        rec.write(REPORT_JSON, (report.to_json() + "\n").as_bytes())?;
        rec.write_json(SCATTER, &report.scatter())
    }

    fn eval(&self, rec: &mut Recorder) -> Result<(), PipelineError> {
        let stage = Stage::Eval;
        let Some(gold_path) = &self.cfg.paths.gold else {
            rec.record.note = Some("skipped: no gold annotations configured".into());
            return Ok(());
        };
        let gold: Vec<TaggedStatement> =
            read_json(gold_path).map_err(|e| PipelineError::input(gold_path, e))?;
        let ids: BTreeSet<&str> = gold.iter().map(|g| g.id.as_str()).collect();
        let pred: Vec<TaggedStatement> = self
            .artifact::<Vec<TaggedStatement>>(stage, ANNOTATIONS)?
            .into_iter()
            .filter(|p| ids.contains(p.id.as_str()))
            .collect();
        let report = component_prf(&pred, &gold, None).map_err(|e| {
            let id = match &e {
                igkit_core::eval::AlignmentError::MissingPrediction(id)
                | igkit_core::eval::AlignmentError::UnexpectedPrediction(id)
                | igkit_core::eval::AlignmentError::Duplicate(id)
                | igkit_core::eval::AlignmentError::Token { id, .. }
                | igkit_core::eval::AlignmentError::Length { id, .. } => id.clone(),
            };
            PipelineError::stage(stage, Some(&id), e)
        })?;
        rec.count("statements", gold.len());
        rec.count("tokens", gold.iter().map(|g| g.labels.len()).sum());
        rec.write(EVAL_JSON, (report.to_json() + "\n").as_bytes())?;
        rec.write(EVAL_TABLE, report.to_table().as_bytes())
    }
}

/// Write `value` as the pipeline would; used by the subcommands.
pub fn write_output<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    write_json_atomic(path, value).map_err(|e| PipelineError::input(path, e))
}
