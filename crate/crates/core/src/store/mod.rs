//! Directory-backed storage for documents, annotations, expert corrections
//! and models.
//!
//! ```text
//! root/
//!   documents/<doc>.json
//!   annotations/<statement>.json    tagger output, never edited by review
//!   corrections/<statement>.json    expert overlays
//!   models/<name>.json
//!   index.json                      derived search index
//! ```
//!
//! Every file is replaced by an atomic rename. A single writer lock
//! serializes mutations; readers take a snapshot of the index.

mod index;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use index::{
    keyword_filter, CorpusIndex, Posting, SearchFilters, SearchHit, META_COUNTRY, META_DATE,
    META_KEYWORDS,
};

use crate::classifier::{StatementType, TextModel};
use crate::conllu::Document;
use crate::splitter::{expand, AtomicStatement};
use crate::tagger::{IgLabel, TaggedStatement};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{kind} {id:?} not found")]
    NotFound { kind: &'static str, id: String },
    #[error("document {0:?} already exists")]
    Conflict(String),
    #[error("invalid id {0:?}")]
    InvalidId(String),
    #[error("statement {statement:?}: {problem}")]
    Invalid { statement: String, problem: String },
    #[error("statement {statement:?}: labels not allowed: {}", format_labels(.labels))]
    InvalidLabels {
        statement: String,
        /// 1-based token index and offending label.
        labels: Vec<(usize, String)>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Model(#[from] crate::classifier::ClassifierError),
}

fn format_labels(labels: &[(usize, String)]) -> String {
    labels
        .iter()
        .map(|(i, l)| format!("{l} at token {i}"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReviewStatus {
    #[default]
    Auto,
    ExpertCorrected,
}

/// Tagger output for one statement, or its corrected view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub document_id: String,
    pub statement_id: String,
    /// Position of the statement in its document.
    pub sentence: usize,
    pub stype: StatementType,
    pub statement: TaggedStatement,
    pub atomics: Vec<AtomicStatement>,
    #[serde(default)]
    pub review_status: ReviewStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reviewer_note: Option<String>,
}

impl AnnotationRecord {
    /// Record for freshly tagged output; atomics are derived here.
    pub fn auto(document_id: &str, sentence: usize, statement: TaggedStatement) -> Self {
        AnnotationRecord {
            document_id: document_id.to_string(),
            statement_id: statement.id.clone(),
            sentence,
            stype: statement.stype,
            atomics: expand(&statement),
            statement,
            review_status: ReviewStatus::Auto,
            reviewer_note: None,
        }
    }

    fn check(&self) -> Result<(), StoreError> {
        let bad = |problem: &str| StoreError::Invalid {
            statement: self.statement_id.clone(),
            problem: problem.to_string(),
        };
        if self.statement.id != self.statement_id {
            return Err(bad("statement id does not match the tagged statement"));
        }
        if self.statement.stype != self.stype {
            return Err(bad("statement type does not match the tagged statement"));
        }
        if self.statement.labels.len() != self.statement.tree.len()
            || self.statement.provenance.len() != self.statement.tree.len()
        {
            return Err(bad("label vector length differs from token count"));
        }
        Ok(())
    }
}

/// Expert correction overlay. Only labels, statement type and the note can
/// be changed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Correction {
    pub labels: Vec<IgLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stype: Option<StatementType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Correction {
    /// Apply to an auto record, returning the corrected view.
    pub fn apply(&self, auto: &AnnotationRecord) -> Result<AnnotationRecord, StoreError> {
        let stype = self.stype.unwrap_or(auto.stype);
        let n = auto.statement.tree.len();
        if self.labels.len() != n {
            return Err(StoreError::Invalid {
                statement: auto.statement_id.clone(),
                problem: format!("{} labels for {n} tokens", self.labels.len()),
            });
        }
        let bad: Vec<(usize, String)> = self
            .labels
            .iter()
            .enumerate()
            .filter(|(_, l)| !l.allowed_in(stype))
            .map(|(i, l)| (i + 1, l.to_string()))
            .collect();
        if !bad.is_empty() {
            return Err(StoreError::InvalidLabels {
                statement: auto.statement_id.clone(),
                labels: bad,
            });
        }
        let mut st = auto.statement.clone();
        st.stype = stype;
        for (i, &l) in self.labels.iter().enumerate() {
            if st.labels[i] != l {
                st.labels[i] = l;
                st.provenance[i] = None;
            }
        }
        Ok(AnnotationRecord {
            document_id: auto.document_id.clone(),
            statement_id: auto.statement_id.clone(),
            sentence: auto.sentence,
            stype,
            atomics: expand(&st),
            statement: st,
            review_status: ReviewStatus::ExpertCorrected,
            reviewer_note: self.note.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentSummary {
    pub id: String,
    pub metadata: BTreeMap<String, String>,
    pub sentences: usize,
}

/// Ids double as file names: ASCII letters, digits, `.`, `_` and `-`, not
/// starting with a dot.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'))
}

fn check_id(id: &str) -> Result<(), StoreError> {
    if valid_id(id) {
        Ok(())
    } else {
        Err(StoreError::InvalidId(id.to_string()))
    }
}

/// Read and decode a JSON file.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let bytes = fs::read(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|source| StoreError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Write `bytes` next to `path` and rename it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let io = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Pretty JSON with a trailing newline, written atomically.
pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| StoreError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn json_stems(dir: &Path) -> Result<Vec<String>, StoreError> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => {
            return Err(StoreError::Io {
                path: dir.to_path_buf(),
                source,
            })
        }
    };
    let mut out = Vec::new();
    for e in entries {
        let e = e.map_err(|source| StoreError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let name = e.file_name();
        let name = name.to_string_lossy();
        if let Some(stem) = name.strip_suffix(".json") {
            if valid_id(stem) {
                out.push(stem.to_string());
            }
        }
    }
    out.sort();
    Ok(out)
}

pub struct CorpusStore {
    root: PathBuf,
    index: RwLock<Arc<CorpusIndex>>,
    /// Statement id to document id.
    statements: RwLock<BTreeMap<String, String>>,
    writer: Mutex<()>,
}

impl CorpusStore {
    /// Open or create a store. The index is loaded when present, rebuilt
    /// otherwise.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        for sub in ["documents", "annotations", "corrections", "models"] {
            let p = root.join(sub);
            fs::create_dir_all(&p).map_err(|source| StoreError::Io { path: p, source })?;
        }
        let store = CorpusStore {
            root,
            index: RwLock::new(Arc::new(CorpusIndex::default())),
            statements: RwLock::new(BTreeMap::new()),
            writer: Mutex::new(()),
        };
        let index_path = store.root.join("index.json");
        match read_json::<CorpusIndex>(&index_path) {
            Ok(idx) if idx.len() == store.list_documents()?.len() => {
                *store.index.write() = Arc::new(idx);
            }
            _ => store.rebuild_index()?,
        }
        let mut map = BTreeMap::new();
        for sid in json_stems(&store.root.join("annotations"))? {
            let rec: AnnotationRecord = read_json(&store.annotation_path(&sid))?;
            map.insert(sid, rec.document_id);
        }
        *store.statements.write() = map;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn document_path(&self, id: &str) -> PathBuf {
        self.root.join("documents").join(format!("{id}.json"))
    }

    fn annotation_path(&self, id: &str) -> PathBuf {
        self.root.join("annotations").join(format!("{id}.json"))
    }

    fn correction_path(&self, id: &str) -> PathBuf {
        self.root.join("corrections").join(format!("{id}.json"))
    }

    pub fn model_path(&self, name: &str) -> PathBuf {
        self.root.join("models").join(format!("{name}.json"))
    }

    /// Current index snapshot.
    pub fn index(&self) -> Arc<CorpusIndex> {
        self.index.read().clone()
    }

    /// Rebuild the index from the stored documents and swap it in.
    pub fn rebuild_index(&self) -> Result<(), StoreError> {
        let _w = self.writer.lock();
        let mut idx = CorpusIndex::default();
        for id in self.list_documents()? {
            idx.insert(&self.get_document(&id)?);
        }
        self.swap_index(idx)
    }

    fn swap_index(&self, idx: CorpusIndex) -> Result<(), StoreError> {
        write_json_atomic(&self.root.join("index.json"), &idx)?;
        *self.index.write() = Arc::new(idx);
        Ok(())
    }

    pub fn put_document(&self, doc: &Document) -> Result<(), StoreError> {
        check_id(&doc.id)?;
        let _w = self.writer.lock();
        let path = self.document_path(&doc.id);
        if path.exists() {
            return Err(StoreError::Conflict(doc.id.clone()));
        }
        write_json_atomic(&path, doc)?;
        let mut idx = (*self.index()).clone();
        idx.insert(doc);
        self.swap_index(idx)
    }

    /// Replace a stored document, e.g. after adding metadata.
    pub fn update_document(&self, doc: &Document) -> Result<(), StoreError> {
        check_id(&doc.id)?;
        let _w = self.writer.lock();
        let path = self.document_path(&doc.id);
        if !path.exists() {
            return Err(StoreError::NotFound {
                kind: "document",
                id: doc.id.clone(),
            });
        }
        write_json_atomic(&path, doc)?;
        let mut idx = (*self.index()).clone();
        idx.insert(doc);
        self.swap_index(idx)
    }

    /// Insert or replace; a no-op when the stored copy is identical.
    /// Returns whether anything was written.
    pub fn upsert_document(&self, doc: &Document) -> Result<bool, StoreError> {
        match self.get_document(&doc.id) {
            Ok(old) if old == *doc => Ok(false),
            Ok(_) => self.update_document(doc).map(|_| true),
            Err(StoreError::NotFound { .. }) => self.put_document(doc).map(|_| true),
            Err(e) => Err(e),
        }
    }

    pub fn get_document(&self, id: &str) -> Result<Document, StoreError> {
        check_id(id)?;
        let path = self.document_path(id);
        if !path.exists() {
            return Err(StoreError::NotFound {
                kind: "document",
                id: id.to_string(),
            });
        }
        read_json(&path)
    }

    pub fn list_documents(&self) -> Result<Vec<String>, StoreError> {
        json_stems(&self.root.join("documents"))
    }

    pub fn document_summaries(&self) -> Result<Vec<DocumentSummary>, StoreError> {
        self.list_documents()?
            .into_iter()
            .map(|id| {
                let d = self.get_document(&id)?;
                Ok(DocumentSummary {
                    id: d.id,
                    metadata: d.metadata,
                    sentences: d.sentences.len(),
                })
            })
            .collect()
    }

    /// Store tagger output, replacing earlier auto output for the statement.
    /// Existing corrections are kept.
    pub fn put_annotation(&self, record: &AnnotationRecord) -> Result<(), StoreError> {
        check_id(&record.statement_id)?;
        record.check()?;
        let _w = self.writer.lock();
        if let Some(doc) = self.statements.read().get(&record.statement_id) {
            if *doc != record.document_id {
                return Err(StoreError::Invalid {
                    statement: record.statement_id.clone(),
                    problem: format!("already belongs to document {doc:?}"),
                });
            }
        }
        write_json_atomic(&self.annotation_path(&record.statement_id), record)?;
        self.statements
            .write()
            .insert(record.statement_id.clone(), record.document_id.clone());
        Ok(())
    }

    /// Tagger output without corrections.
    pub fn get_auto_annotation(&self, statement_id: &str) -> Result<AnnotationRecord, StoreError> {
        check_id(statement_id)?;
        if !self.statements.read().contains_key(statement_id) {
            return Err(StoreError::NotFound {
                kind: "statement",
                id: statement_id.to_string(),
            });
        }
        read_json(&self.annotation_path(statement_id))
    }

    pub fn get_correction(&self, statement_id: &str) -> Result<Option<Correction>, StoreError> {
        check_id(statement_id)?;
        let path = self.correction_path(statement_id);
        if path.exists() {
            read_json(&path).map(Some)
        } else {
            Ok(None)
        }
    }

    /// The reviewed view: auto output with any correction applied.
    pub fn get_annotation(&self, statement_id: &str) -> Result<AnnotationRecord, StoreError> {
        let auto = self.get_auto_annotation(statement_id)?;
        match self.get_correction(statement_id)? {
            Some(c) => c.apply(&auto),
            None => Ok(auto),
        }
    }

    /// Validate and store a correction; returns the corrected view.
    pub fn correct(
        &self,
        statement_id: &str,
        correction: &Correction,
    ) -> Result<AnnotationRecord, StoreError> {
        let _w = self.writer.lock();
        let auto = self.get_auto_annotation(statement_id)?;
        let view = correction.apply(&auto)?;
        write_json_atomic(&self.correction_path(statement_id), correction)?;
        Ok(view)
    }

    /// Reviewed views of one document's statements, in document order.
    pub fn annotations(&self, document_id: &str) -> Result<Vec<AnnotationRecord>, StoreError> {
        check_id(document_id)?;
        if !self.document_path(document_id).exists() {
            return Err(StoreError::NotFound {
                kind: "document",
                id: document_id.to_string(),
            });
        }
        let ids: Vec<String> = self
            .statements
            .read()
            .iter()
            .filter(|(_, d)| *d == document_id)
            .map(|(s, _)| s.clone())
            .collect();
        let mut out = ids
            .iter()
            .map(|s| self.get_annotation(s))
            .collect::<Result<Vec<_>, _>>()?;
        out.sort_by(|a, b| (a.sentence, &a.statement_id).cmp(&(b.sentence, &b.statement_id)));
        Ok(out)
    }

    /// Reviewed views of every statement, by document then position.
    pub fn all_annotations(&self) -> Result<Vec<AnnotationRecord>, StoreError> {
        let docs: Vec<String> = {
            let map = self.statements.read();
            let mut d: Vec<String> = map.values().cloned().collect();
            d.sort();
            d.dedup();
            d
        };
        let mut out = Vec::new();
        for d in docs {
            out.extend(self.annotations(&d)?);
        }
        Ok(out)
    }

    pub fn search(&self, query: &str, filters: &SearchFilters) -> Vec<SearchHit> {
        self.index().search(query, filters)
    }

    pub fn put_model(&self, name: &str, model: &TextModel) -> Result<(), StoreError> {
        check_id(name)?;
        let _w = self.writer.lock();
        write_json_atomic(&self.model_path(name), model)
    }

    pub fn get_model(&self, name: &str) -> Result<TextModel, StoreError> {
        check_id(name)?;
        let path = self.model_path(name);
        if !path.exists() {
            return Err(StoreError::NotFound {
                kind: "model",
                id: name.to_string(),
            });
        }
        Ok(TextModel::load(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagger::Tagger;
    use crate::testutil::fixture;

    fn doc(id: &str, text: &str) -> Document {
        let conllu: String = text
            .split_whitespace()
            .enumerate()
            .map(|(i, w)| {
                let (head, rel) = if i == 0 { (0, "root") } else { (1, "dep") };
                format!("{}\t{w}\t{w}\tX\t_\t_\t{head}\t{rel}\t_\t_\n", i + 1)
            })
            .collect();
        Document::from_conllu(id, "", &conllu).unwrap()
    }

    fn with_request(store: &CorpusStore) -> AnnotationRecord {
        let tree = fixture("request");
        let mut d = Document {
            id: "conv".into(),
            source_path: String::new(),
            metadata: BTreeMap::new(),
            sentences: vec![tree.clone()],
        };
        d.metadata.insert("legal_act".into(), "true".into());
        store.put_document(&d).unwrap();
        let st = Tagger::default().tag_regulative(&tree).with_id("conv.s1");
        let rec = AnnotationRecord::auto("conv", 1, st);
        store.put_annotation(&rec).unwrap();
        rec
    }

    #[test]
    fn document_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let store = CorpusStore::open(dir.path()).unwrap();
        let d = doc("d1", "the fund");
        store.put_document(&d).unwrap();
        assert_eq!(store.get_document("d1").unwrap(), d);
        assert!(matches!(
            store.put_document(&d),
            Err(StoreError::Conflict(_))
        ));
        assert!(matches!(
            store.get_document("nope"),
            Err(StoreError::NotFound { .. })
        ));
        assert!(matches!(
            store.get_document("../x"),
            Err(StoreError::InvalidId(_))
        ));
        assert!(matches!(
            store.put_document(&doc("a/b", "x")),
            Err(StoreError::InvalidId(_))
        ));
    }

    #[test]
    fn upsert_is_a_no_op_for_equal_documents() {
        let dir = tempfile::tempdir().unwrap();
        let store = CorpusStore::open(dir.path()).unwrap();
        let mut d = doc("d1", "the fund");
        assert!(store.upsert_document(&d).unwrap());
        assert!(!store.upsert_document(&d).unwrap());
        d.metadata.insert("country".into(), "FR".into());
        assert!(store.upsert_document(&d).unwrap());
        assert_eq!(store.get_document("d1").unwrap(), d);
        let fr = SearchFilters {
            country: Some("FR".into()),
            ..Default::default()
        };
        assert_eq!(store.search("fund", &fr).len(), 1);
    }

    #[test]
    fn hundred_documents_listed() {
        let dir = tempfile::tempdir().unwrap();
        let store = CorpusStore::open(dir.path()).unwrap();
        for i in 0..100 {
            store
                .put_document(&doc(&format!("d{i:03}"), "word"))
                .unwrap();
        }
        assert_eq!(store.list_documents().unwrap().len(), 100);
        assert_eq!(store.index().len(), 100);
    }

    #[test]
    fn reopened_index_equals_rebuild() {
        let dir = tempfile::tempdir().unwrap();
        {
            let store = CorpusStore::open(dir.path()).unwrap();
            store.put_document(&doc("a", "heritage fund")).unwrap();
            store
                .put_document(&doc("b", "heritage heritage list"))
                .unwrap();
        }
        let store = CorpusStore::open(dir.path()).unwrap();
        let loaded = store.search("heritage", &SearchFilters::default());
        let snapshot = store.index();
        store.rebuild_index().unwrap();
        assert_eq!(*store.index(), *snapshot);
        assert_eq!(store.search("heritage", &SearchFilters::default()), loaded);
        assert_eq!(loaded[0].id, "b");

        fs::remove_file(dir.path().join("index.json")).unwrap();
        let again = CorpusStore::open(dir.path()).unwrap();
        assert_eq!(again.search("heritage", &SearchFilters::default()), loaded);
    }

    #[test]
    fn correction_overlay() {
        let dir = tempfile::tempdir().unwrap();
        let store = CorpusStore::open(dir.path()).unwrap();
        let rec = with_request(&store);
        assert_eq!(
            store.get_annotation("conv.s1").unwrap().review_status,
            ReviewStatus::Auto
        );

        let mut labels = rec.statement.labels.clone();
        // "to the Committee" from B-ind to CTX.
        for i in 14..=16 {
            labels[i - 1] = IgLabel::Ctx;
        }
        let c = Correction {
            labels: labels.clone(),
            stype: None,
            note: Some("agent".into()),
        };
        let view = store.correct("conv.s1", &c).unwrap();
        assert_eq!(view.review_status, ReviewStatus::ExpertCorrected);
        assert_eq!(view.statement.labels, labels);
        assert!(view.statement.provenance[13].is_none());
        assert!(view.statement.provenance[0].is_some());
        assert_eq!(store.get_annotation("conv.s1").unwrap(), view);
        // Auto output untouched.
        assert_eq!(store.get_auto_annotation("conv.s1").unwrap(), rec);
        // Overlay survives a reopen.
        let reopened = CorpusStore::open(dir.path()).unwrap();
        assert_eq!(reopened.annotations("conv").unwrap(), [view]);
    }

    #[test]
    fn invalid_correction_lists_labels() {
        let dir = tempfile::tempdir().unwrap();
        let store = CorpusStore::open(dir.path()).unwrap();
        let rec = with_request(&store);
        let mut labels = rec.statement.labels.clone();
        labels[0] = IgLabel::E;
        labels[2] = IgLabel::F;
        let err = store
            .correct(
                "conv.s1",
                &Correction {
                    labels,
                    stype: None,
                    note: None,
                },
            )
            .unwrap_err();
        match err {
            StoreError::InvalidLabels { labels, .. } => {
                assert_eq!(labels, [(1, "E".to_string()), (3, "F".to_string())]);
            }
            other => panic!("{other}"),
        }
        assert!(matches!(
            store.correct(
                "conv.s1",
                &Correction {
                    labels: vec![],
                    stype: None,
                    note: None
                }
            ),
            Err(StoreError::Invalid { .. })
        ));
        assert!(matches!(
            store.correct(
                "missing",
                &Correction {
                    labels: vec![],
                    stype: None,
                    note: None
                }
            ),
            Err(StoreError::NotFound { .. })
        ));
        assert!(store.get_correction("conv.s1").unwrap().is_none());
        assert!(
            serde_json::from_str::<Correction>(r#"{"labels":[],"review_status":"auto"}"#).is_err()
        );
    }

    #[test]
    fn stype_change_revalidates() {
        let dir = tempfile::tempdir().unwrap();
        let store = CorpusStore::open(dir.path()).unwrap();
        let rec = with_request(&store);
        let none = vec![IgLabel::None; rec.statement.labels.len()];
        let mut labels = none.clone();
        labels[5] = IgLabel::E;
        let view = store
            .correct(
                "conv.s1",
                &Correction {
                    labels,
                    stype: Some(StatementType::Constitutive),
                    note: None,
                },
            )
            .unwrap();
        assert_eq!(view.stype, StatementType::Constitutive);
        assert_eq!(view.atomics.len(), 1);
    }

    #[test]
    fn concurrent_readers_see_whole_records() {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(CorpusStore::open(dir.path()).unwrap());
        let rec = with_request(&store);
        let n = rec.statement.labels.len();
        let writer = {
            let store = store.clone();
            std::thread::spawn(move || {
                for k in 0..50 {
                    let l = if k % 2 == 0 {
                        IgLabel::Ctx
                    } else {
                        IgLabel::None
                    };
                    store
                        .correct(
                            "conv.s1",
                            &Correction {
                                labels: vec![l; n],
                                stype: None,
                                note: None,
                            },
                        )
                        .unwrap();
                }
            })
        };
        for _ in 0..200 {
            let view = store.get_annotation("conv.s1").unwrap();
            let first = view.statement.labels[0];
            if view.review_status == ReviewStatus::ExpertCorrected {
                assert!(view.statement.labels.iter().all(|&l| l == first));
            }
        }
        writer.join().unwrap();
    }

    #[test]
    fn models_persist() {
        let dir = tempfile::tempdir().unwrap();
        let store = CorpusStore::open(dir.path()).unwrap();
        assert!(matches!(
            store.get_model("stype"),
            Err(StoreError::NotFound { .. })
        ));
        let m = crate::classifier::StatementModel::train(
            &["the party shall submit", "the fund is a body"],
            &[StatementType::Regulative, StatementType::Constitutive],
            &crate::classifier::TrainConfig::statement_type(1),
        )
        .unwrap();
        store.put_model("stype", m.model()).unwrap();
        assert_eq!(&store.get_model("stype").unwrap(), m.model());
    }
}
