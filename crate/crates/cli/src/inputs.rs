//! Reading corpora and training files from disk.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use igkit_core::classifier::StatementType;
use igkit_core::conllu::{parse_conllu, DepTree, Document};
use igkit_core::store::valid_id;
use serde::Deserialize;

use crate::PipelineError;

/// Sentence comment carrying a gold statement type.
pub const STYPE_COMMENT: &str = "stype";

pub fn statement_id(document: &str, sentence: usize) -> String {
    format!("{document}.s{sentence}")
}

/// Gold type from a `# stype = ...` comment, if any.
pub fn gold_stype(tree: &DepTree) -> Option<Result<StatementType, String>> {
    tree.meta(STYPE_COMMENT).map(|v| {
        v.parse()
            .map_err(|_| format!("unknown statement type {v:?}"))
    })
}

/// `.conllu` files of `dir` in name order.
pub fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let entries = fs::read_dir(dir).map_err(|e| PipelineError::input(dir, e))?;
    let mut files = Vec::new();
    for e in entries {
        let path = e.map_err(|e| PipelineError::input(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "conllu") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Parse one corpus file. The document id is the file stem; metadata is
/// read from a sibling `<stem>.meta.json` object of strings when present.
pub fn read_document(path: &Path) -> Result<Document, String> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or("file name is not UTF-8")?;
    if !valid_id(stem) {
        return Err(format!("{stem:?} is not a valid document id"));
    }
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or(stem);
    let mut doc = Document::from_conllu(stem, name, &text).map_err(|e| e.to_string())?;
    let meta = path.with_file_name(format!("{stem}.meta.json"));
    if meta.exists() {
        let bytes = fs::read(&meta).map_err(|e| e.to_string())?;
        doc.metadata = serde_json::from_slice::<BTreeMap<String, String>>(&bytes)
            .map_err(|e| format!("{}: {e}", meta.display()))?;
    }
    Ok(doc)
}

#[derive(Deserialize)]
struct StatementLine {
    #[serde(default)]
    id: Option<String>,
    text: String,
    #[serde(default)]
    stype: Option<StatementType>,
}

#[derive(Deserialize)]
struct LegalActLine {
    text: String,
    legal_act: bool,
}

fn is_jsonl(path: &Path) -> bool {
    path.extension()
        .is_some_and(|x| x == "jsonl" || x == "json")
}

fn jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::input(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| PipelineError::input(path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

/// Statements with ids and optional gold types, from CoNLL-U (gold type in
/// the `stype` comment) or JSON lines `{id?, text, stype?}`.
pub fn read_statements(
    path: &Path,
) -> Result<Vec<(String, String, Option<StatementType>)>, PipelineError> {
    if is_jsonl(path) {
        return Ok(jsonl::<StatementLine>(path)?
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                (
                    l.id.unwrap_or_else(|| format!("{}", i + 1)),
                    l.text,
                    l.stype,
                )
            })
            .collect());
    }
    let text = fs::read_to_string(path).map_err(|e| PipelineError::input(path, e))?;
    let trees = parse_conllu(&text).map_err(|e| PipelineError::input(path, e))?;
    trees
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let stype = gold_stype(t)
                .transpose()
                .map_err(|e| PipelineError::input(path, e))?;
            let id = t
                .sent_id()
                .map_or_else(|| format!("{}", i + 1), str::to_string);
            Ok((id, t.text(), stype))
        })
        .collect()
}

/// Labelled statements for training the statement-type model.
pub fn statement_examples(path: &Path) -> Result<(Vec<String>, Vec<StatementType>), PipelineError> {
    let mut texts = Vec::new();
    let mut labels = Vec::new();
    for (_, text, stype) in read_statements(path)? {
        if let Some(s) = stype {
            texts.push(text);
            labels.push(s);
        }
    }
    if texts.is_empty() {
        return Err(PipelineError::input(path, "no statements with a gold type"));
    }
    Ok((texts, labels))
}

/// Labelled documents for the legal-act model: JSON lines `{text, legal_act}`.
pub fn legal_act_examples(path: &Path) -> Result<(Vec<String>, Vec<bool>), PipelineError> {
    let lines: Vec<LegalActLine> = jsonl(path)?;
    if lines.is_empty() {
        return Err(PipelineError::input(path, "no training documents"));
    }
    Ok(lines.into_iter().map(|l| (l.text, l.legal_act)).unzip())
}
