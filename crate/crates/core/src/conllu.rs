//! CoNLL-U reading and writing, and navigation over dependency trees.
//!
//! Only syntactic-word lines are kept. Multi-word token ranges (`3-4`) and
//! empty nodes (`5.1`) are skipped, and the enhanced dependency column is
//! ignored: the tagger rules only look at `HEAD` and `DEPREL`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConlluError {
    #[error("line {line}: expected 10 tab-separated columns, found {found}")]
    Columns { line: usize, found: usize },
    #[error("line {line}: invalid {field} value {value:?}")]
    Field {
        line: usize,
        field: &'static str,
        value: String,
    },
    #[error("line {line}: token id {found} out of sequence (expected {expected})")]
    Sequence {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("sentence {sentence}: token {token} has head {head}, which does not exist")]
    DanglingHead {
        sentence: usize,
        token: usize,
        head: usize,
    },
    #[error("sentence {sentence}: token {token} is its own head")]
    SelfHead { sentence: usize, token: usize },
    #[error("sentence {sentence}: no root token")]
    NoRoot { sentence: usize },
    #[error("sentence {sentence}: multiple roots {roots:?}")]
    MultipleRoots { sentence: usize, roots: Vec<usize> },
    #[error("sentence {sentence}: head relation contains a cycle through token {token}")]
    Cycle { sentence: usize, token: usize },
    #[error("sentence {sentence}: empty sentence block")]
    Empty { sentence: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("token {0} does not exist in this sentence")]
pub struct UnknownToken(pub usize);

/// One syntactic word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub surface: String,
    pub lemma: String,
    pub upos: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xpos: Option<String>,
    #[serde(default)]
    pub feats: BTreeMap<String, String>,
    /// Index of the parent token, 0 for the root.
    pub head: usize,
    pub deprel: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub misc: Option<String>,
}

impl Token {
    /// Relation without its subtype (`nsubj:pass` -> `nsubj`).
    pub fn base_deprel(&self) -> &str {
        base_relation(&self.deprel)
    }
}

pub fn base_relation(rel: &str) -> &str {
    rel.split(':').next().unwrap_or(rel)
}

/// True when `deprel` equals `pattern`, or when `pattern` carries no subtype
/// and equals the base of `deprel` (`obl` matches `obl:tmod`).
pub fn relation_matches(deprel: &str, pattern: &str) -> bool {
    deprel == pattern || (!pattern.contains(':') && base_relation(deprel) == pattern)
}

/// A sentence's dependency tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTree")]
pub struct DepTree {
    tokens: Vec<Token>,
    root_index: usize,
    /// Sentence-level comments, without the leading `#`.
    #[serde(default)]
    comments: Vec<String>,
    #[serde(skip)]
    children: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct RawTree {
    tokens: Vec<Token>,
    #[serde(default)]
    comments: Vec<String>,
}

impl TryFrom<RawTree> for DepTree {
    type Error = ConlluError;

    fn try_from(raw: RawTree) -> Result<Self, Self::Error> {
        DepTree::new(raw.tokens, raw.comments)
    }
}

impl DepTree {
    /// Validates the tokens and builds the tree.
    pub fn new(tokens: Vec<Token>, comments: Vec<String>) -> Result<Self, ConlluError> {
        Self::build(tokens, comments, 1)
    }

    fn build(
        tokens: Vec<Token>,
        comments: Vec<String>,
        sentence: usize,
    ) -> Result<Self, ConlluError> {
        if tokens.is_empty() {
            return Err(ConlluError::Empty { sentence });
        }
        let n = tokens.len();
        for (pos, tok) in tokens.iter().enumerate() {
            if tok.index != pos + 1 {
                return Err(ConlluError::Sequence {
                    line: 0,
                    expected: pos + 1,
                    found: tok.index,
                });
            }
            if tok.head > n {
                return Err(ConlluError::DanglingHead {
                    sentence,
                    token: tok.index,
                    head: tok.head,
                });
            }
            if tok.head == tok.index {
                return Err(ConlluError::SelfHead {
                    sentence,
                    token: tok.index,
                });
            }
        }
        let roots: Vec<usize> = tokens
            .iter()
            .filter(|t| t.head == 0)
            .map(|t| t.index)
            .collect();
        let root_index = match roots.as_slice() {
            [] => return Err(ConlluError::NoRoot { sentence }),
            [r] => *r,
            _ => return Err(ConlluError::MultipleRoots { sentence, roots }),
        };
        // every token must reach the root within n steps
        for tok in &tokens {
            let mut cur = tok.index;
            let mut steps = 0;
            while cur != 0 {
                cur = tokens[cur - 1].head;
                steps += 1;
                if steps > n {
                    return Err(ConlluError::Cycle {
                        sentence,
                        token: tok.index,
                    });
                }
            }
        }
        let mut children = vec![Vec::new(); n + 1];
        for tok in &tokens {
            children[tok.head].push(tok.index);
        }
        Ok(DepTree {
            tokens,
            root_index,
            comments,
            children,
        })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn root_index(&self) -> usize {
        self.root_index
    }

    pub fn root(&self) -> &Token {
        &self.tokens[self.root_index - 1]
    }

    pub fn comments(&self) -> &[String] {
        &self.comments
    }

    pub fn token(&self, index: usize) -> Result<&Token, UnknownToken> {
        index
            .checked_sub(1)
            .and_then(|i| self.tokens.get(i))
            .ok_or(UnknownToken(index))
    }

    /// Value of a `# key = value` comment.
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            let (k, v) = c.split_once('=')?;
            (k.trim() == key).then(|| v.trim())
        })
    }

    pub fn sent_id(&self) -> Option<&str> {
        self.meta("sent_id")
    }

    /// The `# text` comment, or the surfaces joined by spaces.
    pub fn text(&self) -> String {
        match self.meta("text") {
            Some(t) => t.to_string(),
            None => self
                .tokens
                .iter()
                .map(|t| t.surface.as_str())
                .collect::<Vec<_>>()
                .join(" "),
        }
    }

    /// Direct dependents of `parent` in surface order. With a filter, only
    /// dependents whose relation is in the set (exact match) are returned.
    pub fn children(
        &self,
        parent: usize,
        rel_filter: Option<&[&str]>,
    ) -> Result<Vec<&Token>, UnknownToken> {
        self.token(parent)?;
        Ok(self.children[parent]
            .iter()
            .map(|&i| &self.tokens[i - 1])
            .filter(|t| rel_filter.is_none_or(|f| f.contains(&t.deprel.as_str())))
            .collect())
    }

    pub(crate) fn child_indices(&self, parent: usize) -> &[usize] {
        &self.children[parent]
    }

    /// `head` and all of its transitive dependents, in surface order.
    pub fn subtree(&self, head: usize) -> Result<Vec<&Token>, UnknownToken> {
        Ok(self
            .subtree_indices(head)?
            .into_iter()
            .map(|i| &self.tokens[i - 1])
            .collect())
    }

    pub fn subtree_indices(&self, head: usize) -> Result<Vec<usize>, UnknownToken> {
        self.token(head)?;
        let mut out = Vec::new();
        let mut stack = vec![head];
        while let Some(i) = stack.pop() {
            out.push(i);
            stack.extend(self.children[i].iter().copied());
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Serialize back to a CoNLL-U sentence block (without trailing blank line).
    pub fn to_conllu(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        for t in &self.tokens {
            let feats = if t.feats.is_empty() {
                "_".to_string()
            } else {
                t.feats
                    .iter()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect::<Vec<_>>()
                    .join("|")
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t_\t{}",
                t.index,
                t.surface,
                t.lemma,
                t.upos,
                t.xpos.as_deref().unwrap_or("_"),
                feats,
                t.head,
                t.deprel,
                t.misc.as_deref().unwrap_or("_"),
            );
        }
        out
    }
}

/// Parsed legal document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default)]
    pub source_path: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
    pub sentences: Vec<DepTree>,
}

impl Document {
    pub fn from_conllu(
        id: impl Into<String>,
        source_path: impl Into<String>,
        text: &str,
    ) -> Result<Self, ConlluError> {
        Ok(Document {
            id: id.into(),
            source_path: source_path.into(),
            metadata: BTreeMap::new(),
            sentences: parse_conllu(text)?,
        })
    }

    /// Plain text of the document, one sentence per line.
    pub fn text(&self) -> String {
        self.sentences
            .iter()
            .map(DepTree::text)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Parse CoNLL-U text into one tree per sentence block.
pub fn parse_conllu(text: &str) -> Result<Vec<DepTree>, ConlluError> {
    let mut trees = Vec::new();
    let mut comments = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut first_line = 0;

    let mut flush = |comments: &mut Vec<String>,
                     tokens: &mut Vec<Token>,
                     first_line: usize|
     -> Result<(), ConlluError> {
        if tokens.is_empty() {
            comments.clear();
            return Ok(());
        }
        let sentence = trees.len() + 1;
        let tree = DepTree::build(std::mem::take(tokens), std::mem::take(comments), sentence)
            .map_err(|e| match e {
                ConlluError::Sequence {
                    expected, found, ..
                } => ConlluError::Sequence {
                    line: first_line,
                    expected,
                    found,
                },
                other => other,
            })?;
        trees.push(tree);
        Ok(())
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut comments, &mut tokens, first_line)?;
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            comments.push(c.trim().to_string());
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(ConlluError::Columns {
                line: line_no,
                found: cols.len(),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        if tokens.is_empty() {
            first_line = line_no;
        }
        let field = |field: &'static str, value: &str| ConlluError::Field {
            line: line_no,
            field,
            value: value.to_string(),
        };
        let index: usize = cols[0].parse().map_err(|_| field("ID", cols[0]))?;
        if index == 0 {
            return Err(field("ID", cols[0]));
        }
        let head: usize = cols[6].parse().map_err(|_| field("HEAD", cols[6]))?;
        if cols[7].is_empty() || cols[7] == "_" {
            return Err(field("DEPREL", cols[7]));
        }
        if index != tokens.len() + 1 {
            return Err(ConlluError::Sequence {
                line: line_no,
                expected: tokens.len() + 1,
                found: index,
            });
        }
        tokens.push(Token {
            index,
            surface: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            xpos: optional(cols[4]),
            feats: parse_feats(cols[5]).ok_or_else(|| field("FEATS", cols[5]))?,
            head,
            deprel: cols[7].to_string(),
            misc: optional(cols[9]),
        });
    }
    flush(&mut comments, &mut tokens, first_line)?;
    Ok(trees)
}

/// Serialize trees as a CoNLL-U document.
pub fn write_conllu(trees: &[DepTree]) -> String {
    let mut out = String::new();
    for t in trees {
        out.push_str(&t.to_conllu());
        out.push('\n');
    }
    out
}

fn optional(col: &str) -> Option<String> {
    (col != "_").then(|| col.to_string())
}

fn parse_feats(col: &str) -> Option<BTreeMap<String, String>> {
    if col == "_" {
        return Some(BTreeMap::new());
    }
    col.split('|')
        .map(|kv| {
            let (k, v) = kv.split_once('=')?;
            Some((k.to_string(), v.to_string()))
        })
        .collect()
}
