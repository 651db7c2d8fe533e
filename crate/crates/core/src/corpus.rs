//! Documents, manifests, and segmentation into chunk units.
//!
//! A corpus side is described by a JSON-lines manifest, one object per
//! document:
//!
//! ```text
//! {"doc_id": "pib-0001", "lang": "en", "path": "en/pib-0001.txt"}
//! ```
//!
//! Each referenced file holds one pre-segmented sentence per line (LF or
//! CRLF). Blank lines are dropped. Relative paths resolve against the
//! manifest's directory.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Separator placed between the sentences of a chunk.
pub const CHUNK_JOINER: &str = " ";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read manifest {path}: {source}")]
    Manifest {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest {path} line {line}: {message}")]
    ManifestSyntax {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("document {doc_id}: cannot read {path}: {source}")]
    MissingFile {
        doc_id: String,
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("duplicate doc_id {doc_id} (second occurrence at {path})")]
    DuplicateId { doc_id: String, path: PathBuf },
    #[error("document {doc_id} at {path} has no non-blank lines")]
    EmptyDocument { doc_id: String, path: PathBuf },
    #[error("document {doc_id}: {message}")]
    InvalidDocument { doc_id: String, message: String },
    #[error("invalid granularity {0:?}: expected a positive integer or \"doc\"")]
    InvalidGranularity(String),
}

/// One document: an ordered, non-empty list of non-blank sentences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub lang: String,
    pub sentences: Vec<String>,
}

impl Document {
    /// Builds a document, checking that it has at least one sentence and
    /// that no sentence is blank.
    pub fn new(
        doc_id: impl Into<String>,
        lang: impl Into<String>,
        sentences: Vec<String>,
    ) -> Result<Self, CorpusError> {
        let doc = Document {
            doc_id: doc_id.into(),
            lang: lang.into(),
            sentences,
        };
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.sentences.is_empty() {
            return Err(CorpusError::InvalidDocument {
                doc_id: self.doc_id.clone(),
                message: "no sentences".into(),
            });
        }
        if let Some(i) = self.sentences.iter().position(|s| s.trim().is_empty()) {
            return Err(CorpusError::InvalidDocument {
                doc_id: self.doc_id.clone(),
                message: format!("sentence {i} is blank"),
            });
        }
        Ok(())
    }
}

/// How many sentences make up one alignment unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Granularity {
    /// Runs of `G` consecutive sentences; the last run may be shorter.
    Chunks(NonZeroUsize),
    /// One unit spanning the whole document (`G = |D|`).
    WholeDocument,
}

impl Granularity {
    pub const SENTENCE: Granularity = Granularity::Chunks(NonZeroUsize::MIN);

    pub fn chunks(g: usize) -> Result<Self, CorpusError> {
        NonZeroUsize::new(g)
            .map(Granularity::Chunks)
            .ok_or_else(|| CorpusError::InvalidGranularity(g.to_string()))
    }
}

impl Default for Granularity {
    fn default() -> Self {
        Granularity::SENTENCE
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Granularity::Chunks(g) => write!(f, "{g}"),
            Granularity::WholeDocument => f.write_str("doc"),
        }
    }
}

impl FromStr for Granularity {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "doc" | "D" | "|D|" => Ok(Granularity::WholeDocument),
            t => t
                .parse::<usize>()
                .ok()
                .and_then(NonZeroUsize::new)
                .map(Granularity::Chunks)
                .ok_or_else(|| CorpusError::InvalidGranularity(s.to_string())),
        }
    }
}

impl TryFrom<String> for Granularity {
    type Error = CorpusError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Granularity> for String {
    fn from(g: Granularity) -> String {
        g.to_string()
    }
}

/// A contiguous run of sentences from one document, the unit that gets
/// embedded and mined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkUnit {
    pub unit_id: String,
    pub doc_id: String,
    pub chunk_index: usize,
    pub text: String,
    pub sentence_count: usize,
    pub token_count: usize,
}

/// `"<doc_id>#<chunk_index>"`.
pub fn unit_id(doc_id: &str, chunk_index: usize) -> String {
    format!("{doc_id}#{chunk_index}")
}

/// Splits a unit id back into `(doc_id, chunk_index)`. The split happens at
/// the last `#`, so doc ids may themselves contain `#`.
pub fn parse_unit_id(unit_id: &str) -> Option<(&str, usize)> {
    let (doc, idx) = unit_id.rsplit_once('#')?;
    if idx.is_empty() || !idx.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((doc, idx.parse().ok()?))
}

/// Number of maximal non-whitespace runs.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Groups a document's sentences into consecutive, non-overlapping chunks.
pub fn segment(doc: &Document, g: Granularity) -> Vec<ChunkUnit> {
    let size = match g {
        Granularity::Chunks(g) => g.get(),
        Granularity::WholeDocument => doc.sentences.len().max(1),
    };
    doc.sentences
        .chunks(size)
        .enumerate()
        .map(|(chunk_index, run)| {
            let text = run.join(CHUNK_JOINER);
            ChunkUnit {
                unit_id: unit_id(&doc.doc_id, chunk_index),
                doc_id: doc.doc_id.clone(),
                chunk_index,
                token_count: token_count(&text),
                text,
                sentence_count: run.len(),
            }
        })
        .collect()
}

/// Segments every document, concatenating units in document order.
pub fn segment_all(docs: &[Document], g: Granularity) -> Vec<ChunkUnit> {
    docs.iter().flat_map(|d| segment(d, g)).collect()
}

#[derive(Debug, Deserialize)]
struct ManifestEntry {
    doc_id: String,
    lang: String,
    path: PathBuf,
}

/// Reads a JSON-lines manifest and every sentence file it references.
pub fn load_corpus(manifest_path: impl AsRef<Path>) -> Result<Vec<Document>, CorpusError> {
    let manifest_path = manifest_path.as_ref();
    let raw = fs::read_to_string(manifest_path).map_err(|source| CorpusError::Manifest {
        path: manifest_path.to_path_buf(),
        source,
    })?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new(""));

    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry =
            serde_json::from_str(line).map_err(|e| CorpusError::ManifestSyntax {
                path: manifest_path.to_path_buf(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
        let path = if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            base.join(&entry.path)
        };
        if !seen.insert(entry.doc_id.clone()) {
            return Err(CorpusError::DuplicateId {
                doc_id: entry.doc_id,
                path,
            });
        }
        let text = fs::read_to_string(&path).map_err(|source| CorpusError::MissingFile {
            doc_id: entry.doc_id.clone(),
            path: path.clone(),
            source,
        })?;
        let sentences: Vec<String> = text
            .lines()
            .map(|l| l.strip_suffix('\r').unwrap_or(l))
            .filter(|l| !l.trim().is_empty())
            .map(str::to_owned)
            .collect();
        if sentences.is_empty() {
            return Err(CorpusError::EmptyDocument {
                doc_id: entry.doc_id,
                path,
            });
        }
        docs.push(Document {
            doc_id: entry.doc_id,
            lang: entry.lang,
            sentences,
        });
    }
    Ok(docs)
}

/// Writes documents as one sentence file per document plus a manifest
/// referencing them by path relative to the manifest.
pub fn write_corpus(
    docs: &[Document],
    manifest_path: impl AsRef<Path>,
    text_dir: &str,
) -> std::io::Result<()> {
    use std::io::Write;
    let manifest_path = manifest_path.as_ref();
    let base = manifest_path.parent().unwrap_or_else(|| Path::new(""));
    fs::create_dir_all(base.join(text_dir))?;
    let mut manifest = std::io::BufWriter::new(fs::File::create(manifest_path)?);
    for doc in docs {
        let rel = format!("{text_dir}/{}.txt", sanitize_file_name(&doc.doc_id));
        let mut body = doc.sentences.join("\n");
        body.push('\n');
        fs::write(base.join(&rel), body)?;
        let line = serde_json::json!({"doc_id": doc.doc_id, "lang": doc.lang, "path": rel});
        writeln!(manifest, "{line}")?;
    }
    manifest.flush()
}

fn sanitize_file_name(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(n: usize) -> Document {
        let sentences = (0..n).map(|i| format!("sentence number {i}")).collect();
        Document::new("d", "en", sentences).unwrap()
    }

    fn counts(units: &[ChunkUnit]) -> Vec<usize> {
        units.iter().map(|u| u.sentence_count).collect()
    }

    #[test]
    fn seven_sentences_in_pairs() {
        let units = segment(&doc(7), Granularity::chunks(2).unwrap());
        assert_eq!(counts(&units), vec![2, 2, 2, 1]);
        assert_eq!(units[3].unit_id, "d#3");
    }

    #[test]
    fn sentence_granularity_is_identity() {
        let d = doc(3);
        let units = segment(&d, Granularity::SENTENCE);
        assert_eq!(units.len(), 3);
        for (u, s) in units.iter().zip(&d.sentences) {
            assert_eq!(&u.text, s);
            assert_eq!(u.token_count, 3);
        }
    }

    #[test]
    fn oversized_granularity_clamps() {
        let units = segment(&doc(3), Granularity::chunks(8).unwrap());
        assert_eq!(counts(&units), vec![3]);
        assert_eq!(units[0].text, "sentence number 0 sentence number 1 sentence number 2");
    }

    #[test]
    fn whole_document_is_one_unit() {
        let units = segment(&doc(5), Granularity::WholeDocument);
        assert_eq!(counts(&units), vec![5]);
    }

    #[test]
    fn granularity_parsing() {
        assert_eq!("4".parse::<Granularity>().unwrap(), Granularity::chunks(4).unwrap());
        assert_eq!("doc".parse::<Granularity>().unwrap(), Granularity::WholeDocument);
        assert!("0".parse::<Granularity>().is_err());
        assert!("-2".parse::<Granularity>().is_err());
        assert!(Granularity::chunks(0).is_err());
    }

    #[test]
    fn unit_id_round_trip_with_hash_in_doc_id() {
        let id = unit_id("a#b", 12);
        assert_eq!(parse_unit_id(&id), Some(("a#b", 12)));
        assert_eq!(parse_unit_id("nohash"), None);
        assert_eq!(parse_unit_id("x#"), None);
        assert_eq!(parse_unit_id("x#1a"), None);
    }

    #[test]
    fn token_count_uses_whitespace_runs() {
        assert_eq!(token_count("  a\tb  c\n"), 3);
        assert_eq!(token_count(""), 0);
    }

    #[test]
    fn blank_sentences_rejected() {
        assert!(Document::new("x", "en", vec![]).is_err());
        assert!(Document::new("x", "en", vec!["ok".into(), "  ".into()]).is_err());
    }
}
