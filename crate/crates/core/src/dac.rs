//! Document pairs from mined chunk pairs.
//!
//! Chunks of all source documents are mined against chunks of all target
//! documents in one global run. Every mined chunk pair votes for the
//! document pair it joins, and each document pair gets the Document
//! Alignment Coefficient
//!
//! ```text
//! DAC = 2 * N_aligned / (N_src + N_tgt)
//! ```
//!
//! where `N_src` and `N_tgt` are the chunk counts of the two documents.
//! Pairs below the threshold are dropped and the rest are matched greedily,
//! highest DAC first, so that every document appears at most once.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{parse_unit_id, segment_all, Document, Granularity};
use crate::embed_store::{EmbeddingMatrix, StoreError};
use crate::miner::{apply_margin_floor, mine, AlignedUnitPair, MarginParams, MineError};

pub const DEFAULT_THRESHOLD: f64 = 0.1;

#[derive(Debug, Error)]
pub enum DacError {
    #[error("malformed unit id {0:?}, expected \"<doc_id>#<index>\"")]
    MalformedUnitId(String),
    #[error("unknown {side} document {doc_id}")]
    UnknownDoc { side: &'static str, doc_id: String },
    #[error("document pair ({src}, {tgt}) has {aligned} aligned chunks, more than its chunk counts allow")]
    TooManyAligned {
        src: String,
        tgt: String,
        aligned: usize,
    },
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Mine(#[from] MineError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Aggregated evidence for one candidate document pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocPairScore {
    pub src_doc: String,
    pub tgt_doc: String,
    pub n_src: usize,
    pub n_tgt: usize,
    pub n_aligned: usize,
    pub dac: f64,
    pub margin_sum: f64,
}

/// `2 * n_aligned / (n_src + n_tgt)`.
pub fn dac_score(n_aligned: usize, n_src: usize, n_tgt: usize) -> f64 {
    (2 * n_aligned) as f64 / (n_src + n_tgt) as f64
}

/// Whether thresholded document pairs are matched one-to-one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    #[default]
    OneToOne,
    /// Keep every pair at or above the threshold.
    KeepAll,
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionMode::OneToOne => "one-to-one",
            SelectionMode::KeepAll => "keep-all",
        })
    }
}

impl FromStr for SelectionMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one-to-one" => Ok(SelectionMode::OneToOne),
            "keep-all" => Ok(SelectionMode::KeepAll),
            _ => Err(format!("unknown selection mode {s:?} (expected one-to-one, keep-all)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DacConfig {
    pub threshold: f64,
    pub granularity: Granularity,
    pub margin_params: MarginParams,
    #[serde(default)]
    pub selection: SelectionMode,
    /// Chunk pairs with a margin below this are discarded before aggregation.
    #[serde(default)]
    pub margin_floor: Option<f64>,
}

impl Default for DacConfig {
    fn default() -> Self {
        DacConfig {
            threshold: DEFAULT_THRESHOLD,
            granularity: Granularity::SENTENCE,
            margin_params: MarginParams::default(),
            selection: SelectionMode::OneToOne,
            margin_floor: None,
        }
    }
}

impl DacConfig {
    pub fn validate(&self) -> Result<(), DacError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(DacError::InvalidThreshold(self.threshold));
        }
        Ok(())
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }
}

/// Chunk count per document for the given granularity.
pub fn chunk_counts(docs: &[Document], g: Granularity) -> HashMap<String, usize> {
    docs.iter()
        .map(|d| {
            let n = match g {
                Granularity::Chunks(g) => d.sentences.len().div_ceil(g.get()),
                Granularity::WholeDocument => 1,
            };
            (d.doc_id.clone(), n)
        })
        .collect()
}

fn doc_of<'a>(
    unit_id: &'a str,
    counts: &HashMap<String, usize>,
    side: &'static str,
) -> Result<(&'a str, usize), DacError> {
    let (doc, _) = parse_unit_id(unit_id).ok_or_else(|| DacError::MalformedUnitId(unit_id.to_string()))?;
    let n = *counts.get(doc).ok_or_else(|| DacError::UnknownDoc {
        side,
        doc_id: doc.to_string(),
    })?;
    Ok((doc, n))
}

/// Groups chunk pairs by the document pair they join. Output is sorted by
/// `(src_doc, tgt_doc)`.
pub fn aggregate(
    chunk_pairs: &[AlignedUnitPair],
    chunk_counts_src: &HashMap<String, usize>,
    chunk_counts_tgt: &HashMap<String, usize>,
) -> Result<Vec<DocPairScore>, DacError> {
    let mut acc: BTreeMap<(&str, &str), (usize, usize, usize, f64)> = BTreeMap::new();
    for p in chunk_pairs {
        let (src, n_src) = doc_of(&p.src_id, chunk_counts_src, "source")?;
        let (tgt, n_tgt) = doc_of(&p.tgt_id, chunk_counts_tgt, "target")?;
        let e = acc.entry((src, tgt)).or_insert((n_src, n_tgt, 0, 0.0));
        e.2 += 1;
        e.3 += p.margin;
    }
    acc.into_iter()
        .map(|((src, tgt), (n_src, n_tgt, n_aligned, margin_sum))| {
            if n_aligned > n_src.min(n_tgt) {
                return Err(DacError::TooManyAligned {
                    src: src.to_string(),
                    tgt: tgt.to_string(),
                    aligned: n_aligned,
                });
            }
            Ok(DocPairScore {
                src_doc: src.to_string(),
                tgt_doc: tgt.to_string(),
                n_src,
                n_tgt,
                n_aligned,
                dac: dac_score(n_aligned, n_src, n_tgt),
                margin_sum,
            })
        })
        .collect()
}

fn selection_order(a: &DocPairScore, b: &DocPairScore) -> Ordering {
    b.dac
        .total_cmp(&a.dac)
        .then(b.margin_sum.total_cmp(&a.margin_sum))
        .then_with(|| a.src_doc.cmp(&b.src_doc))
        .then_with(|| a.tgt_doc.cmp(&b.tgt_doc))
}

pub fn sort_scores(scores: &mut [DocPairScore]) {
    scores.sort_by(|a, b| a.src_doc.cmp(&b.src_doc).then_with(|| a.tgt_doc.cmp(&b.tgt_doc)));
}

/// Thresholds and (by default) greedily matches document pairs. Output is
/// sorted by `(src_doc, tgt_doc)`.
pub fn select_pairs(scores: &[DocPairScore], config: &DacConfig) -> Vec<DocPairScore> {
    let mut kept: Vec<&DocPairScore> = scores.iter().filter(|s| s.dac >= config.threshold).collect();
    kept.sort_by(|a, b| selection_order(a, b));
    let mut out: Vec<DocPairScore> = match config.selection {
        SelectionMode::KeepAll => kept.into_iter().cloned().collect(),
        SelectionMode::OneToOne => {
            let mut used_src = HashSet::new();
            let mut used_tgt = HashSet::new();
            kept.into_iter()
                .filter(|s| {
                    if used_src.contains(s.src_doc.as_str()) || used_tgt.contains(s.tgt_doc.as_str()) {
                        return false;
                    }
                    used_src.insert(s.src_doc.as_str());
                    used_tgt.insert(s.tgt_doc.as_str());
                    true
                })
                .cloned()
                .collect()
        }
    };
    sort_scores(&mut out);
    out
}

/// Everything produced by one DAC run before thresholding.
#[derive(Debug, Clone)]
pub struct DacScoring {
    pub chunk_pairs: Vec<AlignedUnitPair>,
    pub scores: Vec<DocPairScore>,
}

/// Segments both sides, mines all source chunks against all target chunks
/// and aggregates the result into scored document pairs.
///
/// The embedding matrices must contain a normalized row for every unit id
/// produced by segmenting at `config.granularity`; extra rows are ignored.
pub fn score_documents_dac(
    src: &[Document],
    tgt: &[Document],
    src_embeddings: &EmbeddingMatrix,
    tgt_embeddings: &EmbeddingMatrix,
    config: &DacConfig,
) -> Result<DacScoring, DacError> {
    config.validate()?;
    let g = config.granularity;
    let src_ids: Vec<String> = segment_all(src, g).into_iter().map(|u| u.unit_id).collect();
    let tgt_ids: Vec<String> = segment_all(tgt, g).into_iter().map(|u| u.unit_id).collect();
    let x = src_embeddings.select(&src_ids)?;
    let y = tgt_embeddings.select(&tgt_ids)?;

    let chunk_pairs = apply_margin_floor(mine(&x, &y, config.margin_params)?, config.margin_floor);
    let scores = aggregate(&chunk_pairs, &chunk_counts(src, g), &chunk_counts(tgt, g))?;
    Ok(DacScoring { chunk_pairs, scores })
}

/// Full DAC alignment: score, threshold, select.
pub fn align_documents_dac(
    src: &[Document],
    tgt: &[Document],
    src_embeddings: &EmbeddingMatrix,
    tgt_embeddings: &EmbeddingMatrix,
    config: &DacConfig,
) -> Result<Vec<DocPairScore>, DacError> {
    let scoring = score_documents_dac(src, tgt, src_embeddings, tgt_embeddings, config)?;
    Ok(select_pairs(&scoring.scores, config))
}

/// Writes `src_doc, tgt_doc, n_src, n_tgt, n_aligned, dac` rows.
pub fn write_scores_tsv<W: Write>(scores: &[DocPairScore], mut w: W) -> io::Result<()> {
    writeln!(w, "src_doc\ttgt_doc\tn_src\tn_tgt\tn_aligned\tdac")?;
    for s in scores {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{:.6}",
            s.src_doc, s.tgt_doc, s.n_src, s.n_tgt, s.n_aligned, s.dac
        )?;
    }
    w.flush()
}
