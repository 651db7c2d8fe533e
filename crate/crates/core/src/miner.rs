//! Margin-based mining between two embedding sets.
//!
//! 1. Build exact inner-product indices over `X` and `Y`.
//! 2. Retrieve `NN_k(x)` in `Y` for every `x`, and `NN_k(y)` in `X` for every `y`.
//! 3. `A_x` is the mean cosine of `x` to `NN_k(x)`; `A_y` likewise.
//! 4. Candidates are the union of forward and backward neighbor pairs,
//!    scored with the ratio margin `M(x, y) = cos(x, y) / (0.5 (A_x + A_y))`.
//! 5. Candidates are sorted by margin and accepted greedily whenever
//!    neither endpoint is taken yet.
//!
//! `k` is clamped to the size of the side being searched, and `A` averages
//! over the neighbors actually retrieved.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed_store::EmbeddingMatrix;
use crate::knn::{FlatIndex, IndexError};

pub const DEFAULT_K: usize = 16;

#[derive(Debug, Error)]
pub enum MineError {
    #[error("{0} side is empty")]
    EmptySide(&'static str),
    #[error("source dim {src} does not match target dim {tgt}")]
    DimMismatch { src: usize, tgt: usize },
    #[error("k must be >= 1")]
    ZeroK,
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginParams {
    pub k: usize,
}

impl MarginParams {
    pub fn new(k: usize) -> Result<Self, MineError> {
        if k == 0 {
            return Err(MineError::ZeroK);
        }
        Ok(MarginParams { k })
    }
}

impl Default for MarginParams {
    fn default() -> Self {
        MarginParams { k: DEFAULT_K }
    }
}

/// A scored candidate pair before matching.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub src_id: String,
    pub tgt_id: String,
    pub cosine: f32,
    pub margin: f64,
}

/// A pair accepted by greedy matching.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignedUnitPair {
    pub src_id: String,
    pub tgt_id: String,
    pub cosine: f32,
    pub margin: f64,
}

impl From<Candidate> for AlignedUnitPair {
    fn from(c: Candidate) -> Self {
        AlignedUnitPair {
            src_id: c.src_id,
            tgt_id: c.tgt_id,
            cosine: c.cosine,
            margin: c.margin,
        }
    }
}

/// Margin-scored candidates from the union of forward and backward k-NN
/// lists, one entry per distinct pair, ordered by (source row, target row).
pub fn margin_scores(
    x: &EmbeddingMatrix,
    y: &EmbeddingMatrix,
    params: MarginParams,
) -> Result<Vec<Candidate>, MineError> {
    if params.k == 0 {
        return Err(MineError::ZeroK);
    }
    if x.is_empty() {
        return Err(MineError::EmptySide("source"));
    }
    if y.is_empty() {
        return Err(MineError::EmptySide("target"));
    }
    if x.dim() != y.dim() {
        return Err(MineError::DimMismatch {
            src: x.dim(),
            tgt: y.dim(),
        });
    }
    let index_x = FlatIndex::from_shared(Arc::new(x.clone()))?;
    let index_y = FlatIndex::from_shared(Arc::new(y.clone()))?;

    let forward = index_y.search(x, params.k)?;
    let backward = index_x.search(y, params.k)?;

    let avg_x: Vec<f64> = forward.iter().map(|l| l.mean_score()).collect();
    let avg_y: Vec<f64> = backward.iter().map(|l| l.mean_score()).collect();

    let mut pairs: Vec<(usize, usize, f32)> = Vec::with_capacity(2 * params.k * (x.len() + y.len()));
    for (i, list) in forward.iter().enumerate() {
        pairs.extend(list.neighbors.iter().map(|n| (i, n.row, n.score)));
    }
    for (j, list) in backward.iter().enumerate() {
        pairs.extend(list.neighbors.iter().map(|n| (n.row, j, n.score)));
    }
    pairs.sort_unstable_by_key(|p| (p.0, p.1));
    pairs.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);

    Ok(pairs
        .into_iter()
        .map(|(i, j, cosine)| Candidate {
            src_id: x.id(i).to_string(),
            tgt_id: y.id(j).to_string(),
            cosine,
            margin: margin(cosine, avg_x[i], avg_y[j]),
        })
        .collect())
}

/// Ratio margin.
pub fn margin(cosine: f32, avg_src: f64, avg_tgt: f64) -> f64 {
    f64::from(cosine) / (0.5 * (avg_src + avg_tgt))
}

/// Margin descending, then cosine descending, then `(src_id, tgt_id)`
/// ascending.
fn greedy_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.margin
        .total_cmp(&a.margin)
        .then(b.cosine.total_cmp(&a.cosine))
        .then_with(|| a.src_id.cmp(&b.src_id))
        .then_with(|| a.tgt_id.cmp(&b.tgt_id))
}

/// Greedy one-to-one matching, returned in acceptance order.
///
/// Candidates whose margin is not a positive finite number (cosine <= 0,
/// or a degenerate neighborhood average) are never accepted.
pub fn greedy_match_in_order(mut candidates: Vec<Candidate>) -> Vec<AlignedUnitPair> {
    candidates.retain(|c| c.margin > 0.0 && c.margin.is_finite());
    candidates.sort_by(greedy_order);
    let mut used_src: HashSet<String> = HashSet::new();
    let mut used_tgt: HashSet<String> = HashSet::new();
    let mut out = Vec::new();
    for c in candidates {
        if used_src.contains(&c.src_id) || used_tgt.contains(&c.tgt_id) {
            continue;
        }
        used_src.insert(c.src_id.clone());
        used_tgt.insert(c.tgt_id.clone());
        out.push(c.into());
    }
    out
}

/// Greedy one-to-one matching, returned sorted by `(src_id, tgt_id)`.
pub fn greedy_match(candidates: Vec<Candidate>) -> Vec<AlignedUnitPair> {
    let mut out = greedy_match_in_order(candidates);
    sort_pairs(&mut out);
    out
}

pub fn sort_pairs(pairs: &mut [AlignedUnitPair]) {
    pairs.sort_by(|a, b| a.src_id.cmp(&b.src_id).then_with(|| a.tgt_id.cmp(&b.tgt_id)));
}

/// `margin_scores` followed by `greedy_match`.
pub fn mine(
    x: &EmbeddingMatrix,
    y: &EmbeddingMatrix,
    params: MarginParams,
) -> Result<Vec<AlignedUnitPair>, MineError> {
    Ok(greedy_match(margin_scores(x, y, params)?))
}

/// Drops pairs whose margin is below `floor`.
pub fn apply_margin_floor(pairs: Vec<AlignedUnitPair>, floor: Option<f64>) -> Vec<AlignedUnitPair> {
    match floor {
        Some(f) => pairs.into_iter().filter(|p| p.margin >= f).collect(),
        None => pairs,
    }
}

/// Writes `src_id, tgt_id, cosine, margin` rows, floats at 6 decimals.
pub fn write_pairs_tsv<W: Write>(pairs: &[AlignedUnitPair], mut w: W) -> io::Result<()> {
    writeln!(w, "src_id\ttgt_id\tcosine\tmargin")?;
    for p in pairs {
        writeln!(w, "{}\t{}\t{:.6}\t{:.6}", p.src_id, p.tgt_id, p.cosine, p.margin)?;
    }
    w.flush()
}
