//! Exact inner-product index with batched top-k search.
//!
//! Rows are expected to be unit vectors, so inner product equals cosine.
//! Queries are processed in blocks; each block materializes a
//! `block x index_size` score tile, filled in parallel, then a top-k
//! selection per query. Ties are broken by ascending index row, which makes
//! the output a pure function of the inputs regardless of thread count.

use std::cmp::Ordering;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::embed_store::EmbeddingMatrix;

/// Default number of queries per score tile.
pub const DEFAULT_BLOCK_SIZE: usize = 1024;

/// Norm tolerance enforced when building an index.
pub const BUILD_NORM_TOLERANCE: f32 = 1e-3;

// Upper bound on floats in one score tile (256 MiB).
const MAX_TILE_FLOATS: usize = 1 << 26;
// Queries handed to one worker while filling a tile.
const QUERY_STRIPE: usize = 16;
// Index rows visited per pass over a query stripe.
const INDEX_STRIPE: usize = 256;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("cannot build an index over an empty matrix")]
    Empty,
    #[error("row {id} has norm {norm}, index rows must be unit vectors")]
    Unnormalized { id: String, norm: f32 },
    #[error("query dim {query} does not match index dim {index}")]
    DimMismatch { index: usize, query: usize },
    #[error("k must be >= 1")]
    ZeroK,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Row in the index matrix.
    pub row: usize,
    /// Inner product with the query.
    pub score: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    pub query_id: String,
    /// Descending by score, ties by ascending row.
    pub neighbors: Vec<Neighbor>,
}

impl NeighborList {
    pub fn neighbor_ids<'a>(&'a self, index: &'a FlatIndex) -> impl Iterator<Item = &'a str> + 'a {
        self.neighbors.iter().map(move |n| index.matrix().id(n.row))
    }

    /// Mean score over the retrieved neighbors.
    pub fn mean_score(&self) -> f64 {
        if self.neighbors.is_empty() {
            return 0.0;
        }
        self.neighbors.iter().map(|n| f64::from(n.score)).sum::<f64>() / self.neighbors.len() as f64
    }
}

/// Exact flat index. Cheap to clone; the matrix is shared.
#[derive(Debug, Clone)]
pub struct FlatIndex {
    matrix: Arc<EmbeddingMatrix>,
    block_size: usize,
}

impl FlatIndex {
    pub fn build(matrix: EmbeddingMatrix) -> Result<Self, IndexError> {
        Self::from_shared(Arc::new(matrix))
    }

    pub fn from_shared(matrix: Arc<EmbeddingMatrix>) -> Result<Self, IndexError> {
        if matrix.is_empty() {
            return Err(IndexError::Empty);
        }
        if let Some((row, norm)) = matrix.first_unnormalized(BUILD_NORM_TOLERANCE) {
            return Err(IndexError::Unnormalized {
                id: matrix.id(row).to_string(),
                norm,
            });
        }
        Ok(FlatIndex {
            matrix,
            block_size: DEFAULT_BLOCK_SIZE,
        })
    }

    /// Sets the number of queries scored per tile.
    pub fn with_block_size(mut self, block_size: usize) -> Self {
        self.block_size = block_size.max(1);
        self
    }

    pub fn len(&self) -> usize {
        self.matrix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &EmbeddingMatrix {
        &self.matrix
    }

    /// Top-`min(k, len)` rows by inner product for every query row, in query
    /// order. Runs on the current rayon pool.
    pub fn search(&self, queries: &EmbeddingMatrix, k: usize) -> Result<Vec<NeighborList>, IndexError> {
        if queries.dim() != self.dim() {
            return Err(IndexError::DimMismatch {
                index: self.dim(),
                query: queries.dim(),
            });
        }
        if k == 0 {
            return Err(IndexError::ZeroK);
        }
        let k = k.min(self.len());
        let block = self
            .block_size
            .min((MAX_TILE_FLOATS / self.len()).max(1));

        let mut out = Vec::with_capacity(queries.len());
        let mut tile = Vec::new();
        for start in (0..queries.len()).step_by(block) {
            let end = (start + block).min(queries.len());
            self.fill_tile(queries, start..end, &mut tile);
            let lists: Vec<NeighborList> = tile
                .par_chunks(self.len())
                .zip(start..end)
                .map(|(scores, q)| NeighborList {
                    query_id: queries.id(q).to_string(),
                    neighbors: top_k(scores, k),
                })
                .collect();
            out.extend(lists);
        }
        Ok(out)
    }

    fn fill_tile(&self, queries: &EmbeddingMatrix, range: std::ops::Range<usize>, tile: &mut Vec<f32>) {
        let n = self.len();
        tile.clear();
        tile.resize(range.len() * n, 0.0);
        tile.par_chunks_mut(n * QUERY_STRIPE)
            .enumerate()
            .for_each(|(stripe, out)| {
                let q0 = range.start + stripe * QUERY_STRIPE;
                let nq = out.len() / n;
                for r0 in (0..n).step_by(INDEX_STRIPE) {
                    let r1 = (r0 + INDEX_STRIPE).min(n);
                    for qi in 0..nq {
                        let q = queries.row(q0 + qi);
                        let row_out = &mut out[qi * n..(qi + 1) * n];
                        for r in r0..r1 {
                            row_out[r] = dot(q, self.matrix.row(r));
                        }
                    }
                }
            });
    }
}

/// Sequential f32 inner product; the fixed summation order keeps scores
/// bit-identical wherever they are computed.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut s = 0.0f32;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

fn rank(a: &Neighbor, b: &Neighbor) -> Ordering {
    b.score.total_cmp(&a.score).then(a.row.cmp(&b.row))
}

fn top_k(scores: &[f32], k: usize) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = scores
        .iter()
        .enumerate()
        .map(|(row, &score)| Neighbor { row, score })
        .collect();
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, rank);
        all.truncate(k);
    }
    all.sort_unstable_by(rank);
    all
}
