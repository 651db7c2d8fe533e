//! Pooled-embedding baseline: one vector per document, then the same
//! margin miner used for chunks.

use crate::corpus::Document;
use crate::embed_store::EmbeddingMatrix;
use crate::error::Result;
use crate::miner::{mine, AlignedUnitPair, MarginParams};
use crate::pooling::{build_idf, pool_corpus, PoolingMethod};

/// Pools one corpus side from its sentence embeddings. Idf statistics, when
/// the method needs them, come from this side alone.
pub fn pool_side(
    docs: &[Document],
    sentence_embeddings: &EmbeddingMatrix,
    method: PoolingMethod,
) -> Result<EmbeddingMatrix> {
    let idf = if method.needs_idf() {
        Some(build_idf(docs)?)
    } else {
        None
    };
    Ok(pool_corpus(docs, sentence_embeddings, method, idf.as_ref())?)
}

/// Aligns documents by mining their pooled embeddings. The returned pairs
/// carry doc ids and are sorted by `(src_id, tgt_id)`.
pub fn align_documents_pooled(
    src: &[Document],
    tgt: &[Document],
    src_sentence_embeddings: &EmbeddingMatrix,
    tgt_sentence_embeddings: &EmbeddingMatrix,
    method: PoolingMethod,
    params: MarginParams,
) -> Result<Vec<AlignedUnitPair>> {
    let x = pool_side(src, src_sentence_embeddings, method)?;
    let y = pool_side(tgt, tgt_sentence_embeddings, method)?;
    Ok(mine(&x, &y, params)?)
}
