//! Cross-lingual document alignment by chunk-level margin mining.
//!
//! Two monolingual corpora are segmented into chunks of `G` consecutive
//! sentences, every chunk is embedded into a shared multilingual space, and
//! chunks are mined globally with margin-based k-NN retrieval followed by
//! greedy one-to-one matching. Mined chunk pairs are then aggregated into
//! document pairs scored by the Document Alignment Coefficient
//!
//! ```text
//! DAC = 2 * N_aligned / (N_src + N_tgt)
//! ```
//!
//! and thresholded. Pooling baselines (mean, length, IDF and length-IDF
//! weighted means of sentence embeddings) run the same miner directly on
//! whole-document vectors.
//!
//! Module map:
//!
//! - [`corpus`]: manifests, documents, segmentation into chunk units
//! - [`embed_store`]: the `DEMB` binary matrix format, normalization, and an
//!   HTTP embedding-service client
//! - [`pooling`]: MP / LP / IDF / LIDF document pooling
//! - [`knn`]: exact flat inner-product index with batched top-k search
//! - [`miner`]: margin scores, max-strategy candidates, greedy matching
//! - [`dac`]: aggregation to document pairs, DAC scores, thresholded selection
//! - [`pooled_align`]: the pooled-embedding baseline path
//! - [`eval`]: noise injection, precision/recall/F1, threshold sweeps
//! - [`synth`]: planted synthetic corpora for benchmarks and tests
//! - [`cli`]: the `docalign` command-line driver
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod cli;
pub mod corpus;
pub mod dac;
pub mod embed_store;
pub mod error;
pub mod eval;
pub mod knn;
pub mod miner;
pub mod pooled_align;
pub mod pooling;
pub mod synth;
pub mod tsv;

pub use corpus::{load_corpus, segment, ChunkUnit, Document, Granularity};
pub use dac::{aggregate, align_documents_dac, select_pairs, DacConfig, DocPairScore, SelectionMode};
pub use embed_store::{normalize, read_matrix, write_matrix, EmbeddingMatrix};
pub use error::{Error, Result};
pub use eval::{inject_noise, score, sweep_thresholds, EvalReport, GoldSet, NoiseConfig};
pub use knn::{FlatIndex, NeighborList};
pub use miner::{greedy_match, margin_scores, mine, AlignedUnitPair, Candidate, MarginParams};
pub use pooled_align::align_documents_pooled;
pub use pooling::{build_idf, pool_document, IdfTable, PoolingMethod};
