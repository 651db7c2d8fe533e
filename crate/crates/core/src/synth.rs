//! Planted synthetic corpora with known gold alignments.
//!
//! The embedding space is split into three blocks of coordinates:
//!
//! ```text
//! [ shared (true pairs) | source noise | target noise ]
//! ```
//!
//! Chunk `c` of true pair `p` draws one random unit vector `u` in the shared
//! block; the source and target chunks are `u` plus independent
//! perturbations of a fixed norm, renormalized. Noise documents draw their
//! chunks from their own side's noise block, so they are exactly orthogonal
//! to every vector on the other side. A degraded variant replaces a fraction
//! of true-pair chunks with random vectors over the full space.
//!
//! Every document has one sentence per chunk, so the generated embeddings
//! are sentence-level (`G = 1`) unit embeddings.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::corpus::{unit_id, write_corpus, Document};
use crate::embed_store::{write_matrix, EmbeddingMatrix, StoreError};
use crate::eval::GoldSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedConfig {
    /// Number of true document pairs.
    pub pairs: usize,
    pub chunks_per_doc: usize,
    /// Unalignable documents added to each side.
    pub noise_docs: usize,
    pub shared_dim: usize,
    /// Width of each side's private noise block.
    pub noise_dim: usize,
    /// Norm of the perturbation added to each true-pair chunk.
    pub perturbation: f64,
    /// Fraction of true-pair chunks (per side) replaced by random vectors.
    pub replace_fraction: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            pairs: 100,
            chunks_per_doc: 5,
            noise_docs: 50,
            shared_dim: 256,
            noise_dim: 32,
            perturbation: 0.05,
            replace_fraction: 0.0,
            seed: 2024,
        }
    }
}

impl PlantedConfig {
    /// Heavier perturbation with 30% of true-pair chunks replaced.
    pub fn degraded() -> Self {
        PlantedConfig {
            perturbation: 0.5,
            replace_fraction: 0.3,
            ..PlantedConfig::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.shared_dim + 2 * self.noise_dim
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub src_docs: Vec<Document>,
    pub tgt_docs: Vec<Document>,
    /// Sentence-level embeddings, ids `"<doc_id>#<i>"`.
    pub src_embeddings: EmbeddingMatrix,
    pub tgt_embeddings: EmbeddingMatrix,
    pub gold: GoldSet,
}

struct Gen {
    rng: Xoshiro256PlusPlus,
    cfg: PlantedConfig,
}

impl Gen {
    fn gaussian(&mut self, range: std::ops::Range<usize>) -> Vec<f64> {
        let mut v = vec![0.0; self.cfg.dim()];
        for x in &mut v[range] {
            *x = self.rng.sample(StandardNormal);
        }
        v
    }

    fn unit(&mut self, range: std::ops::Range<usize>) -> Vec<f64> {
        loop {
            let v = self.gaussian(range.clone());
            let n = norm(&v);
            if n > 1e-9 {
                return v.into_iter().map(|x| x / n).collect();
            }
        }
    }

    fn perturbed(&mut self, base: &[f64]) -> Vec<f32> {
        let shared = 0..self.cfg.shared_dim;
        let noise = self.unit(shared);
        let v: Vec<f64> = base
            .iter()
            .zip(&noise)
            .map(|(b, e)| b + self.cfg.perturbation * e)
            .collect();
        to_unit_f32(&v)
    }

    fn sentence(&mut self) -> String {
        let len = self.rng.gen_range(4..=12);
        (0..len)
            .map(|_| format!("w{}", self.rng.gen_range(0..400)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn doc(&mut self, id: &str, lang: &str) -> Document {
        let sentences = (0..self.cfg.chunks_per_doc).map(|_| self.sentence()).collect();
        Document {
            doc_id: id.to_string(),
            lang: lang.to_string(),
            sentences,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn to_unit_f32(v: &[f64]) -> Vec<f32> {
    let n = norm(v);
    v.iter().map(|x| (x / n) as f32).collect()
}

/// Generates a planted corpus. Deterministic in `cfg`.
pub fn planted_corpus(cfg: &PlantedConfig) -> PlantedCorpus {
    assert!(cfg.chunks_per_doc >= 1 && cfg.shared_dim >= 1 && cfg.noise_dim >= 1);
    let mut g = Gen {
        rng: Xoshiro256PlusPlus::seed_from_u64(cfg.seed),
        cfg: *cfg,
    };
    let dim = cfg.dim();
    let shared = 0..cfg.shared_dim;
    let src_noise = cfg.shared_dim..cfg.shared_dim + cfg.noise_dim;
    let tgt_noise = cfg.shared_dim + cfg.noise_dim..dim;

    let mut src_docs = Vec::new();
    let mut tgt_docs = Vec::new();
    let mut src_rows: Vec<(String, Vec<f32>)> = Vec::new();
    let mut tgt_rows: Vec<(String, Vec<f32>)> = Vec::new();
    let mut gold = Vec::new();

    for p in 0..cfg.pairs {
        let (sid, tid) = (format!("s{p:04}"), format!("t{p:04}"));
        src_docs.push(g.doc(&sid, "src"));
        tgt_docs.push(g.doc(&tid, "tgt"));
        for c in 0..cfg.chunks_per_doc {
            let base = g.unit(shared.clone());
            let mut sv = g.perturbed(&base);
            let mut tv = g.perturbed(&base);
            if g.rng.gen_bool(cfg.replace_fraction) {
                sv = to_unit_f32(&g.unit(0..dim));
            }
            if g.rng.gen_bool(cfg.replace_fraction) {
                tv = to_unit_f32(&g.unit(0..dim));
            }
            src_rows.push((unit_id(&sid, c), sv));
            tgt_rows.push((unit_id(&tid, c), tv));
        }
        gold.push((sid, tid));
    }
    for n in 0..cfg.noise_docs {
        let (sid, tid) = (format!("sn{n:04}"), format!("tn{n:04}"));
        src_docs.push(g.doc(&sid, "src"));
        tgt_docs.push(g.doc(&tid, "tgt"));
        for c in 0..cfg.chunks_per_doc {
            let sv = to_unit_f32(&g.unit(src_noise.clone()));
            let tv = to_unit_f32(&g.unit(tgt_noise.clone()));
            src_rows.push((unit_id(&sid, c), sv));
            tgt_rows.push((unit_id(&tid, c), tv));
        }
    }
    tgt_docs.shuffle(&mut g.rng);

    let matrix = |rows: Vec<(String, Vec<f32>)>| {
        let (ids, vecs) = rows.into_iter().unzip();
        EmbeddingMatrix::from_rows(ids, vecs).expect("generated rows are well formed")
    };
    PlantedCorpus {
        src_docs,
        tgt_docs,
        src_embeddings: matrix(src_rows),
        tgt_embeddings: matrix(tgt_rows),
        gold: GoldSet::new(gold).expect("planted gold is one-to-one"),
    }
}

/// File locations of a fixture written by [`write_fixture`].
#[derive(Debug, Clone)]
pub struct FixturePaths {
    pub src_manifest: PathBuf,
    pub tgt_manifest: PathBuf,
    pub src_embeddings: PathBuf,
    pub tgt_embeddings: PathBuf,
    pub gold: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Writes manifests, sentence files, `DEMB` embeddings and a gold TSV under
/// `dir`.
pub fn write_fixture(corpus: &PlantedCorpus, dir: &Path) -> Result<FixturePaths, FixtureError> {
    fs::create_dir_all(dir)?;
    let paths = FixturePaths {
        src_manifest: dir.join("src.jsonl"),
        tgt_manifest: dir.join("tgt.jsonl"),
        src_embeddings: dir.join("src.demb"),
        tgt_embeddings: dir.join("tgt.demb"),
        gold: dir.join("gold.tsv"),
    };
    write_corpus(&corpus.src_docs, &paths.src_manifest, "src")?;
    write_corpus(&corpus.tgt_docs, &paths.tgt_manifest, "tgt")?;
    write_matrix(&corpus.src_embeddings, &paths.src_embeddings)?;
    write_matrix(&corpus.tgt_embeddings, &paths.tgt_embeddings)?;
    corpus.gold.write_tsv(fs::File::create(&paths.gold)?)?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::dot;

    #[test]
    fn shapes_and_determinism() {
        let cfg = PlantedConfig {
            pairs: 6,
            noise_docs: 3,
            ..PlantedConfig::default()
        };
        let a = planted_corpus(&cfg);
        assert_eq!(a.src_docs.len(), 9);
        assert_eq!(a.tgt_docs.len(), 9);
        assert_eq!(a.src_embeddings.len(), 45);
        assert_eq!(a.gold.len(), 6);
        assert!(a.src_embeddings.first_unnormalized(1e-5).is_none());
        let b = planted_corpus(&cfg);
        assert_eq!(a.src_embeddings, b.src_embeddings);
        assert_eq!(a.tgt_docs, b.tgt_docs);
    }

    #[test]
    fn noise_is_orthogonal_to_other_side() {
        let cfg = PlantedConfig {
            pairs: 4,
            noise_docs: 4,
            ..PlantedConfig::default()
        };
        let c = planted_corpus(&cfg);
        let idx = c.tgt_embeddings.id_index();
        let noise_row = c.src_embeddings.row(c.src_embeddings.id_index()["sn0000#0"]);
        for (id, &r) in &idx {
            assert_eq!(dot(noise_row, c.tgt_embeddings.row(r)), 0.0, "{id}");
        }
        let s = c.src_embeddings.row(c.src_embeddings.id_index()["s0001#2"]);
        let t = c.tgt_embeddings.row(idx["t0001#2"]);
        assert!(dot(s, t) > 0.99);
    }
}
