//! Reference implementations used as test oracles. They materialize full
//! score matrices and share no code with the library's index or miner.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use docalign::EmbeddingMatrix;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// `n` random unit vectors with ids `"{prefix}{i}"`.
pub fn random_unit_matrix(rng: &mut impl Rng, prefix: &str, n: usize, dim: usize) -> EmbeddingMatrix {
    let mut ids = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        rows.push(v.iter().map(|x| (x / norm) as f32).collect::<Vec<f32>>());
        ids.push(format!("{prefix}{i}"));
    }
    EmbeddingMatrix::from_rows(ids, rows).unwrap()
}

/// Plain left-to-right f32 inner product.
pub fn inner(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = 0.0f32;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

/// Full `|q| x |idx|` score matrix.
pub fn score_matrix(q: &EmbeddingMatrix, idx: &EmbeddingMatrix) -> Vec<Vec<f32>> {
    (0..q.len())
        .map(|i| (0..idx.len()).map(|j| inner(q.row(i), idx.row(j))).collect())
        .collect()
}

/// Top-k by full sort: score descending, then row ascending.
pub fn brute_top_k(scores: &[f32], k: usize) -> Vec<(usize, f32)> {
    let mut all: Vec<(usize, f32)> = scores.iter().copied().enumerate().collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

#[derive(Debug, Clone)]
pub struct DenseCandidate {
    pub i: usize,
    pub j: usize,
    pub cosine: f32,
    pub margin: f64,
}

/// Margin candidates computed from the dense cosine matrix.
pub fn dense_margins(x: &EmbeddingMatrix, y: &EmbeddingMatrix, k: usize) -> Vec<DenseCandidate> {
    let cos = score_matrix(x, y);
    let kx = k.min(y.len());
    let ky = k.min(x.len());
    let mut in_union = vec![vec![false; y.len()]; x.len()];
    let mut avg_x = vec![0.0f64; x.len()];
    for i in 0..x.len() {
        let top = brute_top_k(&cos[i], kx);
        avg_x[i] = top.iter().map(|&(_, s)| s as f64).sum::<f64>() / kx as f64;
        for (j, _) in top {
            in_union[i][j] = true;
        }
    }
    let mut avg_y = vec![0.0f64; y.len()];
    for j in 0..y.len() {
        let column: Vec<f32> = (0..x.len()).map(|i| cos[i][j]).collect();
        let top = brute_top_k(&column, ky);
        avg_y[j] = top.iter().map(|&(_, s)| s as f64).sum::<f64>() / ky as f64;
        for (i, _) in top {
            in_union[i][j] = true;
        }
    }
    let mut out = Vec::new();
    for i in 0..x.len() {
        for j in 0..y.len() {
            if in_union[i][j] {
                out.push(DenseCandidate {
                    i,
                    j,
                    cosine: cos[i][j],
                    margin: cos[i][j] as f64 / ((avg_x[i] + avg_y[j]) / 2.0),
                });
            }
        }
    }
    out
}

/// Reference miner: dense margins, then a straightforward greedy pass.
pub fn reference_mine(x: &EmbeddingMatrix, y: &EmbeddingMatrix, k: usize) -> BTreeSet<(String, String)> {
    let mut cands = dense_margins(x, y, k);
    cands.retain(|c| c.margin > 0.0 && c.margin.is_finite());
    cands.sort_by(|a, b| {
        b.margin
            .partial_cmp(&a.margin)
            .unwrap()
            .then(b.cosine.partial_cmp(&a.cosine).unwrap())
            .then(x.id(a.i).cmp(x.id(b.i)))
            .then(y.id(a.j).cmp(y.id(b.j)))
    });
    let mut taken_x = HashSet::new();
    let mut taken_y = HashSet::new();
    let mut out = BTreeSet::new();
    for c in cands {
        if taken_x.contains(&c.i) || taken_y.contains(&c.j) {
            continue;
        }
        taken_x.insert(c.i);
        taken_y.insert(c.j);
        out.insert((x.id(c.i).to_string(), y.id(c.j).to_string()));
    }
    out
}

pub fn assert_one_to_one<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) {
    let mut src = HashSet::new();
    let mut tgt = HashSet::new();
    for (s, t) in pairs {
        assert!(src.insert(s), "source id {s} appears twice");
        assert!(tgt.insert(t), "target id {t} appears twice");
    }
}
