//! Document embeddings as weighted means of unit embeddings.
//!
//! | method | unit weight `w_i`                       |
//! |--------|-----------------------------------------|
//! | MP     | 1                                       |
//! | LP     | token count                             |
//! | IDF    | mean idf of the unit's tokens           |
//! | LIDF   | token count x mean idf                  |
//!
//! The pooled vector is `normalize(sum_i w_i v_i)`. Idf uses the smoothed
//! form `ln((1 + N) / (1 + df)) + 1`, which never drops below 1.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{segment, ChunkUnit, Document, Granularity};
use crate::embed_store::{EmbeddingMatrix, StoreError};

#[derive(Debug, Error)]
pub enum PoolingError {
    #[error("document {0} has no units to pool")]
    NoUnits(String),
    #[error("document {doc_id}: {units} units but {rows} embedding rows")]
    RowCount {
        doc_id: String,
        units: usize,
        rows: usize,
    },
    #[error("document {doc_id}: embedding rows have inconsistent dimensions")]
    Dim { doc_id: String },
    #[error("{0} pooling requires an idf table")]
    MissingIdf(PoolingMethod),
    #[error("{0} pooling does not take an idf table")]
    UnexpectedIdf(PoolingMethod),
    #[error("document {doc_id}: every unit has zero {method} weight")]
    ZeroWeights {
        doc_id: String,
        method: PoolingMethod,
    },
    #[error("document {0}: weighted sum of unit vectors is zero")]
    ZeroResultant(String),
    #[error("cannot build idf statistics from an empty corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolingMethod {
    /// Plain mean.
    Mp,
    /// Length weighted.
    Lp,
    /// Mean-idf weighted.
    Idf,
    /// Length times mean-idf weighted.
    Lidf,
}

impl PoolingMethod {
    pub const ALL: [PoolingMethod; 4] = [
        PoolingMethod::Mp,
        PoolingMethod::Lp,
        PoolingMethod::Idf,
        PoolingMethod::Lidf,
    ];

    pub fn needs_idf(self) -> bool {
        matches!(self, PoolingMethod::Idf | PoolingMethod::Lidf)
    }
}

impl fmt::Display for PoolingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoolingMethod::Mp => "mp",
            PoolingMethod::Lp => "lp",
            PoolingMethod::Idf => "idf",
            PoolingMethod::Lidf => "lidf",
        })
    }
}

impl FromStr for PoolingMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mp" => Ok(PoolingMethod::Mp),
            "lp" => Ok(PoolingMethod::Lp),
            "idf" => Ok(PoolingMethod::Idf),
            "lidf" => Ok(PoolingMethod::Lidf),
            _ => Err(format!("unknown pooling method {s:?} (expected mp, lp, idf, lidf)")),
        }
    }
}

/// Document frequencies over one corpus side.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    doc_count: usize,
    df: HashMap<String, usize>,
}

impl IdfTable {
    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn df(&self, token: &str) -> usize {
        self.df.get(&nfc(token)).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.df.len()
    }

    pub fn is_empty(&self) -> bool {
        self.df.is_empty()
    }

    /// Smoothed idf. Tokens never seen in the corpus get `df = 0`.
    pub fn idf(&self, token: &str) -> f64 {
        self.idf_normalized(&nfc(token))
    }

    fn idf_normalized(&self, token: &str) -> f64 {
        let df = self.df.get(token).copied().unwrap_or(0);
        ((1 + self.doc_count) as f64 / (1 + df) as f64).ln() + 1.0
    }

    /// Mean idf over the whitespace tokens of `text`; `None` if it has none.
    pub fn mean_idf(&self, text: &str) -> Option<f64> {
        let mut n = 0usize;
        let mut sum = 0.0;
        for tok in text.split_whitespace() {
            sum += self.idf_normalized(&nfc(tok));
            n += 1;
        }
        (n > 0).then(|| sum / n as f64)
    }
}

fn nfc(token: &str) -> String {
    token.nfc().collect()
}

pub fn build_idf(documents: &[Document]) -> Result<IdfTable, PoolingError> {
    if documents.is_empty() {
        return Err(PoolingError::EmptyCorpus);
    }
    let mut df: HashMap<String, usize> = HashMap::new();
    for doc in documents {
        let distinct: HashSet<String> = doc
            .sentences
            .iter()
            .flat_map(|s| s.split_whitespace())
            .map(nfc)
            .collect();
        for tok in distinct {
            *df.entry(tok).or_insert(0) += 1;
        }
    }
    Ok(IdfTable {
        doc_count: documents.len(),
        df,
    })
}

/// Weight of one unit under `method`.
pub fn unit_weight(unit: &ChunkUnit, method: PoolingMethod, idf: Option<&IdfTable>) -> f64 {
    let length = unit.token_count as f64;
    let mean_idf = || idf.and_then(|t| t.mean_idf(&unit.text)).unwrap_or(0.0);
    match method {
        PoolingMethod::Mp => 1.0,
        PoolingMethod::Lp => length,
        PoolingMethod::Idf => mean_idf(),
        PoolingMethod::Lidf => length * mean_idf(),
    }
}

/// Pools one document's unit vectors into a single unit-norm vector.
///
/// `rows[i]` is the embedding of `units[i]`; rows are expected normalized.
pub fn pool_document(
    units: &[ChunkUnit],
    rows: &[&[f32]],
    method: PoolingMethod,
    idf: Option<&IdfTable>,
) -> Result<Vec<f32>, PoolingError> {
    let doc_id = units.first().map(|u| u.doc_id.clone()).unwrap_or_default();
    if units.is_empty() {
        return Err(PoolingError::NoUnits(doc_id));
    }
    if units.len() != rows.len() {
        return Err(PoolingError::RowCount {
            doc_id,
            units: units.len(),
            rows: rows.len(),
        });
    }
    match (method.needs_idf(), idf.is_some()) {
        (true, false) => return Err(PoolingError::MissingIdf(method)),
        (false, true) => return Err(PoolingError::UnexpectedIdf(method)),
        _ => {}
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(PoolingError::Dim { doc_id });
    }

    let weights: Vec<f64> = units.iter().map(|u| unit_weight(u, method, idf)).collect();
    if weights.iter().all(|&w| w == 0.0) {
        return Err(PoolingError::ZeroWeights { doc_id, method });
    }

    // Neumaier-compensated sums keep the result independent of unit order.
    let mut sum = vec![0.0f64; dim];
    let mut comp = vec![0.0f64; dim];
    for (row, &w) in rows.iter().zip(&weights) {
        if w == 0.0 {
            continue;
        }
        for ((s, c), &x) in sum.iter_mut().zip(comp.iter_mut()).zip(row.iter()) {
            let term = w * f64::from(x);
            let t = *s + term;
            if s.abs() >= term.abs() {
                *c += (*s - t) + term;
            } else {
                *c += (term - t) + *s;
            }
            *s = t;
        }
    }
    let total: Vec<f64> = sum.iter().zip(&comp).map(|(s, c)| s + c).collect();
    let norm = total.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(PoolingError::ZeroResultant(doc_id));
    }
    Ok(total.iter().map(|x| (x / norm) as f32).collect())
}

/// Pools every document of one corpus side from its sentence-level
/// (`G = 1`) unit embeddings. The result has one row per document, with
/// `ids = doc_ids`, in document order.
pub fn pool_corpus(
    docs: &[Document],
    sentence_embeddings: &EmbeddingMatrix,
    method: PoolingMethod,
    idf: Option<&IdfTable>,
) -> Result<EmbeddingMatrix, PoolingError> {
    let index = sentence_embeddings.id_index();
    let pooled: Vec<Vec<f32>> = docs
        .par_iter()
        .map(|doc| {
            let units = segment(doc, Granularity::SENTENCE);
            let rows = units
                .iter()
                .map(|u| {
                    index
                        .get(u.unit_id.as_str())
                        .map(|&r| sentence_embeddings.row(r))
                        .ok_or_else(|| StoreError::MissingId(u.unit_id.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            pool_document(&units, &rows, method, idf)
        })
        .collect::<Result<_, _>>()?;
    let ids = docs.iter().map(|d| d.doc_id.clone()).collect();
    Ok(EmbeddingMatrix::from_rows(ids, pooled)?)
}
