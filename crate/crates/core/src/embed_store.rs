//! Unit embeddings: the in-memory matrix, its on-disk format, and a client
//! for an external embedding service.
//!
//! On-disk layout (`DEMB`, version 1, all integers little-endian):
//!
//! ```text
//! magic     4 bytes   "DEMB"
//! version   u16       1
//! dim       u32       >= 1
//! count     u64       number of rows
//! ids       count x (u32 byte length, UTF-8 bytes)
//! payload   dim x count f32, row-major
//! ```

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ChunkUnit;

pub const MAGIC: &[u8; 4] = b"DEMB";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 8;

/// Rows whose L2 norm is within this distance of 1 count as normalized.
pub const NORM_TOLERANCE: f32 = 1e-4;

/// Environment variable consulted for the embedding endpoint.
pub const ENDPOINT_ENV: &str = "DOCALIGN_EMBED_ENDPOINT";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad magic bytes {found:?}, expected \"DEMB\"")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("payload size mismatch: header implies {expected} bytes, file has {actual}")]
    PayloadSize { expected: u64, actual: u64 },
    #[error("id block: {0}")]
    IdBlock(String),
    #[error("duplicate unit id {0}")]
    DuplicateId(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unit {0} has a zero-norm embedding")]
    ZeroNorm(String),
    #[error("unit {0} has a non-finite embedding component")]
    NonFinite(String),
    #[error("unit {0} not present in embedding matrix")]
    MissingId(String),
    #[error("embedding service: {0}")]
    Service(String),
    #[error("embedding service returned {got} vectors for {sent} texts")]
    CountMismatch { sent: usize, got: usize },
}

/// Dense row-major `f32` matrix with one unique id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize, ids: Vec<String>, data: Vec<f32>) -> Result<Self, StoreError> {
        if dim == 0 {
            return Err(StoreError::Shape("dim must be >= 1".into()));
        }
        if data.len() != dim * ids.len() {
            return Err(StoreError::Shape(format!(
                "{} ids x dim {} needs {} values, got {}",
                ids.len(),
                dim,
                dim * ids.len(),
                data.len()
            )));
        }
        check_unique(&ids)?;
        Ok(EmbeddingMatrix { dim, ids, data })
    }

    pub fn from_rows(ids: Vec<String>, rows: Vec<Vec<f32>>) -> Result<Self, StoreError> {
        if ids.len() != rows.len() {
            return Err(StoreError::Shape(format!(
                "{} ids for {} rows",
                ids.len(),
                rows.len()
            )));
        }
        let dim = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(StoreError::Shape(format!(
                "row {} ({}) has dim {}, expected {dim}",
                i,
                ids[i],
                r.len()
            )));
        }
        Self::new(dim, ids, rows.into_iter().flatten().collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, row: usize) -> &str {
        &self.ids[row]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn id_index(&self) -> HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
    }

    /// Gathers the rows named by `ids`, in that order.
    pub fn select<S: AsRef<str>>(&self, ids: &[S]) -> Result<EmbeddingMatrix, StoreError> {
        let index = self.id_index();
        let mut data = Vec::with_capacity(ids.len() * self.dim);
        let mut out_ids = Vec::with_capacity(ids.len());
        for id in ids {
            let id = id.as_ref();
            let &row = index.get(id).ok_or_else(|| StoreError::MissingId(id.to_string()))?;
            data.extend_from_slice(self.row(row));
            out_ids.push(id.to_string());
        }
        EmbeddingMatrix::new(self.dim, out_ids, data)
    }

    /// Returns the first row whose norm is off by more than `tol`, if any.
    pub fn first_unnormalized(&self, tol: f32) -> Option<(usize, f32)> {
        self.rows()
            .map(l2_norm)
            .enumerate()
            .find(|&(_, n)| !((n - 1.0).abs() <= tol))
    }

    /// Stacks several matrices sharing a dim. Ids must stay unique.
    pub fn concat(parts: &[&EmbeddingMatrix]) -> Result<EmbeddingMatrix, StoreError> {
        let dim = parts.first().map_or(0, |m| m.dim);
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for m in parts {
            if m.dim != dim {
                return Err(StoreError::Shape(format!("cannot stack dim {} onto dim {dim}", m.dim)));
            }
            ids.extend(m.ids.iter().cloned());
            data.extend_from_slice(&m.data);
        }
        EmbeddingMatrix::new(dim, ids, data)
    }
}

fn check_unique(ids: &[String]) -> Result<(), StoreError> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(StoreError::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

fn l2_norm(row: &[f32]) -> f32 {
    row.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt() as f32
}

/// Scales every row to unit L2 norm.
pub fn normalize(m: &EmbeddingMatrix) -> Result<EmbeddingMatrix, StoreError> {
    let mut data = Vec::with_capacity(m.data.len());
    for (i, row) in m.rows().enumerate() {
        if row.iter().any(|x| !x.is_finite()) {
            return Err(StoreError::NonFinite(m.ids[i].clone()));
        }
        let norm = row.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(StoreError::ZeroNorm(m.ids[i].clone()));
        }
        data.extend(row.iter().map(|&x| (f64::from(x) / norm) as f32));
    }
    Ok(EmbeddingMatrix {
        dim: m.dim,
        ids: m.ids.clone(),
        data,
    })
}

pub fn write_matrix(m: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<(), StoreError> {
    let path = path.as_ref();
    let io_err = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    encode(m, &mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

fn encode(m: &EmbeddingMatrix, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(m.dim as u32).to_le_bytes())?;
    w.write_all(&(m.ids.len() as u64).to_le_bytes())?;
    for id in &m.ids {
        w.write_all(&(id.len() as u32).to_le_bytes())?;
        w.write_all(id.as_bytes())?;
    }
    for x in &m.data {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<EmbeddingMatrix, StoreError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}

/// Parses a complete `DEMB` image.
pub fn decode(bytes: &[u8]) -> Result<EmbeddingMatrix, StoreError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(StoreError::BadMagic {
            found: bytes.iter().take(4).copied().collect(),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(StoreError::InvalidHeader(format!(
            "file is {} bytes, header needs {HEADER_LEN}",
            bytes.len()
        )));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(StoreError::UnsupportedVersion(version));
    }
    let dim = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(bytes[10..18].try_into().unwrap());
    if dim == 0 {
        return Err(StoreError::InvalidHeader("dim is 0".into()));
    }

    let mut pos = HEADER_LEN;
    let mut ids = Vec::new();
    for i in 0..count {
        let len_bytes = bytes
            .get(pos..pos + 4)
            .ok_or_else(|| StoreError::IdBlock(format!("truncated before id {i}")))?;
        let len = u32::from_le_bytes(len_bytes.try_into().unwrap()) as usize;
        pos += 4;
        let raw = bytes
            .get(pos..pos + len)
            .ok_or_else(|| StoreError::IdBlock(format!("id {i} runs past end of file")))?;
        let id = std::str::from_utf8(raw)
            .map_err(|e| StoreError::IdBlock(format!("id {i} is not UTF-8: {e}")))?;
        ids.push(id.to_owned());
        pos += len;
    }

    let expected = (dim as u64)
        .checked_mul(count)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| StoreError::InvalidHeader("dim x count overflows".into()))?;
    let actual = (bytes.len() - pos) as u64;
    if expected != actual {
        return Err(StoreError::PayloadSize { expected, actual });
    }
    let data = bytes[pos..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    check_unique(&ids)?;
    Ok(EmbeddingMatrix { dim, ids, data })
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<Option<f64>>>,
}

/// Blocking client for an embedding service speaking
/// `POST {"texts": [...]}` -> `{"vectors": [[...], ...]}`.
///
/// Batches are sent in input order. Transport errors, 429 and 5xx responses
/// are retried with exponential backoff; other failures abort immediately.
#[derive(Debug, Clone)]
pub struct EmbeddingClient {
    endpoint: String,
    batch_size: usize,
    max_attempts: u32,
    initial_backoff: Duration,
    agent: ureq::Agent,
}

impl EmbeddingClient {
    pub fn new(endpoint: impl Into<String>, batch_size: usize) -> Result<Self, StoreError> {
        if batch_size == 0 {
            return Err(StoreError::Service("batch_size must be >= 1".into()));
        }
        Ok(EmbeddingClient {
            endpoint: endpoint.into(),
            batch_size,
            max_attempts: 3,
            initial_backoff: Duration::from_millis(200),
            agent: ureq::AgentBuilder::new()
                .timeout(Duration::from_secs(120))
                .build(),
        })
    }

    pub fn with_retry(mut self, max_attempts: u32, initial_backoff: Duration) -> Self {
        self.max_attempts = max_attempts.max(1);
        self.initial_backoff = initial_backoff;
        self
    }

    /// Embeds `texts`, returning a normalized matrix whose ids are `ids`.
    pub fn embed(&self, ids: &[String], texts: &[&str]) -> Result<EmbeddingMatrix, StoreError> {
        assert_eq!(ids.len(), texts.len());
        let mut rows: Vec<Vec<f32>> = Vec::with_capacity(texts.len());
        for (batch_no, batch) in texts.chunks(self.batch_size).enumerate() {
            let offset = batch_no * self.batch_size;
            let vectors = self.post_with_retry(batch)?;
            if vectors.len() != batch.len() {
                return Err(StoreError::CountMismatch {
                    sent: batch.len(),
                    got: vectors.len(),
                });
            }
            for (j, v) in vectors.into_iter().enumerate() {
                let id = &ids[offset + j];
                let row: Option<Vec<f32>> = v
                    .into_iter()
                    .map(|c| c.map(|x| x as f32).filter(|x| x.is_finite()))
                    .collect();
                rows.push(row.ok_or_else(|| StoreError::NonFinite(id.clone()))?);
            }
        }
        if rows.is_empty() {
            return Err(StoreError::Service("no texts to embed".into()));
        }
        normalize(&EmbeddingMatrix::from_rows(ids.to_vec(), rows)?)
    }

    fn post_with_retry(&self, batch: &[&str]) -> Result<Vec<Vec<Option<f64>>>, StoreError> {
        let mut backoff = self.initial_backoff;
        let mut attempt = 1;
        loop {
            match self.post(batch) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retryable(e)) if attempt >= self.max_attempts => {
                    return Err(StoreError::Service(format!(
                        "giving up after {attempt} attempts: {e}"
                    )))
                }
                Err(Attempt::Retryable(e)) => {
                    log::warn!("embedding request failed (attempt {attempt}): {e}; retrying");
                    std::thread::sleep(backoff);
                    backoff *= 2;
                    attempt += 1;
                }
            }
        }
    }

    fn post(&self, batch: &[&str]) -> Result<Vec<Vec<Option<f64>>>, Attempt> {
        let resp = self
            .agent
            .post(&self.endpoint)
            .send_json(EmbedRequest { texts: batch });
        match resp {
            Ok(resp) => resp
                .into_json::<EmbedResponse>()
                .map(|r| r.vectors)
                .map_err(|e| Attempt::Fatal(StoreError::Service(format!("malformed response: {e}")))),
            Err(ureq::Error::Status(code, _)) if code == 429 || code >= 500 => {
                Err(Attempt::Retryable(format!("HTTP {code}")))
            }
            Err(ureq::Error::Status(code, _)) => {
                Err(Attempt::Fatal(StoreError::Service(format!("HTTP {code}"))))
            }
            Err(e) => Err(Attempt::Retryable(e.to_string())),
        }
    }
}

enum Attempt {
    Retryable(String),
    Fatal(StoreError),
}

/// Embeds units through the service at `endpoint`; rows follow unit order.
pub fn fetch_embeddings(
    units: &[ChunkUnit],
    endpoint: &str,
    batch_size: usize,
) -> Result<EmbeddingMatrix, StoreError> {
    let ids: Vec<String> = units.iter().map(|u| u.unit_id.clone()).collect();
    let texts: Vec<&str> = units.iter().map(|u| u.text.as_str()).collect();
    EmbeddingClient::new(endpoint, batch_size)?.embed(&ids, &texts)
}
