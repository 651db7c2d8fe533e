//! Intrinsic evaluation: noise injection, precision/recall/F1 against gold
//! pairs, and DAC threshold sweeps.
//!
//! Noise sampling uses SplitMix64 (64-bit state). A run seed is split into
//! one child seed per corpus side by drawing the first (source) and second
//! (target) outputs of a SplitMix64 stream seeded with the run seed; each
//! side then samples without replacement with `rand::seq::index::sample`.

use std::collections::{BTreeSet, HashSet};
use std::io::{self, Write};
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Document;
use crate::dac::{select_pairs, DacConfig, DocPairScore};
use crate::tsv::{read_rows, TsvError};

pub const DEFAULT_NOISE_RATIO: f64 = 0.5;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold document {0} appears in more than one pair")]
    GoldNotOneToOne(String),
    #[error("duplicate predicted pair ({0}, {1})")]
    DuplicatePrediction(String, String),
    #[error("noise pool has {available} documents, {needed} needed")]
    InsufficientNoise { available: usize, needed: usize },
    #[error("noise document {0} collides with an alignable document id")]
    IdCollision(String),
    #[error("noise ratio {0} must be a finite number >= 0")]
    InvalidRatio(f64),
    #[error("thresholds must be ascending and within [0, 1]: {0:?}")]
    InvalidThresholds(Vec<f64>),
    #[error(transparent)]
    Tsv(#[from] TsvError),
}

/// Reference document pairs, one-to-one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GoldSet {
    pairs: BTreeSet<(String, String)>,
}

impl GoldSet {
    pub fn new<I, S, T>(pairs: I) -> Result<Self, EvalError>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut src = HashSet::new();
        let mut tgt = HashSet::new();
        let mut set = BTreeSet::new();
        for (s, t) in pairs {
            let (s, t) = (s.into(), t.into());
            if set.contains(&(s.clone(), t.clone())) {
                continue;
            }
            if !src.insert(s.clone()) {
                return Err(EvalError::GoldNotOneToOne(s));
            }
            if !tgt.insert(t.clone()) {
                return Err(EvalError::GoldNotOneToOne(t));
            }
            set.insert((s, t));
        }
        Ok(GoldSet { pairs: set })
    }

    /// Reads a `src_doc<TAB>tgt_doc` file; an optional header is skipped.
    pub fn read(path: &Path) -> Result<Self, EvalError> {
        let rows = read_rows(path, 2, &["src_doc", "src_id"])?;
        GoldSet::new(rows.into_iter().map(|mut r| {
            let t = std::mem::take(&mut r[1]);
            (std::mem::take(&mut r[0]), t)
        }))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, src: &str, tgt: &str) -> bool {
        self.pairs.contains(&(src.to_string(), tgt.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &(String, String)> {
        self.pairs.iter()
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "src_doc\ttgt_doc")?;
        for (s, t) in &self.pairs {
            writeln!(w, "{s}\t{t}")?;
        }
        w.flush()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub threshold: Option<f64>,
    pub true_positives: usize,
    pub predicted_count: usize,
    pub gold_count: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl EvalReport {
    pub fn from_counts(true_positives: usize, predicted_count: usize, gold_count: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(true_positives, predicted_count);
        let recall = ratio(true_positives, gold_count);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        EvalReport {
            threshold: None,
            true_positives,
            predicted_count,
            gold_count,
            precision,
            recall,
            f1,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self
    }
}

/// Exact-match scoring of predicted pairs.
pub fn score<S: AsRef<str>, T: AsRef<str>>(
    predicted: &[(S, T)],
    gold: &GoldSet,
) -> Result<EvalReport, EvalError> {
    let mut seen = HashSet::with_capacity(predicted.len());
    let mut tp = 0;
    for (s, t) in predicted {
        let (s, t) = (s.as_ref(), t.as_ref());
        if !seen.insert((s, t)) {
            return Err(EvalError::DuplicatePrediction(s.to_string(), t.to_string()));
        }
        if gold.contains(s, t) {
            tp += 1;
        }
    }
    Ok(EvalReport::from_counts(tp, predicted.len(), gold.len()))
}

pub fn score_doc_pairs(selected: &[DocPairScore], gold: &GoldSet) -> Result<EvalReport, EvalError> {
    let pairs: Vec<(&str, &str)> = selected
        .iter()
        .map(|s| (s.src_doc.as_str(), s.tgt_doc.as_str()))
        .collect();
    score(&pairs, gold)
}

/// Reruns selection on the same scores for each threshold and scores the
/// result. Thresholds must be ascending and within `[0, 1]`.
pub fn sweep_thresholds(
    scores: &[DocPairScore],
    gold: &GoldSet,
    thresholds: &[f64],
    base: &DacConfig,
) -> Result<Vec<EvalReport>, EvalError> {
    validate_thresholds(thresholds)?;
    thresholds
        .par_iter()
        .map(|&t| {
            let selected = select_pairs(scores, &base.with_threshold(t));
            Ok(score_doc_pairs(&selected, gold)?.with_threshold(t))
        })
        .collect()
}

pub fn validate_thresholds(thresholds: &[f64]) -> Result<(), EvalError> {
    let in_range = thresholds.iter().all(|t| (0.0..=1.0).contains(t));
    let ascending = thresholds.windows(2).all(|w| w[0] <= w[1]);
    if in_range && ascending {
        Ok(())
    } else {
        Err(EvalError::InvalidThresholds(thresholds.to_vec()))
    }
}

/// Which corpus side a noise stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub ratio: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            ratio: DEFAULT_NOISE_RATIO,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    /// Derives the independent stream used for one side.
    pub fn for_side(&self, side: Side) -> NoiseConfig {
        let mut root = SplitMix64::seed_from_u64(self.seed);
        let first = root.next_u64();
        let seed = match side {
            Side::Source => first,
            Side::Target => root.next_u64(),
        };
        NoiseConfig { ratio: self.ratio, seed }
    }

    /// `floor(ratio * alignable)`.
    pub fn noise_count(&self, alignable: usize) -> usize {
        (self.ratio * alignable as f64).floor() as usize
    }
}

/// Appends `floor(ratio * |alignable|)` documents drawn without replacement
/// from `noise_pool` after the alignable documents.
pub fn inject_noise(
    alignable: &[Document],
    noise_pool: &[Document],
    config: &NoiseConfig,
) -> Result<Vec<Document>, EvalError> {
    if !config.ratio.is_finite() || config.ratio < 0.0 {
        return Err(EvalError::InvalidRatio(config.ratio));
    }
    let needed = config.noise_count(alignable.len());
    if needed > noise_pool.len() {
        return Err(EvalError::InsufficientNoise {
            available: noise_pool.len(),
            needed,
        });
    }
    let ids: HashSet<&str> = alignable.iter().map(|d| d.doc_id.as_str()).collect();
    if let Some(d) = noise_pool.iter().find(|d| ids.contains(d.doc_id.as_str())) {
        return Err(EvalError::IdCollision(d.doc_id.clone()));
    }
    let mut rng = SplitMix64::seed_from_u64(config.seed);
    let picked = rand::seq::index::sample(&mut rng, noise_pool.len(), needed);
    let mut out = alignable.to_vec();
    out.extend(picked.into_iter().map(|i| noise_pool[i].clone()));
    Ok(out)
}

fn fmt_threshold(t: Option<f64>) -> String {
    t.map_or_else(|| "NA".to_string(), |t| format!("{t:.6}"))
}

pub fn write_reports_tsv<W: Write>(reports: &[EvalReport], mut w: W) -> io::Result<()> {
    writeln!(w, "threshold\ttp\tpredicted\tgold\tprecision\trecall\tf1")?;
    for r in reports {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
            fmt_threshold(r.threshold),
            r.true_positives,
            r.predicted_count,
            r.gold_count,
            r.precision,
            r.recall,
            r.f1
        )?;
    }
    w.flush()
}

/// JSON array with the same fields as the TSV, floats at 6 decimals.
pub fn write_reports_json<W: Write>(reports: &[EvalReport], mut w: W) -> io::Result<()> {
    writeln!(w, "[")?;
    for (i, r) in reports.iter().enumerate() {
        let threshold = r.threshold.map_or_else(|| "null".to_string(), |t| format!("{t:.6}"));
        let sep = if i + 1 < reports.len() { "," } else { "" };
        writeln!(
            w,
            "  {{\"threshold\": {threshold}, \"tp\": {}, \"predicted\": {}, \"gold\": {}, \"precision\": {:.6}, \"recall\": {:.6}, \"f1\": {:.6}}}{sep}",
            r.true_positives, r.predicted_count, r.gold_count, r.precision, r.recall, r.f1
        )?;
    }
    writeln!(w, "]")?;
    w.flush()
}
