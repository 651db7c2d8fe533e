//! Precision/recall trade-off of the DAC threshold. Mining runs once; each
//! threshold only re-filters the document-pair scores.
//!
//!     cargo run --release --example threshold_sweep

use docalign::dac::{score_documents_dac, DacConfig};
use docalign::eval::{sweep_thresholds, write_reports_tsv};
use docalign::synth::{planted_corpus, PlantedConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = planted_corpus(&PlantedConfig::degraded());
    let cfg = DacConfig::default();
    let scoring = score_documents_dac(&c.src_docs, &c.tgt_docs, &c.src_embeddings, &c.tgt_embeddings, &cfg)?;
    let thresholds: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let reports = sweep_thresholds(&scoring.scores, &c.gold, &thresholds, &cfg)?;
    write_reports_tsv(&reports, std::io::stdout().lock())?;
    Ok(())
}
