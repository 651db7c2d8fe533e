//! Compare the four pooled-embedding baselines against DAC on the degraded
//! planted corpus.
//!
//!     cargo run --release --example pooled_baselines

use docalign::dac::{align_documents_dac, DacConfig};
use docalign::eval::{score, score_doc_pairs};
use docalign::synth::{planted_corpus, PlantedConfig};
use docalign::{align_documents_pooled, MarginParams, PoolingMethod};

fn main() -> docalign::Result<()> {
    let c = planted_corpus(&PlantedConfig::degraded());
    println!("{:<6} {:>9} {:>7} {:>7}", "method", "precision", "recall", "f1");
    for method in PoolingMethod::ALL {
        let pairs = align_documents_pooled(
            &c.src_docs,
            &c.tgt_docs,
            &c.src_embeddings,
            &c.tgt_embeddings,
            method,
            MarginParams::default(),
        )?;
        let predicted: Vec<(&str, &str)> = pairs.iter().map(|p| (p.src_id.as_str(), p.tgt_id.as_str())).collect();
        let r = score(&predicted, &c.gold)?;
        println!("{:<6} {:>9.3} {:>7.3} {:>7.3}", method.to_string(), r.precision, r.recall, r.f1);
    }
    let selected = align_documents_dac(&c.src_docs, &c.tgt_docs, &c.src_embeddings, &c.tgt_embeddings, &DacConfig::default())?;
    let r = score_doc_pairs(&selected, &c.gold)?;
    println!("{:<6} {:>9.3} {:>7.3} {:>7.3}", "dac", r.precision, r.recall, r.f1);
    Ok(())
}
