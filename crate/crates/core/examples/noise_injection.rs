//! Add unalignable documents to one side and see what they cost.
//!
//!     cargo run --release --example noise_injection -- [ratio] [seed]

use docalign::dac::{align_documents_dac, DacConfig};
use docalign::eval::{inject_noise, score_doc_pairs, NoiseConfig, Side};
use docalign::synth::{planted_corpus, PlantedConfig};
use docalign::EmbeddingMatrix;

fn main() -> docalign::Result<()> {
    let mut args = std::env::args().skip(1);
    let ratio: f64 = args.next().map_or(0.5, |a| a.parse().expect("ratio"));
    let seed: u64 = args.next().map_or(7, |a| a.parse().expect("seed"));

    // The planted generator already emits noise documents (ids "sn…"/"tn…");
    // use the source-side ones as the pool and start from the clean pairs.
    // Planted noise lives in its own subspace, so here it should cost nothing;
    // point this at real data to see the precision drop.
    let c = planted_corpus(&PlantedConfig::default());
    let (pool, clean): (Vec<_>, Vec<_>) = c.src_docs.iter().cloned().partition(|d| d.doc_id.starts_with("sn"));
    let tgt: Vec<_> = c.tgt_docs.iter().filter(|d| !d.doc_id.starts_with("tn")).cloned().collect();

    let noise = NoiseConfig { ratio, seed }.for_side(Side::Source);
    let src = inject_noise(&clean, &pool, &noise)?;
    println!(
        "{} alignable + {} noise source documents (ratio {ratio}, seed {seed})",
        clean.len(),
        src.len() - clean.len()
    );

    let cfg = DacConfig::default();
    for (label, docs) in [("clean", &clean), ("noisy", &src)] {
        let emb = rows_for(&c.src_embeddings, docs);
        let tgt_emb = rows_for(&c.tgt_embeddings, &tgt);
        let selected = align_documents_dac(docs, &tgt, &emb, &tgt_emb, &cfg)?;
        let r = score_doc_pairs(&selected, &c.gold)?;
        println!("{label}: predicted={} P={:.3} R={:.3}", r.predicted_count, r.precision, r.recall);
    }
    Ok(())
}

fn rows_for(m: &EmbeddingMatrix, docs: &[docalign::Document]) -> EmbeddingMatrix {
    let ids: Vec<String> = docalign::corpus::segment_all(docs, docalign::Granularity::SENTENCE)
        .into_iter()
        .map(|u| u.unit_id)
        .collect();
    m.select(&ids).expect("planted embeddings cover every unit")
}
