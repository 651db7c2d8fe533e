//! Write a planted corpus to disk in the formats the `docalign` binary
//! reads, then print a command line that aligns it.
//!
//!     cargo run --example planted_fixture -- /tmp/fixture [--degraded]

use std::path::PathBuf;

use docalign::synth::{planted_corpus, write_fixture, PlantedConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "fixture".into()));
    let cfg = if args.any(|a| a == "--degraded") {
        PlantedConfig::degraded()
    } else {
        PlantedConfig::default()
    };
    let paths = write_fixture(&planted_corpus(&cfg), &dir)?;
    println!("wrote {}", dir.display());
    println!(
        "docalign align --src-manifest {} --tgt-manifest {} --src-embeddings {} --tgt-embeddings {} --gold {} --out-dir {}",
        paths.src_manifest.display(),
        paths.tgt_manifest.display(),
        paths.src_embeddings.display(),
        paths.tgt_embeddings.display(),
        paths.gold.display(),
        dir.join("out").display(),
    );
    Ok(())
}
