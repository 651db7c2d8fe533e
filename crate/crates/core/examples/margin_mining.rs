//! Ratio-margin mining between two small vector sets. The hub vector `y0`
//! is close to every source row; raw cosine would pair it with all of them,
//! the margin criterion does not.
//!
//!     cargo run --example margin_mining

use docalign::miner::write_pairs_tsv;
use docalign::{margin_scores, mine, normalize, EmbeddingMatrix, MarginParams};

fn matrix(prefix: &str, rows: Vec<Vec<f32>>) -> EmbeddingMatrix {
    let ids = (0..rows.len()).map(|i| format!("{prefix}{i}")).collect();
    normalize(&EmbeddingMatrix::from_rows(ids, rows).unwrap()).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = matrix("x", vec![vec![1.0, 0.1, 0.0], vec![0.1, 1.0, 0.0], vec![0.0, 0.1, 1.0]]);
    let y = matrix("y", vec![vec![1.0, 1.0, 1.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.1], vec![0.0, 0.0, 1.0]]);
    let params = MarginParams::new(2)?;

    println!("candidates (union of forward and backward 2-NN):");
    for c in margin_scores(&x, &y, params)? {
        println!("  {} {} cos={:.3} margin={:.3}", c.src_id, c.tgt_id, c.cosine, c.margin);
    }

    println!("\none-to-one matches:");
    let pairs = mine(&x, &y, params)?;
    write_pairs_tsv(&pairs, std::io::stdout().lock())?;
    assert!(pairs.iter().all(|p| p.tgt_id != "y0"));
    Ok(())
}
