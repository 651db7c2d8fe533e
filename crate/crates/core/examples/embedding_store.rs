//! Normalize a small matrix, write it as DEMB, read it back, and show that
//! a damaged file is refused.
//!
//!     cargo run --example embedding_store

use docalign::embed_store::{decode, normalize, read_matrix, write_matrix, EmbeddingMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let raw = EmbeddingMatrix::from_rows(
        vec!["doc#0".into(), "doc#1".into(), "doc#2".into()],
        vec![vec![3.0, 4.0, 0.0], vec![0.0, 0.0, 2.0], vec![1.0, 1.0, 1.0]],
    )?;
    let m = normalize(&raw)?;
    for (id, row) in m.ids().iter().zip(m.rows()) {
        println!("{id}: {row:?}");
    }

    let dir = std::env::temp_dir().join(format!("docalign-store-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("vectors.demb");
    write_matrix(&m, &path)?;
    let back = read_matrix(&path)?;
    assert_eq!(back, m);
    let bytes = std::fs::read(&path)?;
    println!("{} bytes on disk, {} x {} round-tripped exactly", bytes.len(), back.len(), back.dim());

    match decode(&bytes[..bytes.len() - 3]) {
        Ok(_) => unreachable!("truncated file accepted"),
        Err(e) => println!("truncated copy rejected: {e}"),
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
