//! Exact top-k inner-product search over random unit vectors.
//!
//!     cargo run --release --example knn_search -- [n] [dim] [k]

use std::time::Instant;

use docalign::{normalize, EmbeddingMatrix, FlatIndex};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

fn random(rng: &mut impl Rng, prefix: &str, n: usize, dim: usize) -> EmbeddingMatrix {
    let ids = (0..n).map(|i| format!("{prefix}{i}")).collect();
    let data = (0..n * dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
    normalize(&EmbeddingMatrix::new(dim, ids, data).unwrap()).unwrap()
}

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let n = args.next().unwrap_or(5000);
    let dim = args.next().unwrap_or(64);
    let k = args.next().unwrap_or(5);

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
    let index = FlatIndex::build(random(&mut rng, "doc", n, dim)).unwrap();
    let queries = random(&mut rng, "q", 1000, dim);

    let start = Instant::now();
    let results = index.search(&queries, k).unwrap();
    println!("{} queries against {n} x {dim} in {:.2?}", queries.len(), start.elapsed());
    for list in results.iter().take(3) {
        let hits: Vec<String> = list
            .neighbors
            .iter()
            .map(|nb| format!("{}:{:.3}", index.matrix().id(nb.row), nb.score))
            .collect();
        println!("{} -> {}  (mean {:.3})", list.query_id, hits.join(" "), list.mean_score());
    }
}
