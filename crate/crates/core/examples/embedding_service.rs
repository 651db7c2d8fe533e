//! Embed units through the HTTP service protocol:
//! `POST {"texts": [...]}` -> `{"vectors": [[...], ...]}`.
//!
//! Uses `$DOCALIGN_EMBED_ENDPOINT` when set; otherwise starts a toy server
//! on localhost that hashes words into 16 buckets.
//!
//!     cargo run --example embedding_service

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;

use docalign::corpus::{segment_all, Document, Granularity};
use docalign::embed_store::{fetch_embeddings, ENDPOINT_ENV};
use serde_json::{json, Value};

const BUCKETS: usize = 16;

fn toy_vector(text: &str) -> Vec<f32> {
    let mut v = vec![0.0; BUCKETS];
    for w in text.split_whitespace() {
        let mut h = DefaultHasher::new();
        w.to_lowercase().hash(&mut h);
        v[h.finish() as usize % BUCKETS] += 1.0;
    }
    v
}

/// Serves requests until the process exits. Good enough for one client.
fn spawn_toy_server() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let mut reader = BufReader::new(stream);
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        len = v.trim().parse().unwrap_or(0);
                    }
                }
            }
            let mut body = vec![0; len];
            if reader.read_exact(&mut body).is_err() {
                continue;
            }
            let req: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
            let vectors: Vec<Vec<f32>> = req["texts"]
                .as_array()
                .map(|ts| ts.iter().map(|t| toy_vector(t.as_str().unwrap_or(""))).collect())
                .unwrap_or_default();
            let out = json!({ "vectors": vectors }).to_string();
            let mut stream = reader.into_inner();
            let _ = write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{out}",
                out.len()
            );
        }
    });
    format!("http://{addr}/embed")
}

fn main() -> docalign::Result<()> {
    let endpoint = std::env::var(ENDPOINT_ENV).unwrap_or_else(|_| spawn_toy_server());
    println!("endpoint: {endpoint}");

    let docs = [
        Document::new("en-1", "en", vec!["The cat sat on the mat.".into(), "It was warm.".into()])?,
        Document::new("en-2", "en", vec!["Prices rose again in March.".into()])?,
    ];
    let units = segment_all(&docs, Granularity::SENTENCE);
    let m = fetch_embeddings(&units, &endpoint, 2)?;
    for (id, row) in m.ids().iter().zip(m.rows()) {
        let head: Vec<String> = row.iter().take(6).map(|x| format!("{x:.2}")).collect();
        println!("{id}: [{} ...] (dim {})", head.join(", "), m.dim());
    }
    Ok(())
}
