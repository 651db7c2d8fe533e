//! Split documents into chunk units at several granularities.
//!
//!     cargo run --example segmentation

use docalign::corpus::{parse_unit_id, segment, Document, Granularity};

fn main() -> docalign::Result<()> {
    let doc = Document::new(
        "report-17",
        "en",
        (1..=7).map(|i| format!("This is sentence number {i}.")).collect(),
    )?;

    for g in ["1", "3", "4", "doc"] {
        let g: Granularity = g.parse()?;
        let units = segment(&doc, g);
        println!("G={g}: {} units", units.len());
        for u in &units {
            println!("  {:<14} sentences={} tokens={:>2}  {}", u.unit_id, u.sentence_count, u.token_count, u.text);
        }
    }

    // Unit ids split at the last '#', so document ids may contain '#' themselves.
    assert_eq!(parse_unit_id("a#b#3"), Some(("a#b", 3)));
    Ok(())
}
