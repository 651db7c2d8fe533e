//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fail.

mod common;

use std::collections::HashMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::{assert_one_to_one, brute_top_k, dense_margins, random_unit_matrix, rng, score_matrix};
use docalign::corpus::{token_count, ChunkUnit, Document};
use docalign::dac::{aggregate, align_documents_dac, dac_score, score_documents_dac, DacConfig};
use docalign::embed_store::{decode, read_matrix, write_matrix, EmbeddingMatrix, StoreError};
use docalign::eval::{score, score_doc_pairs, sweep_thresholds, EvalReport};
use docalign::miner::AlignedUnitPair;
use docalign::pooling::{build_idf, pool_document, PoolingMethod};
use docalign::synth::{planted_corpus, write_fixture, PlantedConfig};
use docalign::{align_documents_pooled, margin_scores, mine, FlatIndex, MarginParams};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use rand::seq::SliceRandom;
use rand::Rng;

const KNN_SCORE_TOL: f32 = 1e-6;
const KNN_TIME_LIMIT: Duration = Duration::from_secs(10);
const MARGIN_TOL: f64 = 1e-6;
const HAND_MARGIN: f64 = 1.33333;
const PLANTED_TIME_LIMIT: Duration = Duration::from_secs(30);
const POOLED_MIN_RECALL: f64 = 0.95;
const POOLING_TOL: f64 = 1e-6;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// 1. Exact kNN against a brute-force oracle.
fn knn_exactness() -> Outcome {
    let mut r = rng(1001);
    let start = Instant::now();
    let mut queries = 0;
    for inst in 0..20 {
        let n_index = r.gen_range(1..=1000);
        let n_query = r.gen_range(1..=1000);
        let dim = r.gen_range(8..=64);
        let index_m = random_unit_matrix(&mut r, "i", n_index, dim);
        let q = random_unit_matrix(&mut r, "q", n_query, dim);
        let got = FlatIndex::build(index_m.clone()).map_err(|e| e.to_string())?.search(&q, 16).map_err(|e| e.to_string())?;
        let scores = score_matrix(&q, &index_m);
        for (qi, list) in got.iter().enumerate() {
            let want = brute_top_k(&scores[qi], 16);
            check(list.neighbors.len() == want.len(), || format!("instance {inst} query {qi}: length"))?;
            for (n, (row, s)) in list.neighbors.iter().zip(&want) {
                check(n.row == *row, || format!("instance {inst} query {qi}: id {} vs {}", n.row, row))?;
                check((n.score - s).abs() <= KNN_SCORE_TOL, || format!("instance {inst} query {qi}: score"))?;
            }
            assert_one_to_one_ids(&list.neighbors.iter().map(|n| n.row).collect::<Vec<_>>())?;
        }
        queries += n_query;
    }
    let elapsed = start.elapsed();
    check(elapsed < KNN_TIME_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("20 instances, {queries} queries, {elapsed:.2?}"))
}

fn assert_one_to_one_ids(rows: &[usize]) -> Result<(), String> {
    let mut seen = std::collections::HashSet::new();
    check(rows.iter().all(|r| seen.insert(*r)), || "duplicate neighbor".into())
}

/// 2. Margin formula: hand-derived value and dense-oracle agreement.
fn margin_fixtures() -> Outcome {
    let x = EmbeddingMatrix::from_rows(vec!["x1".into()], vec![vec![1.0, 0.0]]).unwrap();
    let y = EmbeddingMatrix::from_rows(vec!["y1".into(), "y2".into()], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let c = margin_scores(&x, &y, MarginParams::new(2).unwrap()).map_err(|e| e.to_string())?;
    let m11 = c.iter().find(|c| c.tgt_id == "y1").ok_or("missing (x1, y1)")?.margin;
    check((m11 - HAND_MARGIN).abs() <= 1e-5, || format!("M(x1,y1) = {m11}"))?;

    let mut worst = 0.0f64;
    let mut r = rng(2002);
    for _ in 0..10 {
        let x = random_unit_matrix(&mut r, "x", 50, 8);
        let y = random_unit_matrix(&mut r, "y", 50, 8);
        let lib = margin_scores(&x, &y, MarginParams::default()).map_err(|e| e.to_string())?;
        let dense = dense_margins(&x, &y, 16);
        check(lib.len() == dense.len(), || "candidate sets differ in size".into())?;
        for (l, d) in lib.iter().zip(&dense) {
            check(l.src_id == x.id(d.i) && l.tgt_id == y.id(d.j), || "candidate sets differ".into())?;
            worst = worst.max((l.margin - d.margin).abs());
        }
    }
    check(worst <= MARGIN_TOL, || format!("max margin error {worst:e}"))?;
    Ok(format!("M(x1,y1) = {m11:.6}; 10 random 50x50 instances, max |dM| = {worst:.1e}"))
}

/// 3. DAC against the exact rational 2a/(s+t). Most such fractions have no
///    finite binary expansion, so "equal" means the stored double is the
///    correctly rounded value, checked in big-rational arithmetic.
fn dac_exactness() -> Outcome {
    let as_rat = |f: f64| BigRational::from_float(f).expect("finite");
    let correctly_rounded = |dac: f64, a: usize, s: usize, t: usize| -> Result<(), String> {
        let exact = BigRational::new(BigInt::from(2 * a), BigInt::from(s + t));
        let err = (as_rat(dac) - &exact).abs();
        let half_up = (as_rat(dac.next_up()) - as_rat(dac)) / BigInt::from(2);
        let half_down = if dac > 0.0 {
            (as_rat(dac) - as_rat(dac.next_down())) / BigInt::from(2)
        } else {
            half_up.clone()
        };
        check(err <= half_up && err <= half_down, || {
            format!("dac {dac} is not the rounding of 2*{a}/({s}+{t})")
        })?;
        check((0.0..=1.0).contains(&dac), || format!("dac {dac} outside [0,1]"))
    };

    let mut r = rng(3003);
    let mut exact_hits = 0;
    for _ in 0..1000 {
        let n_src = r.gen_range(1..=500usize);
        let n_tgt = r.gen_range(1..=500usize);
        let n_aligned = r.gen_range(0..=n_src.min(n_tgt));
        correctly_rounded(dac_score(n_aligned, n_src, n_tgt), n_aligned, n_src, n_tgt)?;

        // Through aggregation of mined pairs; zero-aligned pairs produce no row.
        let pairs: Vec<AlignedUnitPair> = (0..n_aligned)
            .map(|i| AlignedUnitPair {
                src_id: format!("S#{i}"),
                tgt_id: format!("T#{i}"),
                cosine: 0.9,
                margin: 1.2,
            })
            .collect();
        let out = aggregate(&pairs, &HashMap::from([("S".into(), n_src)]), &HashMap::from([("T".into(), n_tgt)]))
            .map_err(|e| e.to_string())?;
        if n_aligned == 0 {
            check(out.is_empty(), || "row for a pair with no aligned chunks".into())?;
            continue;
        }
        let row = &out[0];
        check(row.n_aligned == n_aligned && row.n_src == n_src && row.n_tgt == n_tgt, || "counts".into())?;
        correctly_rounded(row.dac, n_aligned, n_src, n_tgt)?;
        if as_rat(row.dac) == BigRational::new(BigInt::from(2 * n_aligned), BigInt::from(n_src + n_tgt)) {
            exact_hits += 1;
        }
    }
    Ok(format!("1000 random triples correctly rounded ({exact_hits} exactly representable)"))
}

/// 4. Planted corpus: DAC recovers every true pair; MP baseline nearly so.
fn planted_recovery() -> Outcome {
    let start = Instant::now();
    let corpus = planted_corpus(&PlantedConfig::default());
    check(corpus.src_docs.len() == 150 && corpus.tgt_docs.len() == 150, || "corpus shape".into())?;
    let cfg = DacConfig::default();
    check(cfg.threshold == 0.1 && cfg.margin_params.k == 16, || "defaults".into())?;
    let selected = align_documents_dac(
        &corpus.src_docs,
        &corpus.tgt_docs,
        &corpus.src_embeddings,
        &corpus.tgt_embeddings,
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    let dac = score_doc_pairs(&selected, &corpus.gold).map_err(|e| e.to_string())?;
    check(dac.precision == 1.0 && dac.recall == 1.0, || format!("DAC P={} R={}", dac.precision, dac.recall))?;

    let pooled = align_documents_pooled(
        &corpus.src_docs,
        &corpus.tgt_docs,
        &corpus.src_embeddings,
        &corpus.tgt_embeddings,
        PoolingMethod::Mp,
        MarginParams::default(),
    )
    .map_err(|e| e.to_string())?;
    let predicted: Vec<(&str, &str)> = pooled.iter().map(|p| (p.src_id.as_str(), p.tgt_id.as_str())).collect();
    let mp = score(&predicted, &corpus.gold).map_err(|e| e.to_string())?;
    check(mp.recall >= POOLED_MIN_RECALL, || format!("MP recall {}", mp.recall))?;
    let elapsed = start.elapsed();
    check(elapsed < PLANTED_TIME_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "DAC P={:.4} R={:.4}; MP P={:.4} R={:.4}; {elapsed:.2?}",
        dac.precision, dac.recall, mp.precision, mp.recall
    ))
}

/// 5. Threshold sweep on a degraded corpus.
fn sweep_shape() -> Outcome {
    let corpus = planted_corpus(&PlantedConfig::degraded());
    let cfg = DacConfig::default();
    let scoring = score_documents_dac(
        &corpus.src_docs,
        &corpus.tgt_docs,
        &corpus.src_embeddings,
        &corpus.tgt_embeddings,
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    let thresholds: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let reports = sweep_thresholds(&scoring.scores, &corpus.gold, &thresholds, &cfg).map_err(|e| e.to_string())?;
    check(reports.len() == 11, || "report count".into())?;
    for w in reports.windows(2) {
        check(w[1].recall <= w[0].recall, || format!("recall rises at {:?}", w[1].threshold))?;
        check(w[1].predicted_count <= w[0].predicted_count, || format!("yield rises at {:?}", w[1].threshold))?;
    }
    let p0 = reports[0].precision;
    let p5 = reports[5].precision;
    check(p5 >= p0, || format!("precision@0.5 {p5} < precision@0.0 {p0}"))?;
    let fmt = |r: &EvalReport| format!("{:.1}:P{:.3}/R{:.3}/n{}", r.threshold.unwrap(), r.precision, r.recall, r.predicted_count);
    Ok(format!("{} | {} | {}", fmt(&reports[0]), fmt(&reports[1]), fmt(&reports[5])))
}

fn random_doc_units(r: &mut impl Rng, doc: usize, n: usize) -> (Vec<ChunkUnit>, Vec<String>) {
    let texts: Vec<String> = (0..n)
        .map(|_| {
            let len = r.gen_range(1..8);
            (0..len).map(|_| format!("w{}", r.gen_range(0..30))).collect::<Vec<_>>().join(" ")
        })
        .collect();
    let units = texts
        .iter()
        .enumerate()
        .map(|(i, t)| ChunkUnit {
            unit_id: format!("d{doc}#{i}"),
            doc_id: format!("d{doc}"),
            chunk_index: i,
            text: t.clone(),
            sentence_count: 1,
            token_count: token_count(t),
        })
        .collect();
    (units, texts)
}

fn max_abs_diff(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| f64::from((x - y).abs())).fold(0.0, f64::max)
}

/// 6. Pooling invariants over 100 random documents.
fn pooling_invariants() -> Outcome {
    let mut r = rng(6006);
    let mut worst = 0.0f64;
    for doc in 0..100 {
        let n = r.gen_range(1..=12);
        let dim = r.gen_range(2..=32);
        let m = random_unit_matrix(&mut r, "u", n, dim);
        let rows: Vec<&[f32]> = m.rows().collect();
        let (units, texts) = random_doc_units(&mut r, doc, n);
        let corpus = [
            Document::new(format!("d{doc}"), "xx", texts).unwrap(),
            Document::new("other", "xx", vec!["w1 w2 zz".into()]).unwrap(),
        ];
        let idf = build_idf(&corpus).unwrap();
        for method in PoolingMethod::ALL {
            let table = method.needs_idf().then_some(&idf);
            let v = match pool_document(&units, &rows, method, table) {
                Ok(v) => v,
                Err(e) => return Err(format!("doc {doc} {method}: {e}")),
            };
            let norm = v.iter().map(|x| f64::from(*x).powi(2)).sum::<f64>().sqrt();
            worst = worst.max((norm - 1.0).abs());

            let single = pool_document(&units[..1], &rows[..1], method, table).unwrap();
            worst = worst.max(max_abs_diff(&single, rows[0]));

            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut r);
            let pu: Vec<ChunkUnit> = order.iter().map(|&i| units[i].clone()).collect();
            let pr: Vec<&[f32]> = order.iter().map(|&i| rows[i]).collect();
            worst = worst.max(max_abs_diff(&v, &pool_document(&pu, &pr, method, table).unwrap()));
        }
        // Equal lengths: MP = LP. Equal mean idf (identical texts): MP = IDF.
        let same: Vec<ChunkUnit> = units
            .iter()
            .map(|u| ChunkUnit {
                text: "w1 w2 w3".into(),
                token_count: 3,
                ..u.clone()
            })
            .collect();
        let mp = pool_document(&same, &rows, PoolingMethod::Mp, None).unwrap();
        let lp = pool_document(&same, &rows, PoolingMethod::Lp, None).unwrap();
        let idf_pooled = pool_document(&same, &rows, PoolingMethod::Idf, Some(&idf)).unwrap();
        worst = worst.max(max_abs_diff(&mp, &lp)).max(max_abs_diff(&mp, &idf_pooled));
    }
    check(worst <= POOLING_TOL, || format!("max deviation {worst:e}"))?;
    Ok(format!("100 documents x 4 methods, max deviation {worst:.1e}"))
}

fn run_align(fixture: &Path, out: &Path, workers: usize) -> Result<(), String> {
    let p = |name: &str| fixture.join(name).to_string_lossy().into_owned();
    let args = [
        "docalign".to_string(),
        "--workers".into(),
        workers.to_string(),
        "align".into(),
        "--mode".into(),
        "dac".into(),
        "--src-manifest".into(),
        p("src.jsonl"),
        "--tgt-manifest".into(),
        p("tgt.jsonl"),
        "--src-embeddings".into(),
        p("src.demb"),
        "--tgt-embeddings".into(),
        p("tgt.demb"),
        "--gold".into(),
        p("gold.tsv"),
        "--out-dir".into(),
        out.to_string_lossy().into_owned(),
    ];
    match docalign::cli::run(args) {
        0 => Ok(()),
        code => Err(format!("align exited with {code}")),
    }
}

/// 7. Byte-identical pipeline output for 1 and 8 workers.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = planted_corpus(&PlantedConfig::degraded());
    let fixture = dir.path().join("fixture");
    write_fixture(&corpus, &fixture).map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("w1"), dir.path().join("w8"));
    run_align(&fixture, &a, 1)?;
    run_align(&fixture, &b, 8)?;
    for name in ["pairs.tsv", "chunk_pairs.tsv", "report.tsv"] {
        let x = fs::read(a.join(name)).map_err(|e| format!("{name}: {e}"))?;
        let y = fs::read(b.join(name)).map_err(|e| format!("{name}: {e}"))?;
        check(x == y, || format!("{name} differs between worker counts"))?;
    }
    let report = fs::read_to_string(a.join("report.tsv")).unwrap();
    Ok(format!("pairs.tsv, chunk_pairs.tsv, report.tsv identical; {}", report.lines().nth(1).unwrap_or("")))
}

/// 8. One-to-one outputs across mining and selection.
fn one_to_one() -> Outcome {
    let mut r = rng(8008);
    let mut checked = 0;
    for _ in 0..30 {
        let nx = r.gen_range(1..=150);
        let ny = r.gen_range(1..=150);
        let dim = r.gen_range(2..=16);
        let x = random_unit_matrix(&mut r, "x", nx, dim);
        let y = random_unit_matrix(&mut r, "y", ny, dim);
        let pairs = mine(&x, &y, MarginParams::new(r.gen_range(1..=20)).unwrap()).map_err(|e| e.to_string())?;
        catch(|| assert_one_to_one(pairs.iter().map(|p| (p.src_id.as_str(), p.tgt_id.as_str()))))?;
        check(pairs.len() <= nx.min(ny), || "more pairs than the smaller side".into())?;
        checked += 1;
    }
    for cfg in [PlantedConfig::default(), PlantedConfig::degraded()] {
        let corpus = planted_corpus(&cfg);
        let dcfg = DacConfig::default().with_threshold(0.0);
        let scoring = score_documents_dac(
            &corpus.src_docs,
            &corpus.tgt_docs,
            &corpus.src_embeddings,
            &corpus.tgt_embeddings,
            &dcfg,
        )
        .map_err(|e| e.to_string())?;
        catch(|| assert_one_to_one(scoring.chunk_pairs.iter().map(|p| (p.src_id.as_str(), p.tgt_id.as_str()))))?;
        for t in [0.0, 0.1, 0.5] {
            let sel = docalign::select_pairs(&scoring.scores, &dcfg.with_threshold(t));
            catch(|| assert_one_to_one(sel.iter().map(|s| (s.src_doc.as_str(), s.tgt_doc.as_str()))))?;
            checked += 1;
        }
        for method in PoolingMethod::ALL {
            let pooled = align_documents_pooled(
                &corpus.src_docs,
                &corpus.tgt_docs,
                &corpus.src_embeddings,
                &corpus.tgt_embeddings,
                method,
                MarginParams::default(),
            )
            .map_err(|e| e.to_string())?;
            catch(|| assert_one_to_one(pooled.iter().map(|p| (p.src_id.as_str(), p.tgt_id.as_str()))))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} mining/selection outputs"))
}

fn catch(f: impl FnOnce()) -> Result<(), String> {
    catch_unwind(AssertUnwindSafe(f)).map_err(panic_message)
}

/// 9. DEMB round-trips and corruption handling.
fn store_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut r = rng(9009);
    for i in 0..50 {
        let n = r.gen_range(0..200);
        let dim = r.gen_range(1..=96);
        let ids: Vec<String> = (0..n).map(|j| format!("doc-{i}#{j}")).collect();
        let data: Vec<f32> = (0..n * dim).map(|_| r.gen_range(-10.0f32..10.0)).collect();
        let m = EmbeddingMatrix::new(dim, ids, data).unwrap();
        let p = dir.path().join(format!("m{i}.demb"));
        write_matrix(&m, &p).map_err(|e| e.to_string())?;
        let back = read_matrix(&p).map_err(|e| e.to_string())?;
        check(back.ids() == m.ids() && back.dim() == m.dim(), || format!("matrix {i}: ids/dim"))?;
        check(
            back.data().iter().zip(m.data()).all(|(a, b)| a.to_bits() == b.to_bits()),
            || format!("matrix {i}: payload bits"),
        )?;
    }

    let m = EmbeddingMatrix::new(3, vec!["a".into(), "b".into()], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    let p = dir.path().join("c.demb");
    write_matrix(&m, &p).unwrap();
    let good = fs::read(&p).unwrap();

    let mut bad_magic = good.clone();
    bad_magic[0] = b'X';
    check(matches!(decode(&bad_magic), Err(StoreError::BadMagic { .. })), || "bad magic accepted".into())?;

    let truncated = &good[..good.len() - 6];
    check(matches!(decode(truncated), Err(StoreError::PayloadSize { .. })), || "truncation accepted".into())?;

    let mut padded = good.clone();
    padded.extend_from_slice(&[0, 0, 0, 0]);
    check(matches!(decode(&padded), Err(StoreError::PayloadSize { .. })), || "trailing bytes accepted".into())?;

    let mut dim0 = good.clone();
    dim0[6..10].copy_from_slice(&0u32.to_le_bytes());
    check(matches!(decode(&dim0), Err(StoreError::InvalidHeader(_))), || "dim 0 accepted".into())?;

    let mut count_lie = good.clone();
    count_lie[10..18].copy_from_slice(&1u64.to_le_bytes());
    check(decode(&count_lie).is_err(), || "count mismatch accepted".into())?;

    let dup = EmbeddingMatrix::new(1, vec!["a".into(), "b".into()], vec![1.0, 2.0]).unwrap();
    write_matrix(&dup, &p).unwrap();
    let mut dup_bytes = fs::read(&p).unwrap();
    let second_id = 18 + 4 + 1 + 4;
    dup_bytes[second_id] = b'a';
    check(matches!(decode(&dup_bytes), Err(StoreError::DuplicateId(_))), || "duplicate ids accepted".into())?;

    Ok("50 random matrices bit-exact; magic, truncation, padding, dim 0, count, duplicate ids rejected".into())
}

fn panic_message(e: Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panic".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("kNN exactness", knn_exactness),
        ("margin formula fixtures", margin_fixtures),
        ("DAC exactness", dac_exactness),
        ("planted-corpus recovery", planted_recovery),
        ("threshold-sweep shape", sweep_shape),
        ("pooling invariants", pooling_invariants),
        ("determinism across worker counts", determinism),
        ("one-to-one invariants", one_to_one),
        ("embedding store round-trip", store_round_trip),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let outcome = catch_unwind(f).unwrap_or_else(|e| Err(panic_message(e)));
        match outcome {
            Ok(detail) => println!("[PASS] {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {}. {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
