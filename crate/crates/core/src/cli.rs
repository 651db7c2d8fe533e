//! `docalign` command-line driver.
//!
//! Subcommands: `segment`, `import-embeddings`, `fetch-embeddings`, `pool`,
//! `align`, `evaluate`, `sweep`. Pipeline settings for `align` and `sweep`
//! come from flags, an optional TOML file (`--config`), and built-in
//! defaults, in that order of precedence. Relative paths in the TOML file
//! resolve against the file's directory.
//!
//! Exit codes: 0 success, 1 invalid input or flags, 2 failure while
//! running.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::corpus::{load_corpus, segment_all, Document, Granularity};
use crate::dac::{score_documents_dac, select_pairs, write_scores_tsv, DacConfig, SelectionMode, DEFAULT_THRESHOLD};
use crate::embed_store::{
    normalize, read_matrix, write_matrix, EmbeddingClient, EmbeddingMatrix, ENDPOINT_ENV,
};
use crate::error::Error;
use crate::eval::{
    inject_noise, score, score_doc_pairs, sweep_thresholds, validate_thresholds, write_reports_json,
    write_reports_tsv, EvalReport, GoldSet, NoiseConfig, Side, DEFAULT_NOISE_RATIO,
};
use crate::miner::{apply_margin_floor, write_pairs_tsv, MarginParams, DEFAULT_K};
use crate::pooled_align::{align_documents_pooled, pool_side};
use crate::pooling::PoolingMethod;
use crate::tsv::read_rows;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

const DEFAULT_BATCH_SIZE: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(#[from] Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            _ => EXIT_RUNTIME,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "docalign", version, about = "Cross-lingual document alignment by chunk-level margin mining")]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split documents into units and write a `unit_id<TAB>text` file.
    Segment(SegmentArgs),
    /// Convert a text matrix (`id<TAB>v1 v2 ...`) into a normalized DEMB file.
    ImportEmbeddings(ImportArgs),
    /// Embed a units file through an HTTP embedding service.
    FetchEmbeddings(FetchArgs),
    /// Pool sentence embeddings into one vector per document.
    Pool(PoolArgs),
    /// Align two corpora and optionally score against gold pairs.
    Align(AlignArgs),
    /// Score a pairs file against gold pairs.
    Evaluate(EvaluateArgs),
    /// Score DAC alignments over a list of thresholds.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Sentences per unit, or `doc` for whole documents.
    #[arg(long, short = 'g', default_value = "1")]
    pub granularity: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Units file written by `segment`.
    #[arg(long)]
    pub units: PathBuf,
    #[arg(long, env = ENDPOINT_ENV)]
    pub endpoint: String,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PoolArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Sentence-level (G = 1) embeddings.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value = "lidf")]
    pub method: PoolingMethod,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignMode {
    Dac,
    Pooled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Tsv,
    Json,
}

/// Pipeline settings shared by `align` and `sweep`; every field may also
/// come from the `--config` TOML file.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunArgs {
    /// TOML file with any of these settings; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub src_manifest: Option<PathBuf>,
    #[arg(long)]
    pub tgt_manifest: Option<PathBuf>,
    #[arg(long)]
    pub src_embeddings: Option<PathBuf>,
    #[arg(long)]
    pub tgt_embeddings: Option<PathBuf>,
    /// Pool of unalignable source documents to inject.
    #[arg(long)]
    pub src_noise: Option<PathBuf>,
    #[arg(long)]
    pub tgt_noise: Option<PathBuf>,
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, short = 'g')]
    pub granularity: Option<Granularity>,
    #[arg(long)]
    pub method: Option<PoolingMethod>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub noise_ratio: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = ENDPOINT_ENV)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// `one-to-one` (default) or `keep-all`.
    #[arg(long)]
    pub selection: Option<SelectionMode>,
    /// Discard mined pairs with a margin below this value.
    #[arg(long)]
    pub margin_floor: Option<f64>,
    #[arg(long, value_enum)]
    pub report_format: Option<ReportFormat>,
    #[arg(skip)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[arg(long, value_enum, default_value = "dac")]
    pub mode: AlignMode,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated ascending thresholds in [0, 1].
    #[arg(long, value_delimiter = ',', required = true)]
    pub thresholds: Vec<f64>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Pairs TSV; the first two columns are read.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: ReportFormat,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Fully resolved pipeline configuration, echoed as `config.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub mode: Option<AlignMode>,
    pub src_manifest: PathBuf,
    pub tgt_manifest: PathBuf,
    pub src_embeddings: Option<PathBuf>,
    pub tgt_embeddings: Option<PathBuf>,
    pub src_noise: Option<PathBuf>,
    pub tgt_noise: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub granularity: Granularity,
    pub method: PoolingMethod,
    pub k: usize,
    pub threshold: f64,
    pub noise_ratio: f64,
    pub seed: u64,
    pub endpoint: Option<String>,
    pub batch_size: usize,
    pub selection: SelectionMode,
    pub margin_floor: Option<f64>,
    pub report_format: ReportFormat,
    pub workers: usize,
    pub thresholds: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn dac_config(&self) -> DacConfig {
        DacConfig {
            threshold: self.threshold,
            granularity: self.granularity,
            margin_params: MarginParams { k: self.k },
            selection: self.selection,
            margin_floor: self.margin_floor,
        }
    }

    pub fn noise_config(&self) -> NoiseConfig {
        NoiseConfig {
            ratio: self.noise_ratio,
            seed: self.seed,
        }
    }
}

fn resolve_relative(base: &Path, p: Option<PathBuf>) -> Option<PathBuf> {
    p.map(|p| if p.is_absolute() { p } else { base.join(p) })
}

fn load_config_file(path: &Path) -> CliResult<RunArgs> {
    let text = fs::read_to_string(path)
        .map_err(|e| invalid(format!("config file {}: {e}", path.display())))?;
    let mut file: RunArgs =
        toml::from_str(&text).map_err(|e| invalid(format!("config file {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    for p in [
        &mut file.src_manifest,
        &mut file.tgt_manifest,
        &mut file.src_embeddings,
        &mut file.tgt_embeddings,
        &mut file.src_noise,
        &mut file.tgt_noise,
        &mut file.gold,
        &mut file.out_dir,
    ] {
        *p = resolve_relative(base, p.take());
    }
    Ok(file)
}

/// Merges flags over the config file over defaults and validates the
/// result, including existence of every input path.
pub fn resolve(
    flags: RunArgs,
    mode: Option<AlignMode>,
    workers: Option<usize>,
    thresholds: Option<Vec<f64>>,
) -> CliResult<RunConfig> {
    let file = match &flags.config {
        Some(p) => load_config_file(p)?,
        None => RunArgs::default(),
    };
    macro_rules! pick {
        ($f:ident) => {
            flags.$f.clone().or(file.$f.clone())
        };
    }
    let cfg = RunConfig {
        mode,
        src_manifest: pick!(src_manifest).ok_or_else(|| invalid("--src-manifest is required"))?,
        tgt_manifest: pick!(tgt_manifest).ok_or_else(|| invalid("--tgt-manifest is required"))?,
        src_embeddings: pick!(src_embeddings),
        tgt_embeddings: pick!(tgt_embeddings),
        src_noise: pick!(src_noise),
        tgt_noise: pick!(tgt_noise),
        gold: pick!(gold),
        out_dir: pick!(out_dir).ok_or_else(|| invalid("--out-dir is required"))?,
        granularity: pick!(granularity).unwrap_or_default(),
        method: pick!(method).unwrap_or(PoolingMethod::Lidf),
        k: pick!(k).unwrap_or(DEFAULT_K),
        threshold: pick!(threshold).unwrap_or(DEFAULT_THRESHOLD),
        noise_ratio: pick!(noise_ratio).unwrap_or(DEFAULT_NOISE_RATIO),
        seed: pick!(seed).unwrap_or(0),
        endpoint: pick!(endpoint),
        batch_size: pick!(batch_size).unwrap_or(DEFAULT_BATCH_SIZE),
        selection: pick!(selection).unwrap_or_default(),
        margin_floor: pick!(margin_floor),
        report_format: pick!(report_format).unwrap_or_default(),
        workers: workers.or(file.workers).unwrap_or(0),
        thresholds,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn require_file(what: &str, p: &Path) -> CliResult<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(invalid(format!("{what} {} does not exist", p.display())))
    }
}

fn validate(cfg: &RunConfig) -> CliResult<()> {
    require_file("source manifest", &cfg.src_manifest)?;
    require_file("target manifest", &cfg.tgt_manifest)?;
    for (what, p) in [
        ("source embeddings", &cfg.src_embeddings),
        ("target embeddings", &cfg.tgt_embeddings),
        ("source noise manifest", &cfg.src_noise),
        ("target noise manifest", &cfg.tgt_noise),
        ("gold file", &cfg.gold),
    ] {
        if let Some(p) = p {
            require_file(what, p)?;
        }
    }
    if (cfg.src_embeddings.is_none() || cfg.tgt_embeddings.is_none()) && cfg.endpoint.is_none() {
        return Err(invalid(format!(
            "embeddings for both sides are required unless an endpoint is configured (--endpoint or {ENDPOINT_ENV})"
        )));
    }
    if cfg.k == 0 {
        return Err(invalid("--k must be >= 1"));
    }
    if cfg.batch_size == 0 {
        return Err(invalid("--batch-size must be >= 1"));
    }
    if !(0.0..=1.0).contains(&cfg.threshold) {
        return Err(invalid(format!("--threshold {} outside [0, 1]", cfg.threshold)));
    }
    if !cfg.noise_ratio.is_finite() || cfg.noise_ratio < 0.0 {
        return Err(invalid(format!("--noise-ratio {} must be >= 0", cfg.noise_ratio)));
    }
    let dac = cfg.mode == Some(AlignMode::Dac) || cfg.thresholds.is_some();
    if dac && cfg.granularity == Granularity::WholeDocument {
        return Err(invalid("DAC needs an integer granularity; use --mode pooled for whole documents"));
    }
    if let Some(ts) = &cfg.thresholds {
        if cfg.gold.is_none() {
            return Err(invalid("sweep requires --gold"));
        }
        validate_thresholds(ts).map_err(|e| invalid(e.to_string()))?;
    }
    if cfg.out_dir.is_file() {
        return Err(invalid(format!("--out-dir {} is a file", cfg.out_dir.display())));
    }
    Ok(())
}

/// Parses `args` and runs the selected subcommand; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("docalign: error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    // Everything is validated before the thread pool is built.
    let job = prepare(cli.command, cli.workers)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(job.workers(cli.workers))
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    pool.install(|| job.run())
}

enum Job {
    Segment { manifest: PathBuf, g: Granularity, out: PathBuf },
    Import { input: PathBuf, out: PathBuf },
    Fetch(FetchArgs),
    Pool(PoolArgs),
    Align(RunConfig),
    Sweep(RunConfig),
    Evaluate(EvaluateArgs),
}

impl Job {
    fn workers(&self, flag: Option<usize>) -> usize {
        match self {
            Job::Align(c) | Job::Sweep(c) => c.workers,
            _ => flag.unwrap_or(0),
        }
    }

    fn run(self) -> CliResult<()> {
        match self {
            Job::Segment { manifest, g, out } => cmd_segment(&manifest, g, &out),
            Job::Import { input, out } => cmd_import(&input, &out),
            Job::Fetch(a) => cmd_fetch(&a),
            Job::Pool(a) => cmd_pool(&a),
            Job::Align(cfg) => cmd_align(&cfg).map(|_| ()),
            Job::Sweep(cfg) => cmd_sweep(&cfg).map(|_| ()),
            Job::Evaluate(a) => cmd_evaluate(&a),
        }
    }
}

fn prepare(command: Command, workers: Option<usize>) -> CliResult<Job> {
    Ok(match command {
        Command::Segment(a) => {
            let g: Granularity = a.granularity.parse().map_err(|e: crate::corpus::CorpusError| invalid(e.to_string()))?;
            require_file("manifest", &a.manifest)?;
            Job::Segment {
                manifest: a.manifest,
                g,
                out: a.out,
            }
        }
        Command::ImportEmbeddings(a) => {
            require_file("input", &a.input)?;
            Job::Import {
                input: a.input,
                out: a.out,
            }
        }
        Command::FetchEmbeddings(a) => {
            require_file("units file", &a.units)?;
            if a.batch_size == 0 {
                return Err(invalid("--batch-size must be >= 1"));
            }
            Job::Fetch(a)
        }
        Command::Pool(a) => {
            require_file("manifest", &a.manifest)?;
            require_file("embeddings", &a.embeddings)?;
            Job::Pool(a)
        }
        Command::Align(a) => Job::Align(resolve(a.run, Some(a.mode), workers, None)?),
        Command::Sweep(a) => Job::Sweep(resolve(a.run, Some(AlignMode::Dac), workers, Some(a.thresholds))?),
        Command::Evaluate(a) => {
            require_file("pairs file", &a.pairs)?;
            require_file("gold file", &a.gold)?;
            Job::Evaluate(a)
        }
    })
}

fn create_writer(path: &Path) -> CliResult<BufWriter<fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn runtime<E: Into<Error>>(e: E) -> CliError {
    CliError::Runtime(e.into())
}

pub fn cmd_segment(manifest: &Path, g: Granularity, out: &Path) -> CliResult<()> {
    let docs = load_corpus(manifest).map_err(runtime)?;
    let units = segment_all(&docs, g);
    let mut w = create_writer(out)?;
    writeln!(w, "unit_id\ttext")?;
    for u in &units {
        writeln!(w, "{}\t{}", u.unit_id, u.text.replace(['\t', '\n', '\r'], " "))?;
    }
    w.flush()?;
    log::info!("wrote {} units from {} documents to {}", units.len(), docs.len(), out.display());
    Ok(())
}

/// Parses `id<TAB>values` lines, values separated by tabs or spaces.
pub fn parse_text_matrix(path: &Path) -> CliResult<EmbeddingMatrix> {
    let text = fs::read_to_string(path)?;
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, rest) = line
            .split_once('\t')
            .ok_or_else(|| invalid(format!("{} line {}: missing tab after id", path.display(), i + 1)))?;
        let row = rest
            .split_whitespace()
            .map(str::parse::<f32>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| invalid(format!("{} line {}: {e}", path.display(), i + 1)))?;
        ids.push(id.to_string());
        rows.push(row);
    }
    EmbeddingMatrix::from_rows(ids, rows).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn cmd_import(input: &Path, out: &Path) -> CliResult<()> {
    let m = parse_text_matrix(input)?;
    let m = normalize(&m).map_err(runtime)?;
    write_matrix(&m, out).map_err(runtime)?;
    log::info!("imported {} x {} matrix to {}", m.len(), m.dim(), out.display());
    Ok(())
}

fn read_units(path: &Path) -> CliResult<(Vec<String>, Vec<String>)> {
    let rows = read_rows(path, 2, &["unit_id"]).map_err(|e| invalid(e.to_string()))?;
    Ok(rows.into_iter().map(|mut r| (std::mem::take(&mut r[0]), r[1..].join(" "))).unzip())
}

pub fn cmd_fetch(a: &FetchArgs) -> CliResult<()> {
    let (ids, texts) = read_units(&a.units)?;
    let texts: Vec<&str> = texts.iter().map(String::as_str).collect();
    let client = EmbeddingClient::new(a.endpoint.clone(), a.batch_size).map_err(runtime)?;
    let m = client.embed(&ids, &texts).map_err(runtime)?;
    write_matrix(&m, &a.out).map_err(runtime)?;
    Ok(())
}

pub fn cmd_pool(a: &PoolArgs) -> CliResult<()> {
    let docs = load_corpus(&a.manifest).map_err(runtime)?;
    let emb = read_matrix(&a.embeddings).map_err(runtime)?;
    let pooled = pool_side(&docs, &emb, a.method).map_err(CliError::Runtime)?;
    write_matrix(&pooled, &a.out).map_err(runtime)?;
    Ok(())
}

struct Inputs {
    src: Vec<Document>,
    tgt: Vec<Document>,
    src_emb: EmbeddingMatrix,
    tgt_emb: EmbeddingMatrix,
    gold: Option<GoldSet>,
}

fn load_side(
    manifest: &Path,
    noise: Option<&Path>,
    noise_cfg: NoiseConfig,
) -> CliResult<Vec<Document>> {
    let docs = load_corpus(manifest).map_err(runtime)?;
    match noise {
        Some(p) => {
            let pool = load_corpus(p).map_err(runtime)?;
            Ok(inject_noise(&docs, &pool, &noise_cfg).map_err(runtime)?)
        }
        None => Ok(docs),
    }
}

fn side_embeddings(
    path: Option<&Path>,
    docs: &[Document],
    g: Granularity,
    cfg: &RunConfig,
    cache_name: &str,
) -> CliResult<EmbeddingMatrix> {
    if let Some(p) = path {
        return read_matrix(p).map_err(runtime);
    }
    let endpoint = cfg.endpoint.as_deref().expect("validated: endpoint present");
    let units = segment_all(docs, g);
    let ids: Vec<String> = units.iter().map(|u| u.unit_id.clone()).collect();
    let texts: Vec<&str> = units.iter().map(|u| u.text.as_str()).collect();
    let m = EmbeddingClient::new(endpoint, cfg.batch_size)
        .and_then(|c| c.embed(&ids, &texts))
        .map_err(runtime)?;
    fs::create_dir_all(&cfg.out_dir)?;
    write_matrix(&m, cfg.out_dir.join(cache_name)).map_err(runtime)?;
    Ok(m)
}

fn load_inputs(cfg: &RunConfig, unit_granularity: Granularity) -> CliResult<Inputs> {
    let noise = cfg.noise_config();
    let src = load_side(&cfg.src_manifest, cfg.src_noise.as_deref(), noise.for_side(Side::Source))?;
    let tgt = load_side(&cfg.tgt_manifest, cfg.tgt_noise.as_deref(), noise.for_side(Side::Target))?;
    let gold = match &cfg.gold {
        Some(p) => Some(GoldSet::read(p).map_err(runtime)?),
        None => None,
    };
    let src_emb = side_embeddings(cfg.src_embeddings.as_deref(), &src, unit_granularity, cfg, "src.demb")?;
    let tgt_emb = side_embeddings(cfg.tgt_embeddings.as_deref(), &tgt, unit_granularity, cfg, "tgt.demb")?;
    Ok(Inputs {
        src,
        tgt,
        src_emb,
        tgt_emb,
        gold,
    })
}

fn write_config_echo(cfg: &RunConfig) -> CliResult<()> {
    let mut w = create_writer(&cfg.out_dir.join("config.json"))?;
    serde_json::to_writer_pretty(&mut w, cfg).map_err(std::io::Error::other)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn report_path(cfg: &RunConfig, stem: &str) -> PathBuf {
    let ext = match cfg.report_format {
        ReportFormat::Tsv => "tsv",
        ReportFormat::Json => "json",
    };
    cfg.out_dir.join(format!("{stem}.{ext}"))
}

fn write_reports(path: &Path, format: ReportFormat, reports: &[EvalReport]) -> CliResult<()> {
    let w = create_writer(path)?;
    match format {
        ReportFormat::Tsv => write_reports_tsv(reports, w)?,
        ReportFormat::Json => write_reports_json(reports, w)?,
    }
    Ok(())
}

/// Runs one alignment and writes `pairs.tsv`, `config.json` and, when gold
/// pairs are configured, `report.{tsv,json}`.
pub fn cmd_align(cfg: &RunConfig) -> CliResult<Option<EvalReport>> {
    let mode = cfg.mode.unwrap_or(AlignMode::Dac);
    let unit_g = match mode {
        AlignMode::Dac => cfg.granularity,
        AlignMode::Pooled => Granularity::SENTENCE,
    };
    let inputs = load_inputs(cfg, unit_g)?;
    let params = MarginParams::new(cfg.k).map_err(runtime)?;

    let (predicted, report): (Vec<(String, String)>, Option<EvalReport>) = match mode {
        AlignMode::Dac => {
            let dac_cfg = cfg.dac_config();
            let scoring = score_documents_dac(&inputs.src, &inputs.tgt, &inputs.src_emb, &inputs.tgt_emb, &dac_cfg)
                .map_err(runtime)?;
            let selected = select_pairs(&scoring.scores, &dac_cfg);
            fs::create_dir_all(&cfg.out_dir)?;
            write_scores_tsv(&selected, create_writer(&cfg.out_dir.join("pairs.tsv"))?)?;
            write_pairs_tsv(&scoring.chunk_pairs, create_writer(&cfg.out_dir.join("chunk_pairs.tsv"))?)?;
            let report = match &inputs.gold {
                Some(g) => Some(score_doc_pairs(&selected, g).map_err(runtime)?.with_threshold(cfg.threshold)),
                None => None,
            };
            let pairs = selected.into_iter().map(|s| (s.src_doc, s.tgt_doc)).collect();
            (pairs, report)
        }
        AlignMode::Pooled => {
            let pairs = align_documents_pooled(
                &inputs.src,
                &inputs.tgt,
                &inputs.src_emb,
                &inputs.tgt_emb,
                cfg.method,
                params,
            )
            .map_err(CliError::Runtime)?;
            let pairs = apply_margin_floor(pairs, cfg.margin_floor);
            fs::create_dir_all(&cfg.out_dir)?;
            write_pairs_tsv(&pairs, create_writer(&cfg.out_dir.join("pairs.tsv"))?)?;
            let predicted: Vec<(String, String)> = pairs.into_iter().map(|p| (p.src_id, p.tgt_id)).collect();
            let report = match &inputs.gold {
                Some(g) => Some(score(&predicted, g).map_err(runtime)?),
                None => None,
            };
            (predicted, report)
        }
    };
    write_config_echo(cfg)?;
    if let Some(r) = &report {
        write_reports(&report_path(cfg, "report"), cfg.report_format, std::slice::from_ref(r))?;
        log::info!("P={:.4} R={:.4} F1={:.4}", r.precision, r.recall, r.f1);
    }
    log::info!("{} document pairs written to {}", predicted.len(), cfg.out_dir.display());
    Ok(report)
}

/// Scores DAC selections at each threshold and writes `sweep.{tsv,json}`.
pub fn cmd_sweep(cfg: &RunConfig) -> CliResult<Vec<EvalReport>> {
    let thresholds = cfg.thresholds.clone().unwrap_or_default();
    let inputs = load_inputs(cfg, cfg.granularity)?;
    let gold = inputs.gold.as_ref().ok_or_else(|| invalid("sweep requires --gold"))?;
    let dac_cfg = cfg.dac_config();
    let scoring =
        score_documents_dac(&inputs.src, &inputs.tgt, &inputs.src_emb, &inputs.tgt_emb, &dac_cfg).map_err(runtime)?;
    let reports = sweep_thresholds(&scoring.scores, gold, &thresholds, &dac_cfg).map_err(runtime)?;
    fs::create_dir_all(&cfg.out_dir)?;
    write_reports(&report_path(cfg, "sweep"), cfg.report_format, &reports)?;
    write_config_echo(cfg)?;
    Ok(reports)
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> CliResult<()> {
    let rows = read_rows(&a.pairs, 2, &["src_doc", "src_id"]).map_err(|e| invalid(e.to_string()))?;
    let predicted: Vec<(String, String)> = rows
        .into_iter()
        .map(|mut r| (std::mem::take(&mut r[0]), std::mem::take(&mut r[1])))
        .collect();
    let gold = GoldSet::read(&a.gold).map_err(runtime)?;
    let report = score(&predicted, &gold).map_err(runtime)?;
    let reports = [report];
    match &a.out {
        Some(p) => write_reports(p, a.format, &reports)?,
        None => {
            let out = std::io::stdout().lock();
            match a.format {
                ReportFormat::Tsv => write_reports_tsv(&reports, out)?,
                ReportFormat::Json => write_reports_json(&reports, out)?,
            }
        }
    }
    Ok(())
}
