//! The `xtrap` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error. Every command writes
//! its machine-readable output to `-o` (or stdout without it); with `-o`
//! a one-line summary goes to stdout.

use std::collections::HashMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use crate::analysis::{
    cohens_kappa, kendall_tau_b, parse_thresholds, pca_project, relevant_overlap, spearman, PairedScores,
};
use crate::dataio::{
    parse_qrels, parse_queries, parse_run, read_embeddings, read_file, text_lines, write_file, EmbeddingFormat,
    EmbeddingSet,
};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, Gain, MetricSpec};
use crate::resample::{
    restrain_extrapolation, restrain_interpolation, resttest_aggregate, resttest_split, FoldSpec, KMeansConfig,
    Manifest, QueryPool, ReSTrainConfig, Regime,
};
use crate::simindex::{
    candidates_to_tsv, knn, neighbors_to_tsv, recall_candidates, Bm25Params, CandidateConfig, KnnOptions, SimMeasure,
};

#[derive(Debug, Parser)]
#[command(name = "xtrap", version, about = "Interpolation/extrapolation evaluation toolkit for retrieval benchmarks")]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "XTRAP_THREADS", default_value_t = 0)]
    threads: usize,

    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Embedding file format; by default `.tsv`/`.txt` files are TSV and everything else binary.
    #[arg(long, global = true, value_parser = parse_emb_format)]
    emb_format: Option<EmbeddingFormat>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count, conflicts_with = "quiet")]
    verbose: u8,

    /// Only log errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact k nearest training queries of every test query.
    Knn(KnnArgs),
    /// Embedding and BM25 neighbor pools for manual annotation.
    Candidates(CandidatesArgs),
    /// ReSTrain: rebuild the training set around a fixed test set.
    Restrain(RestrainArgs),
    /// ReSTTest: k-means buckets with leave-one-bucket-out folds.
    Resttest(ResttestArgs),
    /// Extract the split manifest of one ReSTTest fold.
    Fold(FoldArgs),
    /// Score a run against qrels.
    Eval(EvalArgs),
    /// Combine the k fold runs of a ReSTTest split.
    Aggregate(AggregateArgs),
    /// Share of test queries whose relevant documents are relevant to training queries.
    Overlap(OverlapArgs),
    /// Rank correlation of paired scores.
    Correlate(CorrelateArgs),
    /// Pairwise Cohen's kappa between annotators.
    Kappa(KappaArgs),
    /// PCA projection of embeddings for plotting.
    Pca(PcaArgs),
}

#[derive(Debug, Args)]
struct Output {
    /// Output file (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PoolArgs {
    /// Training queries, `id<TAB>text` (default: the ids of --train-emb).
    #[arg(long)]
    train_queries: Option<PathBuf>,
    /// Test queries, `id<TAB>text` (default: the ids of --test-emb).
    #[arg(long)]
    test_queries: Option<PathBuf>,
    /// Training query embeddings.
    #[arg(long)]
    train_emb: PathBuf,
    /// Test query embeddings.
    #[arg(long)]
    test_emb: PathBuf,
}

#[derive(Debug, Args)]
struct KnnArgs {
    /// Test query embeddings.
    #[arg(long)]
    test_emb: PathBuf,
    /// Training query embeddings.
    #[arg(long)]
    train_emb: PathBuf,
    /// Neighbors per test query.
    #[arg(short, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Similarity: inner_product or cosine.
    #[arg(long, default_value = "inner_product", value_parser = parse_measure)]
    measure: SimMeasure,
    /// Skip training vectors whose id equals the test id.
    #[arg(long)]
    exclude_self: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct CandidatesArgs {
    /// Test queries, `id<TAB>text`.
    #[arg(long)]
    test_queries: PathBuf,
    /// Training queries, `id<TAB>text`.
    #[arg(long)]
    train_queries: PathBuf,
    /// Test query embeddings.
    #[arg(long)]
    test_emb: PathBuf,
    /// Training query embeddings.
    #[arg(long)]
    train_emb: PathBuf,
    /// Candidates per channel (embedding, BM25).
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    per_channel: u64,
    /// Similarity: inner_product or cosine.
    #[arg(long, default_value = "inner_product", value_parser = parse_measure)]
    measure: SimMeasure,
    /// BM25 term-frequency saturation.
    #[arg(long, default_value_t = 0.9)]
    bm25_k1: f64,
    /// BM25 length normalization.
    #[arg(long, default_value_t = 0.4)]
    bm25_b: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegimeArg {
    Inter,
    Extra,
}

#[derive(Debug, Args)]
struct RestrainArgs {
    /// Interpolation (nearest neighbors) or extrapolation (outside the neighborhoods).
    #[arg(long, value_enum)]
    regime: RegimeArg,
    #[command(flatten)]
    pool: PoolArgs,
    /// Initial neighbor depth per test query for interpolation.
    #[arg(short = 'I', long = "inter-depth", default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    inter_depth: u64,
    /// Neighbors per test query excluded for extrapolation (default: I).
    #[arg(short = 'E', long = "extra-depth", value_parser = clap::value_parser!(u64).range(1..))]
    extra_depth: Option<u64>,
    /// Training set size.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    size: u64,
    /// Similarity: inner_product or cosine.
    #[arg(long, default_value = "inner_product", value_parser = parse_measure)]
    measure: SimMeasure,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct ResttestArgs {
    #[command(flatten)]
    pool: PoolArgs,
    /// Number of buckets.
    #[arg(short, default_value_t = 5, value_parser = clap::value_parser!(u64).range(2..))]
    k: u64,
    /// Lloyd iteration limit.
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Stop once no centroid moves this far.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// L2-normalize embeddings before clustering.
    #[arg(long)]
    normalize: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct FoldArgs {
    /// Manifest written by `resttest`.
    #[arg(long)]
    manifest: PathBuf,
    /// Fold index, 0-based.
    #[arg(long)]
    fold: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct MetricArgs {
    /// Metric with optional cutoff: mrr@10, ndcg@10, recall@100.
    #[arg(long, default_value = "mrr@10", value_parser = parse_metric)]
    metric: Vec<MetricSpec>,
    /// Minimum grade counted as relevant.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    rel_threshold: u32,
    /// NDCG gain.
    #[arg(long, default_value = "linear", value_parser = parse_gain)]
    gain: Gain,
}

impl MetricArgs {
    fn specs(&self) -> Vec<MetricSpec> {
        self.metric
            .iter()
            .map(|m| m.with_threshold(self.rel_threshold).with_gain(self.gain))
            .collect()
    }
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// TREC run file.
    #[arg(long)]
    run: PathBuf,
    /// TREC qrels file.
    #[arg(long)]
    qrels: PathBuf,
    #[command(flatten)]
    metric: MetricArgs,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct AggregateArgs {
    /// Manifest written by `resttest`.
    #[arg(long)]
    manifest: PathBuf,
    /// TREC qrels file.
    #[arg(long)]
    qrels: PathBuf,
    /// One run per fold, in fold order.
    #[arg(long, num_args = 1.., required = true)]
    runs: Vec<PathBuf>,
    #[command(flatten)]
    metric: MetricArgs,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct OverlapArgs {
    /// Qrels of the test queries.
    #[arg(long)]
    test_qrels: PathBuf,
    /// Qrels of the training queries; grade >= 1 counts as relevant.
    #[arg(long)]
    train_qrels: PathBuf,
    /// Comma-separated test-grade thresholds, each geq:N or eq:N.
    #[arg(long, default_value = "geq:1,geq:2,eq:3")]
    thresholds: String,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Spearman,
    Kendall,
    Both,
}

#[derive(Debug, Args)]
struct CorrelateArgs {
    /// `label<TAB>x<TAB>y` lines.
    #[arg(long)]
    pairs: PathBuf,
    /// Coefficient(s) to report.
    #[arg(long, value_enum, default_value_t = Method::Both)]
    method: Method,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct KappaArgs {
    /// One `item<TAB>label` file per annotator.
    #[arg(long, num_args = 2.., required = true)]
    labels: Vec<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct PcaArgs {
    /// Embeddings to project.
    #[arg(long)]
    emb: PathBuf,
    /// Split manifests labelling the points (repeatable).
    #[arg(long)]
    manifest: Vec<PathBuf>,
    /// Output dimensions.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    dims: u64,
    #[command(flatten)]
    out: Output,
}

fn parse_emb_format(s: &str) -> Result<EmbeddingFormat> {
    s.parse()
}

fn parse_measure(s: &str) -> Result<SimMeasure> {
    s.parse()
}

fn parse_metric(s: &str) -> Result<MetricSpec> {
    s.parse()
}

fn parse_gain(s: &str) -> Result<Gain> {
    s.parse()
}

/// Problems with the invocation itself, as opposed to its input data.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    init_logging(cli.verbose, cli.quiet);

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} worker threads: {e}", cli.threads);
            return 2;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let mut builder = env_logger::Builder::new();
    builder.filter_level(level).format_timestamp(None);
    if let Ok(spec) = std::env::var("RUST_LOG") {
        builder.parse_filters(&spec);
    }
    // A logger may already be installed when run() is called more than once in-process.
    if builder.try_init().is_err() {
        log::set_max_level(level);
    }
}

fn dispatch(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Knn(a) => cmd_knn(cli, a),
        Command::Candidates(a) => cmd_candidates(cli, a),
        Command::Restrain(a) => cmd_restrain(cli, a),
        Command::Resttest(a) => cmd_resttest(cli, a),
        Command::Fold(a) => cmd_fold(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Aggregate(a) => cmd_aggregate(a),
        Command::Overlap(a) => cmd_overlap(a),
        Command::Correlate(a) => cmd_correlate(a),
        Command::Kappa(a) => cmd_kappa(a),
        Command::Pca(a) => cmd_pca(cli, a),
    }
}

/// Writes `text` to `-o`, or to stdout. The summary is shown only with `-o`.
fn emit(out: &Output, text: &str, summary: impl FnOnce() -> String) -> CmdResult {
    match &out.output {
        Some(path) => {
            write_file(path, text.as_bytes())?;
            println!("{}", summary());
        }
        None => {
            info!("{}", summary());
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|source| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })?;
        }
    }
    Ok(())
}

fn dest(out: &Output) -> String {
    out.output
        .as_deref()
        .map_or_else(|| "stdout".to_owned(), |p| p.display().to_string())
}

fn load_emb(cli: &Cli, path: &Path) -> Result<EmbeddingSet> {
    let format = cli.emb_format.unwrap_or_else(|| EmbeddingFormat::from_path(path));
    read_embeddings(path, format)
}

fn load_pool(cli: &Cli, queries: Option<&Path>, emb: &Path) -> Result<QueryPool> {
    let emb = load_emb(cli, emb)?;
    match queries {
        Some(q) => QueryPool::new(parse_queries(q)?, emb),
        None => QueryPool::from_embeddings(emb),
    }
}

fn load_pools(cli: &Cli, p: &PoolArgs) -> Result<(QueryPool, QueryPool)> {
    let train = load_pool(cli, p.train_queries.as_deref(), &p.train_emb)?;
    let test = load_pool(cli, p.test_queries.as_deref(), &p.test_emb)?;
    Ok((train, test))
}

fn cmd_knn(cli: &Cli, a: &KnnArgs) -> CmdResult {
    let test = load_emb(cli, &a.test_emb)?;
    let train = load_emb(cli, &a.train_emb)?;
    let mut opts = KnnOptions::new(a.k as usize, a.measure);
    if a.exclude_self {
        opts = opts.excluding_self();
    }
    let lists = knn(&test, &train, opts)?;
    emit(&a.out, &neighbors_to_tsv(&lists), || {
        format!("{} neighbor lists (k={}, {}) written to {}", lists.len(), a.k, a.measure, dest(&a.out))
    })
}

fn cmd_candidates(cli: &Cli, a: &CandidatesArgs) -> CmdResult {
    let bm25 = Bm25Params::new(a.bm25_k1, a.bm25_b).map_err(|e| Failure::Usage(e.to_string()))?;
    let test = parse_queries(&a.test_queries)?;
    let train = parse_queries(&a.train_queries)?;
    let test_emb = load_emb(cli, &a.test_emb)?;
    let train_emb = load_emb(cli, &a.train_emb)?;
    let cfg = CandidateConfig {
        per_channel: a.per_channel as usize,
        measure: a.measure,
        bm25,
    };
    let pools = recall_candidates(&test, &train, &test_emb, &train_emb, &cfg)?;
    let total: usize = pools.iter().map(|p| p.candidates.len()).sum();
    emit(&a.out, &candidates_to_tsv(&pools), || {
        format!("{total} candidates for {} test queries written to {}", pools.len(), dest(&a.out))
    })
}

fn cmd_restrain(cli: &Cli, a: &RestrainArgs) -> CmdResult {
    let (train, test) = load_pools(cli, &a.pool)?;
    let cfg = ReSTrainConfig {
        interpolation_depth: a.inter_depth as usize,
        exclusion_depth: a.extra_depth.unwrap_or(a.inter_depth) as usize,
        target_size: a.size as usize,
        seed: cli.seed,
        measure: a.measure,
    };
    let split = match a.regime {
        RegimeArg::Inter => restrain_interpolation(&train, &test, &cfg)?,
        RegimeArg::Extra => restrain_extrapolation(&train, &test, &cfg)?,
    };
    emit(&a.out, &split.to_manifest().to_text(), || {
        format!(
            "{} split: {} training queries for {} test queries written to {}",
            split.regime,
            split.training_ids.len(),
            split.test_ids.len(),
            dest(&a.out)
        )
    })
}

fn cmd_resttest(cli: &Cli, a: &ResttestArgs) -> CmdResult {
    if !(a.tol.is_finite() && a.tol >= 0.0) {
        return Err(Failure::Usage(format!("--tol must be a non-negative number, got {}", a.tol)));
    }
    let (train, test) = load_pools(cli, &a.pool)?;
    let cfg = KMeansConfig {
        k: a.k as usize,
        seed: cli.seed,
        max_iters: a.max_iters,
        tol: a.tol,
        normalize: a.normalize,
    };
    let spec = resttest_split(&train, &test, &cfg)?;
    emit(&a.out, &spec.to_manifest().to_text(), || {
        let sizes: Vec<String> = (0..spec.k).map(|b| spec.bucket_members(b).len().to_string()).collect();
        format!("{} buckets (sizes {}) written to {}", spec.k, sizes.join(" "), dest(&a.out))
    })
}

fn load_fold_spec(path: &Path) -> Result<FoldSpec> {
    FoldSpec::from_manifest(&Manifest::read(path)?).map_err(|e| e.in_file(path))
}

fn cmd_fold(a: &FoldArgs) -> CmdResult {
    let spec = load_fold_spec(&a.manifest)?;
    if a.fold >= spec.k {
        return Err(Failure::Usage(format!("--fold must be below k = {}", spec.k)));
    }
    let fold = spec.fold(a.fold);
    emit(&a.out, &fold.to_manifest(&spec).to_text(), || {
        format!(
            "fold {}: {} training, {} interpolation and {} extrapolation test queries written to {}",
            fold.index,
            fold.training_ids.len(),
            fold.interpolation_test_ids.len(),
            fold.extrapolation_test_ids.len(),
            dest(&a.out)
        )
    })
}

fn cmd_eval(a: &EvalArgs) -> CmdResult {
    let run = parse_run(&a.run)?;
    let qrels = parse_qrels(&a.qrels)?;
    let reports = evaluate(&run, &qrels, &a.metric.specs())?;
    let text: String = reports.iter().map(|r| r.to_tsv()).collect();
    emit(&a.out, &text, || {
        reports
            .iter()
            .map(|r| format!("{} = {:.4} over {} queries", r.metric, r.mean, r.evaluated_count))
            .collect::<Vec<_>>()
            .join("; ")
    })
}

fn cmd_aggregate(a: &AggregateArgs) -> CmdResult {
    let spec = load_fold_spec(&a.manifest)?;
    if a.runs.len() != spec.k {
        return Err(Failure::Usage(format!("{} runs given for k = {} folds", a.runs.len(), spec.k)));
    }
    let runs = a.runs.iter().map(parse_run).collect::<Result<Vec<_>>>()?;
    let qrels = parse_qrels(&a.qrels)?;
    let mut text = String::new();
    let mut summary = Vec::new();
    for metric in a.metric.specs() {
        let rep = resttest_aggregate(&runs, &spec, &qrels, &metric)?;
        text.push_str(&rep.to_tsv());
        summary.push(format!(
            "{}: interpolation {:.4}, extrapolation {:.4}",
            rep.metric, rep.interpolation, rep.extrapolation
        ));
    }
    emit(&a.out, &text, || summary.join("; "))
}

fn cmd_overlap(a: &OverlapArgs) -> CmdResult {
    let thresholds = parse_thresholds(&a.thresholds).map_err(|e| Failure::Usage(e.to_string()))?;
    let test = parse_qrels(&a.test_qrels)?;
    let train = parse_qrels(&a.train_qrels)?;
    let rep = relevant_overlap(&test, &train, &thresholds)?;
    emit(&a.out, &rep.to_tsv(), || {
        rep.rows
            .iter()
            .map(|r| format!("{} {:.2}%", r.threshold, r.percent()))
            .collect::<Vec<_>>()
            .join(", ")
    })
}

fn cmd_correlate(a: &CorrelateArgs) -> CmdResult {
    let bytes = read_file(&a.pairs)?;
    let pairs = PairedScores::from_tsv(&bytes).map_err(|e| e.in_file(&a.pairs))?;
    let mut text = String::new();
    if matches!(a.method, Method::Spearman | Method::Both) {
        text.push_str(&format!("spearman\t{:.6}\t{}\n", spearman(&pairs)?, pairs.len()));
    }
    if matches!(a.method, Method::Kendall | Method::Both) {
        text.push_str(&format!("kendall\t{:.6}\t{}\n", kendall_tau_b(&pairs)?, pairs.len()));
    }
    emit(&a.out, &text, || text.trim_end().replace('\t', " ").replace('\n', "; "))
}

/// `item<TAB>label` lines, in file order.
fn read_labels(path: &Path) -> Result<Vec<(String, String)>> {
    let bytes = read_file(path)?;
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for line in text_lines(&bytes) {
        let (no, line) = line.map_err(|e| e.in_file(path))?;
        let (item, label) = line
            .split_once('\t')
            .map(|(i, l)| (i.trim(), l.trim()))
            .filter(|(i, l)| !i.is_empty() && !l.is_empty())
            .ok_or_else(|| Error::parse(no, "expected `item<TAB>label`").in_file(path))?;
        if seen.insert(item.to_owned(), no).is_some() {
            return Err(Error::DuplicateId {
                id: item.to_owned(),
                line: no,
            }
            .in_file(path));
        }
        out.push((item.to_owned(), label.to_owned()));
    }
    Ok(out)
}

fn cmd_kappa(a: &KappaArgs) -> CmdResult {
    let raters = a.labels.iter().map(|p| read_labels(p)).collect::<Result<Vec<_>>>()?;
    let items: Vec<&str> = raters[0].iter().map(|(i, _)| i.as_str()).collect();
    let mut aligned: Vec<Vec<&str>> = Vec::with_capacity(raters.len());
    for (r, labels) in raters.iter().enumerate() {
        if labels.len() != items.len() {
            return Err(Error::invalid(format!(
                "{} labels {} items but {} labels {}",
                a.labels[r].display(),
                labels.len(),
                a.labels[0].display(),
                items.len()
            ))
            .into());
        }
        let by_item: HashMap<&str, &str> = labels.iter().map(|(i, l)| (i.as_str(), l.as_str())).collect();
        let row = items
            .iter()
            .map(|item| {
                by_item.get(item).copied().ok_or_else(|| {
                    Error::invalid(format!("{} has no label for item {item}", a.labels[r].display()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        aligned.push(row);
    }
    let mut text = String::new();
    let mut values = Vec::new();
    for i in 0..aligned.len() {
        for j in i + 1..aligned.len() {
            let k = cohens_kappa(&aligned[i], &aligned[j])?;
            text.push_str(&format!("{}:{}\t{k:.4}\n", i + 1, j + 1));
            values.push(k);
        }
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    text.push_str(&format!("mean\t{mean:.4}\n"));
    emit(&a.out, &text, || {
        format!("mean kappa {mean:.4} over {} annotator pairs, {} items", values.len(), items.len())
    })
}

/// Plot group of each id named in a split manifest.
fn manifest_groups(m: &Manifest, groups: &mut HashMap<String, Vec<String>>) -> Result<()> {
    let regime = m.require("regime")?;
    let mut add = |id: &str, label: String| {
        let entry = groups.entry(id.to_owned()).or_default();
        if !entry.contains(&label) {
            entry.push(label);
        }
    };
    if regime == "resttest" {
        let spec = FoldSpec::from_manifest(m)?;
        for b in 0..spec.k {
            for id in spec.bucket_members(b) {
                let role = if spec.test_ids.contains(&id) { "test" } else { "train" };
                add(&id, format!("bucket{b}-{role}"));
            }
        }
        return Ok(());
    }
    let train_label = match regime.parse::<Regime>() {
        Ok(Regime::Interpolation) => "train-inter",
        Ok(Regime::Extrapolation) => "train-extra",
        Err(_) => "train",
    };
    for (name, ids) in &m.sections {
        let label = if name == "training" {
            train_label.to_owned()
        } else if name.starts_with("test") {
            "test".to_owned()
        } else {
            name.replace(' ', "-")
        };
        for id in ids {
            add(id, label.clone());
        }
    }
    Ok(())
}

fn cmd_pca(cli: &Cli, a: &PcaArgs) -> CmdResult {
    let emb = load_emb(cli, &a.emb)?;
    if a.dims as usize > emb.dim() {
        return Err(Failure::Usage(format!("--dims {} exceeds the embedding dimension {}", a.dims, emb.dim())));
    }
    let mut groups = HashMap::new();
    for path in &a.manifest {
        manifest_groups(&Manifest::read(path)?, &mut groups).map_err(|e| e.in_file(path))?;
    }
    let unknown = groups.keys().filter(|id| emb.position(id).is_none()).count();
    if unknown > 0 {
        warn!("{unknown} manifest ids have no embedding and are not plotted");
    }
    let res = pca_project(&emb, a.dims as usize)?;
    let mut text = String::new();
    for (id, coords) in res.ids.iter().zip(&res.coords) {
        text.push_str(id);
        for c in coords {
            text.push_str(&format!("\t{:.6}", c + 0.0));
        }
        let group = groups.get(id).map_or_else(|| "none".to_owned(), |g| g.join("+"));
        text.push('\t');
        text.push_str(&group);
        text.push('\n');
    }
    emit(&a.out, &text, || {
        let ratios: Vec<String> = res.explained_variance_ratio().iter().map(|r| format!("{r:.4}")).collect();
        format!(
            "{} points projected to {} dims (explained variance {}) written to {}",
            res.ids.len(),
            a.dims,
            ratios.join(" "),
            dest(&a.out)
        )
    })
}
