//! The `cpgvul` command line: every pipeline stage as a subcommand that reads
//! and writes plain files.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use cpgvul::augment::{augment_dataset, MutationKind};
use cpgvul::autodiff::Checkpoint;
use cpgvul::cfront::parse_source;
use cpgvul::cpg::{build_cpg, pdg_of, EdgeKind};
use cpgvul::ensemble::{metrics, predict_function, render_report, vote, Classifier, ReportRow};
use cpgvul::fixtures::{graph_record, random_graph};
use cpgvul::ggnn::{check_gradients, predict_all, train, EncodedGraph, Hyper, ModelState, Variant, Vocabulary};
use cpgvul::ingest::{
    attach_mutants, commits_from_git, ingest, parse_ratios, read_commit_dump, read_jsonl, write_jsonl, CweLabel, DatasetSplit,
    FunctionRecord, GraphRecord, IngestOptions,
};
use cpgvul::slicer::{align_statements, related_in_vulnerable, slice_related, PatchTuple};

pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cpgvul::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("missing checkpoint {0}")]
    MissingCheckpoint(PathBuf),
    #[error("test split is empty")]
    EmptyTestSplit,
    #[error("{0}")]
    Invalid(String),
    #[error("gradient check failed: max relative error {0:e}")]
    GradientMismatch(f64),
}

macro_rules! core_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}
core_from!(
    cpgvul::cfront::FrontError,
    cpgvul::ingest::IngestError,
    cpgvul::slicer::SliceError,
    cpgvul::ggnn::GgnnError,
    cpgvul::ensemble::EnsembleError,
    cpgvul::autodiff::CheckpointError
);

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "cpgvul", version, about = "Vulnerability detection over code property graphs of C functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse one C function and print its statements
    Parse(ParseArgs),
    /// Build the code property graph of one C function
    Graph(GraphArgs),
    /// Mine labeled function pairs from a commit dump or a git repository
    Ingest(IngestArgs),
    /// Compute the statements related to each patch
    Slice(SliceArgs),
    /// Generate vulnerability-preserving mutants of training functions
    Augment(AugmentArgs),
    /// Train the classifier for one weakness type
    Train(TrainArgs),
    /// Run the five classifiers on one function and vote
    Predict(PredictArgs),
    /// Score trained classifiers on the test split
    Evaluate(EvaluateArgs),
    /// Compare model gradients against central differences
    Gradcheck(GradcheckArgs),
}

#[derive(Args, Debug)]
struct ParseArgs {
    /// C source file holding a single function
    #[arg(long)]
    function: PathBuf,
    /// Write JSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GraphArgs {
    #[arg(long)]
    function: PathBuf,
    #[arg(long, default_value_t = 0)]
    label: u8,
    #[arg(long, default_value = "CWE-120")]
    cwe: CweLabel,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct IngestArgs {
    /// JSON-lines commit dump with project, sha, message and diff fields
    #[arg(long, conflicts_with = "git", required_unless_present = "git")]
    input: Option<PathBuf>,
    /// Read commits from this git repository instead
    #[arg(long)]
    git: Option<PathBuf>,
    /// Project name for commits read with --git
    #[arg(long, default_value = "repo")]
    project: String,
    #[arg(long)]
    out_dir: PathBuf,
    /// Keep only this weakness type
    #[arg(long)]
    cwe: Option<CweLabel>,
    #[arg(long, default_value_t = 800)]
    max_nodes: usize,
    /// train:validation:test
    #[arg(long = "split", alias = "ratios", default_value = "6:2:2")]
    split: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SliceArgs {
    /// patches.jsonl written by ingest
    #[arg(long)]
    patches: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AugmentArgs {
    /// Directory written by ingest
    #[arg(long)]
    data_dir: PathBuf,
    /// Defaults to --data-dir
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Comma-separated operators
    #[arg(long, default_value = "rn,ai,del,add,ro", value_delimiter = ',')]
    ops: Vec<MutationKind>,
    /// Mutants per operator (default: one attempt per training pair)
    #[arg(long)]
    per_op: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Default)]
struct HyperArgs {
    /// key = value file; flags given here override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    d_edge: Option<usize>,
    #[arg(long)]
    hops: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    tied: bool,
    #[arg(long)]
    min_freq: Option<usize>,
    #[arg(long)]
    max_vocab: Option<usize>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    data_dir: PathBuf,
    #[arg(long)]
    cwe: CweLabel,
    /// Where checkpoints go
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Directory holding the five CWE-*.ckpt files
    #[arg(long)]
    models: PathBuf,
    #[arg(long)]
    function: PathBuf,
    #[arg(long, default_value_t = 800)]
    max_nodes: usize,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    data_dir: PathBuf,
    #[arg(long)]
    models: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Weakness types to score (default: all five, plus the ensemble)
    #[arg(long, value_delimiter = ',')]
    cwe: Vec<CweLabel>,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    d: usize,
    #[arg(long, default_value = "edge-aware")]
    variant: Variant,
}

/// Parses `argv` (program name first) and runs the subcommand. Returns 0 on
/// success, 1 on a pipeline error and 2 on a usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Parse(a) => cmd_parse(a),
        Command::Graph(a) => cmd_graph(a),
        Command::Ingest(a) => cmd_ingest(a),
        Command::Slice(a) => cmd_slice(a),
        Command::Augment(a) => cmd_augment(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.into(), source })?;
    }
    fs::write(path, bytes).map_err(|source| CliError::Io { path: path.into(), source })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.into(), source })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_bytes(path, to_json(value).as_bytes())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|source| CliError::Json { path: path.into(), source })
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            print!("{}", to_json(value));
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    seed: Option<u64>,
    config: BTreeMap<String, String>,
    outputs: Vec<String>,
}

/// Records what produced the files in `dir`. Paths are left out so that
/// runs in different directories produce identical manifests.
fn write_manifest(dir: &Path, subcommand: &str, seed: Option<u64>, config: BTreeMap<String, String>, outputs: &[&str]) -> Result<()> {
    let m = Manifest {
        tool: "cpgvul",
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        seed,
        config,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    };
    write_json(&dir.join(format!("{subcommand}.manifest.json")), &m)
}

#[derive(Serialize)]
struct StatementView {
    id: usize,
    kind: String,
    text: String,
}

#[derive(Serialize)]
struct ParseView {
    name: String,
    statements: Vec<StatementView>,
}

fn cmd_parse(a: ParseArgs) -> Result<()> {
    let ast = parse_source(&read_text(&a.function)?)?;
    let statements = (0..ast.statement_count())
        .map(|s| StatementView { id: s, kind: ast.statement(s).kind.as_str().to_string(), text: ast.statement_text(s) })
        .collect();
    emit(a.out.as_deref(), &ParseView { name: ast.name.clone(), statements })
}

fn function_graph(code: &str, id: &str, label: u8, cwe: CweLabel) -> Result<GraphRecord> {
    let ast = parse_source(code)?;
    Ok(GraphRecord::from_cpg(&build_cpg(&ast, id), label, cwe))
}

fn cmd_graph(a: GraphArgs) -> Result<()> {
    let id = a.function.file_stem().map_or("function".into(), |s| s.to_string_lossy().into_owned());
    let g = function_graph(&read_text(&a.function)?, &id, a.label, a.cwe)?;
    emit(a.out.as_deref(), &g)
}

fn graphs_of(functions: &[FunctionRecord]) -> Result<Vec<GraphRecord>> {
    functions.iter().map(|f| function_graph(&f.code, &f.id, f.label, f.cwe)).collect()
}

fn cmd_ingest(a: IngestArgs) -> Result<()> {
    let ratios = parse_ratios(&a.split).map_err(CliError::Invalid)?;
    let commits = match (&a.input, &a.git) {
        (Some(p), _) => read_commit_dump(p)?,
        (None, Some(repo)) => commits_from_git(repo, &a.project)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    let opts = IngestOptions { cwe: a.cwe, max_nodes: a.max_nodes, ratios, seed: a.seed };
    let ds = ingest(commits, &opts)?;
    let dir = &a.out_dir;
    ensure_dir(dir)?;
    write_jsonl(&dir.join("functions.jsonl"), &ds.functions)?;
    write_jsonl(&dir.join("patches.jsonl"), &ds.patches)?;
    write_jsonl(&dir.join("graphs.jsonl"), graphs_of(&ds.functions)?)?;
    write_json(&dir.join("split.json"), &ds.split)?;
    write_json(&dir.join("stats.json"), &ds.stats)?;
    let config = BTreeMap::from([
        ("cwe".to_string(), a.cwe.map_or("all".into(), |c| c.to_string())),
        ("max_nodes".to_string(), a.max_nodes.to_string()),
        ("split".to_string(), a.split.clone()),
        ("source".to_string(), if a.git.is_some() { format!("git:{}", a.project) } else { "dump".into() }),
    ]);
    write_manifest(dir, "ingest", Some(a.seed), config, &["functions.jsonl", "patches.jsonl", "graphs.jsonl", "split.json", "stats.json"])?;
    eprintln!(
        "{} commits read, {} accepted, {} pairs, {} functions",
        ds.stats.filter.input,
        ds.stats.filter.emitted,
        ds.patches.len(),
        ds.functions.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct SliceView {
    id: String,
    related_v: BTreeSet<usize>,
    related_p: BTreeSet<usize>,
    frozen: BTreeSet<usize>,
}

fn cmd_slice(a: SliceArgs) -> Result<()> {
    let patches: Vec<PatchTuple> = read_jsonl(&a.patches)?;
    let mut out = Vec::new();
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    for p in &patches {
        let (v, fp) = (p.f_v.parse()?, p.f_p.parse()?);
        let rel = slice_related(&pdg_of(&v), &pdg_of(&fp), &p.s_del, &p.s_add)?;
        let frozen = related_in_vulnerable(&rel, &align_statements(&v, &fp));
        out.push(SliceView { id: p.f_v.id.clone(), related_v: rel.related_v, related_p: rel.related_p, frozen });
    }
    write_jsonl(&a.out, &out)?;
    let dir = a.out.parent().map_or(PathBuf::from("."), Path::to_path_buf);
    let name = a.out.file_name().map_or(String::new(), |n| n.to_string_lossy().into_owned());
    write_manifest(&dir, "slice", None, BTreeMap::new(), &[&name])
}

fn cmd_augment(a: AugmentArgs) -> Result<()> {
    let out_dir = a.out_dir.clone().unwrap_or_else(|| a.data_dir.clone());
    let patches: Vec<PatchTuple> = read_jsonl(&a.data_dir.join("patches.jsonl"))?;
    let mut split: DatasetSplit = read_json(&a.data_dir.join("split.json"))?;
    let train: Vec<PatchTuple> = patches.into_iter().filter(|p| split.is_train(&p.f_v.id)).collect();
    let (mutants, report) = augment_dataset(&train, &a.ops, a.per_op, a.seed);
    let parents: BTreeMap<&str, &FunctionRecord> = train.iter().map(|p| (p.f_v.id.as_str(), &p.f_v)).collect();
    let records: Vec<FunctionRecord> = mutants.iter().map(|m| m.to_record(parents[m.parent_id.as_str()])).collect();
    attach_mutants(&mut split, &records)?;
    ensure_dir(&out_dir)?;
    write_jsonl(&out_dir.join("mutants.jsonl"), &records)?;
    write_jsonl(&out_dir.join("mutant_graphs.jsonl"), graphs_of(&records)?)?;
    write_json(&out_dir.join("split_augmented.json"), &split)?;
    write_json(&out_dir.join("augment_report.json"), &report)?;
    let config = BTreeMap::from([
        ("ops".to_string(), a.ops.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(",")),
        ("per_op".to_string(), a.per_op.map_or("pairs".into(), |n| n.to_string())),
    ]);
    write_manifest(&out_dir, "augment", Some(a.seed), config, &["mutants.jsonl", "mutant_graphs.jsonl", "split_augmented.json", "augment_report.json"])?;
    eprintln!("{} mutants from {} training pairs", records.len(), train.len());
    Ok(())
}

fn resolve_hyper(cwe: CweLabel, h: &HyperArgs) -> Result<Hyper> {
    let mut hyper = Hyper::for_cwe(cwe);
    if let Some(p) = &h.config {
        hyper.apply_config(&read_text(p)?)?;
    }
    let mut set = |k: &str, v: Option<String>| -> Result<()> {
        if let Some(v) = v {
            hyper.set(k, &v)?;
        }
        Ok(())
    };
    set("d", h.d.map(|v| v.to_string()))?;
    set("d_edge", h.d_edge.map(|v| v.to_string()))?;
    set("hops", h.hops.map(|v| v.to_string()))?;
    set("dropout", h.dropout.map(|v| v.to_string()))?;
    set("lr", h.lr.map(|v| v.to_string()))?;
    set("batch", h.batch.map(|v| v.to_string()))?;
    set("epochs", h.epochs.map(|v| v.to_string()))?;
    set("seed", h.seed.map(|v| v.to_string()))?;
    set("variant", h.variant.map(|v| v.to_string()))?;
    set("tied", h.tied.then(|| "true".to_string()))?;
    set("min_freq", h.min_freq.map(|v| v.to_string()))?;
    set("max_vocab", h.max_vocab.map(|v| v.to_string()))?;
    hyper.cwe = Some(cwe);
    Ok(hyper)
}

/// Graphs and split of a data directory, including mutants when augment ran.
fn load_graphs(dir: &Path) -> Result<(Vec<GraphRecord>, DatasetSplit)> {
    let mut graphs: Vec<GraphRecord> = read_jsonl(&dir.join("graphs.jsonl"))?;
    let aug = dir.join("split_augmented.json");
    let split = if aug.exists() {
        graphs.extend(read_jsonl::<GraphRecord>(&dir.join("mutant_graphs.jsonl"))?);
        read_json(&aug)?
    } else {
        read_json(&dir.join("split.json"))?
    };
    Ok((graphs, split))
}

fn checkpoint_path(dir: &Path, cwe: CweLabel) -> PathBuf {
    dir.join(format!("{cwe}.ckpt"))
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let hyper = resolve_hyper(a.cwe, &a.hyper)?;
    let (graphs, split) = load_graphs(&a.data_dir)?;
    let train_ids: BTreeSet<&str> = split.train.iter().map(String::as_str).collect();
    let val_ids: BTreeSet<&str> = split.validation.iter().map(String::as_str).collect();
    let of_cwe = |ids: &BTreeSet<&str>| -> Vec<&GraphRecord> {
        graphs.iter().filter(|g| g.cwe == a.cwe && ids.contains(g.function_id.as_str())).collect()
    };
    let (train_set, val_set) = (of_cwe(&train_ids), of_cwe(&val_ids));
    if train_set.is_empty() {
        return Err(CliError::Invalid(format!("no training graphs for {}", a.cwe)));
    }
    let vocab = Vocabulary::build(train_set.iter().copied(), hyper.min_freq, hyper.max_vocab);
    let model = ModelState::init(hyper.clone(), vocab)?;
    let encode = |set: &[&GraphRecord]| set.iter().map(|g| model.encode(g)).collect::<std::result::Result<Vec<_>, _>>();
    let (t, v) = (encode(&train_set)?, encode(&val_set)?);
    let outcome = train(model.clone(), &t, &v)?;
    let ckpt = checkpoint_path(&a.out_dir, a.cwe);
    write_bytes(&ckpt, &outcome.model.to_checkpoint().to_bytes())?;
    let history = format!("{}.history.json", a.cwe);
    write_json(&a.out_dir.join(&history), &serde_json::json!({ "best_epoch": outcome.best_epoch, "epochs": outcome.history }))?;
    let mut config = hyper.to_pairs();
    config.insert("train_graphs".into(), t.len().to_string());
    config.insert("validation_graphs".into(), v.len().to_string());
    let ckpt_name = format!("{}.ckpt", a.cwe);
    write_manifest(&a.out_dir, &format!("train-{}", a.cwe), Some(hyper.seed), config, &[&ckpt_name, &history])?;
    eprintln!("{}: {} train / {} validation graphs, best epoch {}", a.cwe, t.len(), v.len(), outcome.best_epoch);
    Ok(())
}

fn load_model(dir: &Path, cwe: CweLabel) -> Result<ModelState> {
    let path = checkpoint_path(dir, cwe);
    if !path.exists() {
        return Err(CliError::MissingCheckpoint(path));
    }
    let bytes = fs::read(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(ModelState::from_checkpoint(Checkpoint::from_bytes(&bytes)?)?)
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let models = CweLabel::ALL.iter().map(|&c| load_model(&a.models, c)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&dyn Classifier> = models.iter().map(|m| m as &dyn Classifier).collect();
    let verdict = predict_function(&read_text(&a.function)?, &refs, a.max_nodes)?;
    println!("{}", serde_json::to_string(&verdict).expect("serializable"));
    Ok(())
}

#[derive(Serialize)]
struct Report {
    rows: Vec<ReportRow>,
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let cwes: Vec<CweLabel> = if a.cwe.is_empty() { CweLabel::ALL.to_vec() } else { a.cwe.clone() };
    let (graphs, split) = load_graphs(&a.data_dir)?;
    let test_ids: BTreeSet<&str> = split.test.iter().map(String::as_str).collect();
    let test: Vec<&GraphRecord> = graphs.iter().filter(|g| test_ids.contains(g.function_id.as_str())).collect();
    if test.is_empty() {
        return Err(CliError::EmptyTestSplit);
    }
    let models: BTreeMap<CweLabel, ModelState> = cwes.iter().map(|&c| load_model(&a.models, c).map(|m| (c, m))).collect::<Result<_>>()?;
    let probs_for = |m: &ModelState, gs: &[&GraphRecord]| -> Result<Vec<f64>> {
        let enc: Vec<EncodedGraph> = gs.iter().map(|g| m.encode(g)).collect::<std::result::Result<_, _>>()?;
        Ok(predict_all(m, &enc)?)
    };
    let mut rows = Vec::new();
    for &c in &cwes {
        let gs: Vec<&GraphRecord> = test.iter().copied().filter(|g| g.cwe == c).collect();
        let probs = probs_for(&models[&c], &gs)?;
        let preds: Vec<u8> = probs.iter().map(|&p| u8::from(p > 0.5)).collect();
        let labels: Vec<u8> = gs.iter().map(|g| g.label).collect();
        rows.push(ReportRow { name: c.to_string(), samples: gs.len(), metrics: metrics(&preds, &labels)? });
    }
    if cwes.len() == CweLabel::ALL.len() {
        let per_model: Vec<Vec<f64>> = CweLabel::ALL.iter().map(|c| probs_for(&models[c], &test)).collect::<Result<_>>()?;
        let preds = (0..test.len())
            .map(|i| vote(&per_model.iter().map(|p| p[i]).collect::<Vec<_>>()).map(|v| v.final_label))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let labels: Vec<u8> = test.iter().map(|g| g.label).collect();
        rows.push(ReportRow { name: "ensemble".into(), samples: test.len(), metrics: metrics(&preds, &labels)? });
    }
    write_json(&a.out_dir.join("report.json"), &Report { rows: rows.clone() })?;
    let text = render_report(&rows);
    write_bytes(&a.out_dir.join("report.txt"), text.as_bytes())?;
    let config = BTreeMap::from([("cwe".to_string(), cwes.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","))]);
    write_manifest(&a.out_dir, "evaluate", None, config, &["report.json", "report.txt"])?;
    print!("{text}");
    Ok(())
}

fn cmd_gradcheck(a: GradcheckArgs) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let kinds = [EdgeKind::Ast, EdgeKind::FlowTo, EdgeKind::DefineUse, EdgeKind::Reach, EdgeKind::Control];
    let (tokens, edges) = random_graph(&mut rng, 6, &kinds);
    let g = graph_record("gradcheck", 1, &tokens, &edges);
    let hyper = Hyper { d: a.d, d_edge: a.d, hops: 3, variant: a.variant, seed: a.seed, ..Hyper::default() };
    let model = ModelState::init(hyper, Vocabulary::build([&g], 1, None))?;
    let err = check_gradients(&model, &model.encode(&g)?, a.samples, a.seed, a.seed)?;
    println!("{}", serde_json::json!({ "samples": a.samples, "max_relative_error": err, "tolerance": GRADCHECK_TOLERANCE }));
    if err > GRADCHECK_TOLERANCE {
        return Err(CliError::GradientMismatch(err));
    }
    Ok(())
}
