//! The `tlink` command line.
//!
//! Every subcommand wraps one library operation, writes its outputs, and
//! leaves a [`RunManifest`] beside the main output.
//!
//! Exit status:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success (also `--help` and `--version`) |
//! | 1 | usage error: bad flags or configuration values |
//! | 2 | data error: unreadable file, schema violation, inconsistent gold |
//! | 3 | the exact solver hit its node limit |

pub mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tlink_core::experiment::{run_experiment, ExperimentConfig, Method, PostFilterMode};
use tlink_core::{
    corpus_awareness, generate_synthetic, load_corpus, predict, save_corpus, train_codl, train_local_ap,
    train_structured, AnnotationCensus, Averaging, Corpus, Decoder, Document, Error, InferenceConfig,
    Model, PostFilterLabels, Relation, Result, SynthConfig, TemporalGraph, TrainConfig, TrainLog,
};

pub use manifest::{manifest_path, FileDigest, RunManifest};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_SOLVER_LIMIT: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "tlink", version, about = "Temporal relation graphs: training, inference and evaluation")]
pub struct Cli {
    /// Log progress to standard error (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus.
    Gen(GenArgs),
    /// Train the local averaged perceptron.
    TrainLocal(TrainArgs),
    /// Train the structured perceptron with exact inference in the loop.
    TrainStructured(TrainArgs),
    /// Semi-supervised constraint-driven learning.
    TrainCodl(CodlArgs),
    /// Predict a temporal graph for every document.
    Infer(InferArgs),
    /// Score system graphs against gold graphs.
    Eval(EvalArgs),
    /// Write the transitive closure of every gold graph.
    Closure(ClosureArgs),
    /// Count annotated, inferred and unknown pairs.
    Census(CensusArgs),
    /// Compare the learning methods on generated corpora.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VagueMode {
    /// Vague is never predicted; it marks absent edges.
    Exclude,
    /// Vague is a sixth label.
    Include,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelsArg {
    All,
    Feasible,
}

/// Inference flags. Unset flags keep the configured or built-in value.
#[derive(Debug, Clone, Default, Args)]
pub struct InferenceArgs {
    /// Largest sentence distance of a candidate pair [default: 1].
    #[arg(long)]
    pub max_sent_dist: Option<u32>,
    /// Post-filter threshold on the relative entropy [default: 0.2].
    #[arg(long)]
    pub tau: Option<f64>,
    /// Whether vague is excluded from the label set [default: exclude].
    #[arg(long, value_enum)]
    pub vague_mode: Option<VagueMode>,
    /// Branch-and-bound node limit [default: 5000000].
    #[arg(long)]
    pub node_limit: Option<u64>,
    /// Labels the post-filter normalizes over [default: all].
    #[arg(long, value_enum)]
    pub post_filter_labels: Option<LabelsArg>,
}

impl InferenceArgs {
    fn apply(&self, mut cfg: InferenceConfig) -> InferenceConfig {
        if let Some(d) = self.max_sent_dist {
            cfg.max_sentence_dist = d;
        }
        if let Some(t) = self.tau {
            cfg.post_filter_tau = t;
        }
        if let Some(m) = self.vague_mode {
            cfg.vague_exclusion = m == VagueMode::Exclude;
        }
        if let Some(n) = self.node_limit {
            cfg.solver_node_limit = n;
        }
        if let Some(l) = self.post_filter_labels {
            cfg.post_filter_labels = match l {
                LabelsArg::All => PostFilterLabels::All,
                LabelsArg::Feasible => PostFilterLabels::Feasible,
            };
        }
        cfg
    }
}

/// Learner flags shared by the training commands.
#[derive(Debug, Clone, Default, Args)]
pub struct LearnArgs {
    /// Perceptron step size [default: 1].
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Maximum passes over the training data [default: 20].
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Seed of the example shuffle [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Return the final weights instead of the average over all steps.
    #[arg(long)]
    pub no_average: bool,
    /// Drop gold edges that contradict earlier ones instead of failing.
    #[arg(long)]
    pub repair_gold: bool,
}

impl LearnArgs {
    fn apply(&self, mut cfg: TrainConfig) -> TrainConfig {
        if let Some(l) = self.learning_rate {
            cfg.learning_rate = l;
        }
        if let Some(e) = self.epochs {
            cfg.epochs = e;
        }
        if let Some(s) = self.seed {
            cfg.shuffle_seed = s;
        }
        if self.no_average {
            cfg.average = false;
        }
        cfg
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Output corpus file.
    #[arg(long)]
    pub out: PathBuf,
    /// Generator configuration (JSON); flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_docs: Option<usize>,
    #[arg(long)]
    pub min_events: Option<usize>,
    #[arg(long)]
    pub max_events: Option<usize>,
    #[arg(long)]
    pub min_sentences: Option<usize>,
    #[arg(long)]
    pub max_sentences: Option<usize>,
    /// Cue noise rate.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Fraction of gold labels replaced by vague.
    #[arg(long)]
    pub drop_rate: Option<f64>,
    /// Fraction of nearby pairs whose cues are uninformative.
    #[arg(long)]
    pub dependent_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Labelled training corpus.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Training log (JSON lines) [default: <out>.log.jsonl].
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    pub learn: LearnArgs,
    #[command(flatten)]
    pub inference: InferenceArgs,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CodlArgs {
    #[command(flatten)]
    pub train: TrainArgs,
    /// Corpus whose documents are used without their labels.
    #[arg(long)]
    pub unlabeled: PathBuf,
    /// Weight kept on the previous model in each re-estimation [default: 0.9].
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Maximum pseudo-labelling rounds [default: 5].
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecoderArg {
    Local,
    Global,
}

#[derive(Debug, Clone, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output corpus whose gold labels are the predicted closed graphs.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "global")]
    pub decoder: DecoderArg,
    /// Relabel low-confidence predictions as vague.
    #[arg(long)]
    pub post_filter: bool,
    #[command(flatten)]
    pub inference: InferenceArgs,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AveragingArg {
    Micro,
    Macro,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Corpus holding system labels.
    #[arg(long)]
    pub sys: PathBuf,
    /// Corpus holding gold labels.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum, default_value = "micro")]
    pub averaging: AveragingArg,
    /// Machine-readable score record (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ClosureArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CensusArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Also print one line per document.
    #[arg(long)]
    pub per_doc: bool,
    /// Machine-readable census record (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PostFilterArg {
    Off,
    Fixed,
    Tuned,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// Report file (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Experiment configuration (JSON); flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run seeds 0..N [default: 5].
    #[arg(long)]
    pub seeds: Option<u64>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub drop_rate: Option<f64>,
    /// Labelled share of the training split for CoDL [default: 0.2].
    #[arg(long)]
    pub labeled_fraction: Option<f64>,
    /// Test-time post-filter; `fixed` uses --tau [default: tuned].
    #[arg(long, value_enum)]
    pub post_filter: Option<PostFilterArg>,
    /// Restrict to these methods.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub methods: Vec<MethodArg>,
    #[command(flatten)]
    pub learn: LearnArgs,
    #[command(flatten)]
    pub inference: InferenceArgs,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Local,
    LocalInference,
    StructuredInference,
    StructuredVagueLabel,
    SupervisedSubset,
    Codl,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Local => Method::Local,
            MethodArg::LocalInference => Method::LocalInference,
            MethodArg::StructuredInference => Method::StructuredInference,
            MethodArg::StructuredVagueLabel => Method::StructuredVagueLabel,
            MethodArg::SupervisedSubset => Method::SupervisedSubset,
            MethodArg::Codl => Method::Codl,
        }
    }
}

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::NodeLimitExceeded { .. } => EXIT_SOLVER_LIMIT,
        Error::Config(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// status. Results go to standard output, diagnostics to standard error.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    // Program name is left out so the manifest does not depend on how the
    // binary was invoked.
    let argv: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli.command, argv) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Default log filter for a `-v` count.
pub fn log_level(verbose: u8) -> log::LevelFilter {
    match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    }
}

struct Run {
    command: &'static str,
    argv: Vec<String>,
    started: Instant,
    inputs: Vec<FileDigest>,
}

impl Run {
    fn start(command: &'static str, argv: Vec<String>, inputs: &[&Path]) -> Result<Run> {
        Ok(Run {
            command,
            argv,
            started: Instant::now(),
            inputs: inputs.iter().map(|p| FileDigest::of(p)).collect::<Result<_>>()?,
        })
    }

    /// Writes the manifest to `explicit`, or beside `primary` if there is one.
    fn finish<C: Serialize>(
        self,
        config: &C,
        seed: Option<u64>,
        outputs: &[&Path],
        primary: Option<&Path>,
        explicit: Option<&Path>,
    ) -> Result<()> {
        let Some(path) = explicit.map(Path::to_path_buf).or_else(|| primary.map(manifest_path)) else {
            return Ok(());
        };
        let m = RunManifest {
            command: self.command.to_string(),
            argv: self.argv,
            config: serde_json::to_value(config).expect("config serializes"),
            inputs: self.inputs,
            seed,
            outputs: outputs.iter().map(|p| FileDigest::of(p)).collect::<Result<_>>()?,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        m.write(&path)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("record serializes");
    text.push('\n');
    manifest::write_text(path, &text)
}

fn default_log_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".log.jsonl");
    PathBuf::from(s)
}

fn execute(command: &Command, argv: Vec<String>) -> Result<()> {
    match command {
        Command::Gen(a) => cmd_gen(a, argv),
        Command::TrainLocal(a) => cmd_train(a, Learner::Local, argv),
        Command::TrainStructured(a) => cmd_train(a, Learner::Structured, argv),
        Command::TrainCodl(a) => cmd_train_codl(a, argv),
        Command::Infer(a) => cmd_infer(a, argv),
        Command::Eval(a) => cmd_eval(a, argv),
        Command::Closure(a) => cmd_closure(a, argv),
        Command::Census(a) => cmd_census(a, argv),
        Command::Experiment(a) => cmd_experiment(a, argv),
    }
}

pub fn cmd_gen(a: &GenArgs, argv: Vec<String>) -> Result<()> {
    let inputs: Vec<&Path> = a.config.iter().map(PathBuf::as_path).collect();
    let run = Run::start("gen", argv, &inputs)?;
    let mut cfg: SynthConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => SynthConfig::default(),
    };
    if let Some(n) = a.n_docs {
        cfg.n_docs = n;
    }
    if let Some(v) = a.min_events {
        cfg.events_per_doc.0 = v;
    }
    if let Some(v) = a.max_events {
        cfg.events_per_doc.1 = v;
    }
    if let Some(v) = a.min_sentences {
        cfg.sentences_per_doc.0 = v;
    }
    if let Some(v) = a.max_sentences {
        cfg.sentences_per_doc.1 = v;
    }
    if let Some(v) = a.noise {
        cfg.noise = v;
    }
    if let Some(v) = a.drop_rate {
        cfg.drop_rate = v;
    }
    if let Some(v) = a.dependent_fraction {
        cfg.dependent_fraction = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    let corpus = generate_synthetic(&cfg)?;
    save_corpus(&corpus, &a.out)?;
    log::info!("wrote {} documents to {}", corpus.documents.len(), a.out.display());
    run.finish(&cfg, Some(cfg.seed), &[&a.out], Some(&a.out), a.manifest.as_deref())
}

#[derive(Clone, Copy)]
enum Learner {
    Local,
    Structured,
}

#[derive(Serialize)]
struct TrainSnapshot {
    learner: &'static str,
    train: TrainConfig,
    inference: InferenceConfig,
    repair_gold: bool,
}

fn training_configs(a: &TrainArgs) -> Result<(TrainConfig, InferenceConfig)> {
    let mut inf = a.inference.apply(InferenceConfig::default());
    let mut train = a.learn.apply(TrainConfig::default());
    // One switch governs both the label set learned and the one decoded.
    let exclude = a.inference.vague_mode.is_none_or(|m| m == VagueMode::Exclude);
    inf.vague_exclusion = exclude;
    train.vague_exclusion = exclude;
    train.validate()?;
    inf.validate()?;
    Ok((train, inf))
}

/// Gold-consistent training documents, repairing them if asked.
fn training_documents(corpus: &Corpus, repair: bool) -> Result<Vec<Document>> {
    corpus
        .documents
        .iter()
        .map(|d| {
            if repair {
                let (fixed, dropped) = d.repaired_gold()?;
                for link in &dropped {
                    log::warn!(
                        "{}: dropped gold edge ({}, {}) {} that contradicts earlier edges",
                        d.doc_id,
                        link.source,
                        link.target,
                        link.relation
                    );
                }
                Ok(fixed)
            } else {
                d.closed_gold_graph()?;
                Ok(d.clone())
            }
        })
        .collect()
}

fn write_model_and_log(model: &Model, log: &TrainLog, out: &Path, log_path: &Path) -> Result<()> {
    model.save(out)?;
    manifest::write_text(log_path, &log.to_jsonl())
}

fn cmd_train(a: &TrainArgs, learner: Learner, argv: Vec<String>) -> Result<()> {
    let (name, label) = match learner {
        Learner::Local => ("train-local", "local"),
        Learner::Structured => ("train-structured", "structured"),
    };
    let run = Run::start(name, argv, &[&a.corpus])?;
    let (train, inf) = training_configs(a)?;
    let corpus = load_corpus(&a.corpus)?;
    let docs = training_documents(&corpus, a.learn.repair_gold)?;
    let mut log = TrainLog::default();
    let model = match learner {
        Learner::Local => train_local_ap(&docs, corpus.feature_dimension, &train, &inf, &mut log)?,
        Learner::Structured => train_structured(&docs, corpus.feature_dimension, &train, &inf, &mut log)?,
    };
    let log_path = a.log.clone().unwrap_or_else(|| default_log_path(&a.out));
    write_model_and_log(&model, &log, &a.out, &log_path)?;
    let snapshot = TrainSnapshot {
        learner: label,
        train,
        inference: inf,
        repair_gold: a.learn.repair_gold,
    };
    run.finish(
        &snapshot,
        Some(snapshot.train.shuffle_seed),
        &[&a.out, &log_path],
        Some(&a.out),
        a.manifest.as_deref(),
    )
}

fn cmd_train_codl(a: &CodlArgs, argv: Vec<String>) -> Result<()> {
    let t = &a.train;
    let run = Run::start("train-codl", argv, &[&t.corpus, &a.unlabeled])?;
    let (mut train, inf) = training_configs(t)?;
    if let Some(g) = a.gamma {
        train.codl_gamma = g;
    }
    if let Some(n) = a.iterations {
        train.codl_iterations = n;
    }
    train.validate()?;
    let labeled = load_corpus(&t.corpus)?;
    let unlabeled = load_corpus(&a.unlabeled)?;
    let docs = training_documents(&labeled, t.learn.repair_gold)?;
    let pool: Vec<Document> = unlabeled.documents.iter().map(Document::unlabeled).collect();
    let dimension = labeled.feature_dimension.max(unlabeled.feature_dimension);
    let mut log = TrainLog::default();
    let model = train_codl(&docs, &pool, dimension, &train, &inf, &mut log)?;
    let log_path = t.log.clone().unwrap_or_else(|| default_log_path(&t.out));
    write_model_and_log(&model, &log, &t.out, &log_path)?;
    let snapshot = TrainSnapshot {
        learner: "codl",
        train,
        inference: inf,
        repair_gold: t.learn.repair_gold,
    };
    run.finish(
        &snapshot,
        Some(snapshot.train.shuffle_seed),
        &[&t.out, &log_path],
        Some(&t.out),
        t.manifest.as_deref(),
    )
}

#[derive(Serialize)]
struct InferSnapshot {
    decoder: Decoder,
    post_filter: bool,
    inference: InferenceConfig,
}

fn cmd_infer(a: &InferArgs, argv: Vec<String>) -> Result<()> {
    let run = Run::start("infer", argv, &[&a.model, &a.corpus])?;
    let model = Model::load(&a.model)?;
    let model_exclusion = !model.active().contains(Relation::Vague);
    let mut inf = a.inference.apply(InferenceConfig::default());
    match a.inference.vague_mode {
        Some(m) if (m == VagueMode::Exclude) != model_exclusion => {
            return Err(Error::Config(format!(
                "--vague-mode {} does not match the model's label set",
                if m == VagueMode::Exclude { "exclude" } else { "include" }
            )));
        }
        _ => inf.vague_exclusion = model_exclusion,
    }
    inf.validate()?;
    let decoder = match a.decoder {
        DecoderArg::Local => Decoder::Local,
        DecoderArg::Global => Decoder::Global,
    };
    let corpus = load_corpus(&a.corpus)?;
    let mut out = Vec::with_capacity(corpus.documents.len());
    let mut dropped = 0;
    for doc in &corpus.documents {
        let p = predict(&model, doc, &inf, decoder, a.post_filter)?;
        dropped += p.dropped;
        out.push(doc.relabeled(p.graph.edges()));
    }
    if dropped > 0 {
        log::info!("dropped {dropped} conflicting predicted edges in total");
    }
    let predicted = Corpus::new(corpus.feature_dimension, out)?;
    save_corpus(&predicted, &a.out)?;
    let snapshot = InferSnapshot {
        decoder,
        post_filter: a.post_filter,
        inference: inf,
    };
    run.finish(&snapshot, None, &[&a.out], Some(&a.out), a.manifest.as_deref())
}

#[derive(Serialize)]
struct EvalRecord {
    averaging: Averaging,
    documents: usize,
    precision: f64,
    recall: f64,
    f1: f64,
}

/// Gold graphs of `sys` and `gold`, matched by document id.
fn paired_graphs(sys: &Corpus, gold: &Corpus) -> Result<Vec<(TemporalGraph, TemporalGraph)>> {
    if let Some(d) = sys.documents.iter().find(|d| gold.document(&d.doc_id).is_none()) {
        return Err(Error::Schema {
            location: format!("document {}", d.doc_id),
            message: "system document has no gold counterpart".into(),
        });
    }
    gold.documents
        .iter()
        .map(|g| {
            let s = sys.document(&g.doc_id).ok_or_else(|| Error::Schema {
                location: format!("document {}", g.doc_id),
                message: "gold document has no system counterpart".into(),
            })?;
            if s.n_events() != g.n_events() {
                return Err(Error::Schema {
                    location: format!("document {}", g.doc_id),
                    message: format!("{} system events but {} gold events", s.n_events(), g.n_events()),
                });
            }
            Ok((s.gold_graph()?, g.gold_graph()?))
        })
        .collect()
}

fn cmd_eval(a: &EvalArgs, argv: Vec<String>) -> Result<()> {
    let run = Run::start("eval", argv, &[&a.sys, &a.gold])?;
    let averaging = match a.averaging {
        AveragingArg::Micro => Averaging::Micro,
        AveragingArg::Macro => Averaging::Macro,
    };
    let sys = load_corpus(&a.sys)?;
    let gold = load_corpus(&a.gold)?;
    let graphs = paired_graphs(&sys, &gold)?;
    let score = corpus_awareness(graphs.iter().map(|(s, g)| (s, g)), averaging)?;
    println!("{score}");
    let mut outputs: Vec<&Path> = Vec::new();
    if let Some(out) = &a.out {
        let record = EvalRecord {
            averaging,
            documents: graphs.len(),
            precision: score.precision,
            recall: score.recall,
            f1: score.f1,
        };
        write_json(out, &record)?;
        outputs.push(out);
    }
    run.finish(&averaging, None, &outputs, a.out.as_deref(), a.manifest.as_deref())
}

fn cmd_closure(a: &ClosureArgs, argv: Vec<String>) -> Result<()> {
    let run = Run::start("closure", argv, &[&a.corpus])?;
    let corpus = load_corpus(&a.corpus)?;
    let docs = corpus
        .documents
        .iter()
        .map(|d| Ok(d.relabeled(d.closed_gold_graph()?.edges())))
        .collect::<Result<Vec<_>>>()?;
    save_corpus(&Corpus::new(corpus.feature_dimension, docs)?, &a.out)?;
    run.finish(&serde_json::Value::Null, None, &[&a.out], Some(&a.out), a.manifest.as_deref())
}

fn census_line(c: &AnnotationCensus) -> String {
    format!(
        "annotated={} inferred={} unknown={} total={}",
        c.annotated, c.inferred, c.unknown, c.total
    )
}

fn cmd_census(a: &CensusArgs, argv: Vec<String>) -> Result<()> {
    let run = Run::start("census", argv, &[&a.corpus])?;
    let corpus = load_corpus(&a.corpus)?;
    let mut total = AnnotationCensus::default();
    for d in &corpus.documents {
        let c = d.gold_graph()?.census().map_err(|e| e.in_document(&d.doc_id))?;
        if a.per_doc {
            println!("{}: {}", d.doc_id, census_line(&c));
        }
        total += c;
    }
    println!("{}", census_line(&total));
    let mut outputs: Vec<&Path> = Vec::new();
    if let Some(out) = &a.out {
        write_json(out, &total)?;
        outputs.push(out);
    }
    run.finish(&serde_json::Value::Null, None, &outputs, a.out.as_deref(), a.manifest.as_deref())
}

fn cmd_experiment(a: &ExperimentArgs, argv: Vec<String>) -> Result<()> {
    let inputs: Vec<&Path> = a.config.iter().map(PathBuf::as_path).collect();
    let run = Run::start("experiment", argv, &inputs)?;
    let mut cfg: ExperimentConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = a.seeds {
        cfg.seeds = (0..n).collect();
    }
    if let Some(n) = a.n_train {
        cfg.n_train = n;
    }
    if let Some(n) = a.n_test {
        cfg.n_test = n;
    }
    if let Some(v) = a.noise {
        cfg.synth.noise = v;
    }
    if let Some(v) = a.drop_rate {
        cfg.synth.drop_rate = v;
    }
    if let Some(v) = a.labeled_fraction {
        cfg.labeled_fraction = v;
    }
    if !a.methods.is_empty() {
        cfg.methods = a.methods.iter().map(|&m| m.into()).collect();
    }
    cfg.train = a.learn.apply(cfg.train);
    cfg.inference = a.inference.apply(cfg.inference);
    if let Some(m) = a.inference.vague_mode {
        cfg.train.vague_exclusion = m == VagueMode::Exclude;
    }
    match a.post_filter {
        Some(PostFilterArg::Off) => cfg.post_filter = PostFilterMode::Off,
        Some(PostFilterArg::Tuned) => cfg.post_filter = PostFilterMode::Tuned,
        Some(PostFilterArg::Fixed) => cfg.post_filter = PostFilterMode::Fixed(cfg.inference.post_filter_tau),
        None => {}
    }
    let report = run_experiment(&cfg)?;
    print!("{}", report.to_table());
    write_json(&a.out, &report)?;
    run.finish(&cfg, None, &[&a.out], Some(&a.out), a.manifest.as_deref())
}
