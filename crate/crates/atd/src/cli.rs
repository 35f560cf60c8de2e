//! Command-line front end.
//!
//! Every run writes a manifest holding the fully resolved command (seed
//! included). `atd --manifest FILE` without a subcommand runs it again.

use std::collections::BTreeSet;
use std::hash::{BuildHasher, Hasher};
use std::path::{Path, PathBuf};

use atd_core::atd::{detect_all, DetectConfig};
use atd_core::eval::{self, PointEval};
use atd_core::ptm::{self, TrainOpts};
use atd_core::significance::BootstrapConfig;
use atd_core::synth::{self, SynthSpec};
use atd_core::{Corpus, Vocabulary};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::report::Report;

#[derive(Debug, Parser)]
#[command(name = "atd", version, about = "Parsimonious topic models and anomalous topic discovery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// Re-run the command recorded in this manifest.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Fit a topic model, choosing the number of topics by BIC.
    Train(TrainArgs),
    /// Discover anomalous topic clusters in a test batch.
    Detect(DetectArgs),
    /// Generate the synthetic benchmark.
    Synth(SynthArgs),
    /// Score a detection report against labels.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Common {
    /// Random seed; falls back to ATD_SEED, then to a fresh one.
    #[arg(long, env = "ATD_SEED")]
    pub seed: Option<u64>,
    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Exit with code 4 when a fit fails to converge.
    #[arg(long)]
    #[serde(default)]
    pub strict: bool,
    /// Where to write the manifest (default: next to the outputs).
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Largest number of topics tried.
    #[arg(long)]
    pub max_topics: usize,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = TrainOpts::default().tol)]
    pub tol: f64,
    #[arg(long, default_value_t = TrainOpts::default().max_iters)]
    pub max_iters: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DetectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub validation: PathBuf,
    /// Vocabulary, used to print salient terms.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Output directory for `report.json` and `report.txt`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = BootstrapConfig::default().b1)]
    pub b1: usize,
    #[arg(long, default_value_t = BootstrapConfig::default().b2)]
    pub b2: usize,
    #[arg(long, default_value_t = BootstrapConfig::default().tau)]
    pub tau: f64,
    #[arg(long, default_value_t = BootstrapConfig::default().alpha)]
    pub alpha: f64,
    #[arg(long, default_value_t = BootstrapConfig::default().theta_gate)]
    pub theta_gate: f64,
    #[arg(long, default_value_t = BootstrapConfig::default().min_cluster)]
    pub min_cluster: usize,
    /// Stop after this many clusters.
    #[arg(long)]
    pub max_clusters: Option<usize>,
    /// Stop growing a cluster at this many members.
    #[arg(long)]
    pub max_cluster_size: Option<usize>,
    /// Clusters smaller than this grow with the new topic's word switches
    /// frozen at their support.
    #[arg(long, default_value_t = DetectConfig::default().frozen_below)]
    pub frozen_below: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = SynthSpec::default().vocab_size)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = SynthSpec::default().normal_topics)]
    pub normal_topics: usize,
    #[arg(long, default_value_t = SynthSpec::default().anomalous_topics)]
    pub anomalous_topics: usize,
    #[arg(long, default_value_t = SynthSpec::default().salient_per_topic)]
    pub salient: usize,
    #[arg(long, default_value_t = SynthSpec::default().train_docs_per_topic)]
    pub train_docs: usize,
    #[arg(long, default_value_t = SynthSpec::default().validation_docs_per_topic)]
    pub validation_docs: usize,
    #[arg(long, default_value_t = SynthSpec::default().test_docs_per_topic)]
    pub test_docs: usize,
    /// Test documents per anomalous topic.
    #[arg(long, default_value_t = SynthSpec::default().anomalous_docs_per_topic)]
    pub anom_docs: usize,
    #[arg(long, default_value_t = SynthSpec::default().doc_length)]
    pub doc_length: usize,
    #[arg(long, default_value_t = SynthSpec::default().dominant_prop)]
    pub dominant_prop: f64,
    #[arg(long, default_value_t = SynthSpec::default().salient_boost)]
    pub salient_boost: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    /// Null log-likelihood per token.
    Lb,
    /// Distance to the K-th nearest training document.
    Nn,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// Detection report (`report.json`).
    #[arg(long)]
    pub report: PathBuf,
    /// Labels of the test documents, one per line.
    #[arg(long)]
    pub labels: PathBuf,
    /// Comma-separated anomalous labels.
    #[arg(long, value_delimiter = ',', required = true)]
    pub anomalous_labels: Vec<String>,
    /// Individual-document baseline compared at the detected set size.
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
    /// Neighbour count for the `nn` baseline.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Training corpus (`nn` baseline).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Test corpus (`nn` baseline).
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

/// What a run records about itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&io::read_text(path)?).map_err(|source| Error::Json { path: path.into(), source })
    }
}

/// Outcome of a successful run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    /// A fit did not converge.
    Unconverged,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Self::Train(a) => &a.common,
            Self::Detect(a) => &a.common,
            Self::Synth(a) => &a.common,
            Self::Eval(a) => &a.common,
        }
    }

    fn common_mut(&mut self) -> &mut Common {
        match self {
            Self::Train(a) => &mut a.common,
            Self::Detect(a) => &mut a.common,
            Self::Synth(a) => &mut a.common,
            Self::Eval(a) => &mut a.common,
        }
    }

    fn default_manifest(&self) -> PathBuf {
        match self {
            Self::Train(a) => {
                let mut p = a.out.clone().into_os_string();
                p.push(".manifest.json");
                p.into()
            }
            Self::Detect(a) => a.out.join("manifest.json"),
            Self::Synth(a) => a.out.join("manifest.json"),
            Self::Eval(a) => {
                let mut p = a.report.clone().into_os_string();
                p.push(".eval.manifest.json");
                p.into()
            }
        }
    }
}

fn fresh_seed() -> u64 {
    std::collections::hash_map::RandomState::new().build_hasher().finish()
}

/// Parses nothing; runs an already parsed command line. Returns the exit code.
pub fn run(cli: Cli) -> i32 {
    let command = match (cli.command, cli.manifest) {
        (Some(mut c), manifest) => {
            if c.common().manifest.is_none() {
                c.common_mut().manifest = manifest;
            }
            c
        }
        (None, Some(path)) => match Manifest::load(&path) {
            Ok(m) => m.command,
            Err(e) => {
                eprintln!("error: {e}");
                return e.exit_code();
            }
        },
        (None, None) => {
            eprintln!("error: a subcommand or --manifest is required");
            return 2;
        }
    };
    match execute(command) {
        Ok(Status::Done) => 0,
        Ok(Status::Unconverged) => 4,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Resolves the seed, writes the manifest and runs the command on a pool of
/// the requested size.
pub fn execute(mut command: Command) -> Result<Status> {
    let seed = *command.common_mut().seed.get_or_insert_with(fresh_seed);
    eprintln!("seed={seed}");
    let manifest_path = command.common().manifest.clone().unwrap_or_else(|| command.default_manifest());
    command.common_mut().manifest = None;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = command.common().workers {
        if w == 0 {
            return Err(Error::Usage("--workers must be positive".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::Usage(format!("cannot start workers: {e}")))?;
    let strict = command.common().strict;
    let manifest = Manifest { tool: "atd".into(), version: env!("CARGO_PKG_VERSION").into(), command: command.clone() };
    let converged = pool.install(|| match &command {
        Command::Train(a) => train(a, seed),
        Command::Detect(a) => detect(a, seed),
        Command::Synth(a) => synth_cmd(a, seed),
        Command::Eval(a) => eval_cmd(a),
    })?;
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    io::write_text(&manifest_path, &json)?;
    if !converged {
        eprintln!("warning: a fit did not converge");
        if strict {
            return Ok(Status::Unconverged);
        }
    }
    Ok(Status::Done)
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn train(a: &TrainArgs, seed: u64) -> Result<bool> {
    if a.max_topics == 0 {
        return Err(Error::Usage("--max-topics must be positive".into()));
    }
    let vocab = io::load_vocabulary(&a.vocab)?;
    let corpus = io::load_corpus(&a.corpus, vocab.len())?;
    let opts = TrainOpts { tol: a.tol, max_iters: a.max_iters, ..TrainOpts::default() };
    let search = ptm::select_order(&corpus, a.max_topics, seed, opts)?;
    for s in &search.steps {
        eprintln!("BIC m={} value={:.6} converged={}", s.topics, s.bic, s.converged);
    }
    eprintln!("selected m={}", search.model.n_topics());
    io::write_text(&a.out, &io::format_model(&search.model))?;
    Ok(search.all_converged())
}

fn load_batch(path: &Path, n: usize) -> Result<Corpus> {
    io::load_corpus(path, n).map_err(|e| match e {
        Error::Parse { path, line, msg } => Error::Parse { path, line, msg: format!("{msg} (model vocabulary)") },
        e => e,
    })
}

fn detect(a: &DetectArgs, seed: u64) -> Result<bool> {
    let model = io::load_model(&a.model)?;
    let n = model.vocab_size();
    let vocab: Option<Vocabulary> = a.vocab.as_deref().map(io::load_vocabulary).transpose()?;
    if let Some(v) = &vocab {
        if v.len() != n {
            return Err(Error::Data(format!("vocabulary has {} terms, model has {n}", v.len())));
        }
    }
    let test = load_batch(&a.test, n)?;
    let validation = load_batch(&a.validation, n)?;
    let cfg = DetectConfig {
        bootstrap: BootstrapConfig {
            b1: a.b1,
            b2: a.b2,
            tau: a.tau,
            alpha: a.alpha,
            theta_gate: a.theta_gate,
            min_cluster: a.min_cluster,
            seed,
        },
        max_clusters: a.max_clusters,
        max_cluster_size: a.max_cluster_size,
        frozen_below: a.frozen_below,
        ..DetectConfig::default()
    };
    cfg.bootstrap.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let detection = detect_all(&model, &test, &validation, cfg)?;
    for c in &detection.clusters {
        eprintln!(
            "cluster {} size={} score={:.6} p={:.6} significant={}",
            c.index + 1,
            c.members.len(),
            c.score,
            c.p_value,
            c.significant
        );
    }
    let report = Report::new(&detection, &test, vocab.as_ref());
    create_dir(&a.out)?;
    io::write_text(&a.out.join("report.json"), &report.to_json())?;
    io::write_text(&a.out.join("report.txt"), &report.to_text(20))?;
    Ok(detection.null.unconverged == 0)
}

fn synth_cmd(a: &SynthArgs, seed: u64) -> Result<bool> {
    let spec = SynthSpec {
        vocab_size: a.vocab_size,
        normal_topics: a.normal_topics,
        anomalous_topics: a.anomalous_topics,
        salient_per_topic: a.salient,
        train_docs_per_topic: a.train_docs,
        validation_docs_per_topic: a.validation_docs,
        test_docs_per_topic: a.test_docs,
        anomalous_docs_per_topic: a.anom_docs,
        doc_length: a.doc_length,
        dominant_prop: a.dominant_prop,
        salient_boost: a.salient_boost,
        seed,
    };
    spec.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let data = synth::generate(&spec)?;
    create_dir(&a.out)?;
    let vocab = Vocabulary::from_terms((0..spec.vocab_size).map(|i| format!("w{i}")))?;
    let labels: Vec<String> = data.truth.test_topics.iter().map(|&k| spec.label(k)).collect();
    io::write_text(&a.out.join("vocab.txt"), &io::format_vocabulary(&vocab))?;
    io::write_text(&a.out.join("train.txt"), &io::format_corpus(&data.train))?;
    io::write_text(&a.out.join("validation.txt"), &io::format_corpus(&data.validation))?;
    io::write_text(&a.out.join("test.txt"), &io::format_corpus(&data.test))?;
    io::write_text(&a.out.join("labels.txt"), &io::format_labels(&labels))?;
    io::write_text(&a.out.join("truth.txt"), &io::format_truth(&data.truth, |k| spec.label(k)))?;
    eprintln!(
        "wrote train={} validation={} test={} anomalous labels={}",
        data.train.len(),
        data.validation.len(),
        data.test.len(),
        spec.anomalous_labels().join(",")
    );
    Ok(true)
}

fn point_row(name: &str, n0: usize, e: &PointEval) -> String {
    format!("{name:<10} {n0:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4}", e.recall, e.precision, e.f1, e.auc)
}

fn eval_cmd(a: &EvalArgs) -> Result<bool> {
    let report = Report::load(&a.report)?;
    let labels = io::load_labels(&a.labels)?;
    if labels.len() != report.null.len() {
        return Err(Error::Data(format!(
            "{} labels for a test batch of {} documents",
            labels.len(),
            report.null.len()
        )));
    }
    let anomalous: BTreeSet<String> = a.anomalous_labels.iter().cloned().collect();
    let detected: Vec<_> = report.detected().collect();
    println!(
        "{:<8} {:>6} {:>6} {:>8} {:>8} {:>8} {:>8} {:>8} {:>9}",
        "cluster", "size", "label", "recall", "prec", "f1", "auc", "p", "salient"
    );
    let mut sums = [0.0; 4];
    for c in &detected {
        let e = eval::eval_cluster(&c.member_ids(), &labels, &anomalous)?;
        let label = e.majority.clone().unwrap_or_else(|| "-".into());
        let occurring = c.salient.iter().filter(|w| w.occurring).count();
        println!(
            "{:<8} {:>6} {label:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>9}",
            c.index + 1,
            c.members.len(),
            e.recall,
            e.precision,
            e.f1,
            e.auc,
            c.p_value,
            format!("{occurring}/{}", c.salient.len())
        );
        for (s, v) in sums.iter_mut().zip([e.recall, e.precision, e.f1, e.auc]) {
            *s += v;
        }
    }
    if !detected.is_empty() {
        let k = detected.len() as f64;
        println!(
            "{:<8} {:>6} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            "mean",
            "",
            "",
            sums[0] / k,
            sums[1] / k,
            sums[2] / k,
            sums[3] / k
        );
    }
    if let Some(baseline) = a.baseline {
        let ranked: Vec<usize> = detected.iter().flat_map(|c| c.member_ids()).collect();
        let n0 = ranked.len();
        let scores = match baseline {
            Baseline::Lb => {
                let l0: Vec<f64> = report.null.iter().map(|r| r.l0).collect();
                let docs = report
                    .null
                    .iter()
                    .map(|r| atd_core::Document::new(r.doc, [(0, r.len as u32)]))
                    .collect::<atd_core::Result<Vec<_>>>()?;
                eval::lb_scores(&l0, &Corpus::new(docs, 1)?)?
            }
            Baseline::Nn => {
                let (Some(train), Some(test)) = (&a.corpus, &a.test) else {
                    return Err(Error::Usage("the nn baseline needs --corpus and --test".into()));
                };
                let text = io::read_text(train)?;
                let n = corpus_width(&text).max(corpus_width(&io::read_text(test)?));
                let train = io::parse_corpus(&text, n, train)?;
                let test_c = io::load_corpus(test, n)?;
                if test_c.len() != labels.len() {
                    return Err(Error::Data(format!("{} labels for {} test documents", labels.len(), test_c.len())));
                }
                let p = eval::nn_pvalues(&train, &test_c, a.k)?;
                for (d, p) in p.iter().enumerate() {
                    println!("nn p {d} {p:.6}");
                }
                eval::nn_scores(&train, &test_c, a.k)?
            }
        };
        let name = match baseline {
            Baseline::Lb => "lb",
            Baseline::Nn => "nn",
        };
        println!("{:<10} {:>6} {:>8} {:>8} {:>8} {:>8}", "points", "n0", "recall", "prec", "f1", "auc");
        let base = eval::eval_points(&eval::topk_pointset(&scores, n0), &labels, &anomalous)?;
        println!("{}", point_row(name, n0, &base));
        let ours = eval::eval_points(&ranked, &labels, &anomalous)?;
        println!("{}", point_row("atd", n0, &ours));
    }
    Ok(true)
}

/// One past the largest word id in a corpus file, or 1 when it has none.
fn corpus_width(text: &str) -> usize {
    text.split_ascii_whitespace()
        .filter_map(|t| t.split_once(':'))
        .filter_map(|(w, _)| w.parse::<usize>().ok())
        .max()
        .map_or(1, |m| m + 1)
}
