//! Command-line entry points.
//!
//! Settings resolve in three layers: built-in defaults, then a TOML config
//! file passed with `--config`, then explicit flags.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::data::{self, Fraction, LogFormat, PreprocessConfig, SynthConfig};
use crate::error::{Error, Result};
use crate::eval;
use crate::graph::{Direction, Event, SessionGraph};
use crate::model::{self, AttentionSign};
use crate::train::{self, Checkpoint, Retraction, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "tahgat", version, about = "Time-aware hyperbolic graph attention for session-based recommendation")]
pub struct Cli {
    /// TOML file with [train], [evaluate] and [preprocess] tables.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter and split a raw click log.
    Preprocess(PreprocessArgs),
    /// Generate a synthetic Markov-chain dataset.
    Synth(SynthArgs),
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on a test split.
    Evaluate(EvaluateArgs),
    /// Rank items for one live session.
    Recommend(RecommendArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub format: LogFormat,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub outdir: PathBuf,
    /// Keep the most recent 1/N of training sessions, e.g. 1/64.
    #[arg(long)]
    pub fraction: Option<Fraction>,
    /// `itemId;categoryId` table (Diginetica product-categories.csv).
    #[arg(long)]
    pub categories: Option<PathBuf>,
    #[arg(long)]
    pub min_session_len: Option<usize>,
    #[arg(long)]
    pub min_item_freq: Option<usize>,
    /// Test window in seconds; defaults to 1 day (7 days for diginetica).
    #[arg(long)]
    pub test_window: Option<i64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub items: usize,
    #[arg(long)]
    pub sessions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub interval_signal: bool,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long)]
    pub outdir: PathBuf,
}

#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    /// Directory with train.csv and vocab.csv.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lambda_s: Option<f64>,
    #[arg(long)]
    pub lambda_v: Option<f64>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub attention_sign: Option<AttentionSign>,
    #[arg(long)]
    pub direction: Option<Direction>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub cap: Option<f64>,
    /// Enables the one-negative hinge regularizer with this margin.
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub retraction: Option<Retraction>,
    /// Half-width of the uniform item-feature initialization.
    #[arg(long)]
    pub init_scale: Option<f64>,
    #[arg(long)]
    pub augment_prefixes: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub k: Option<usize>,
    /// CSV report destination.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also score the S-POP popularity baseline.
    #[arg(long)]
    pub baseline: bool,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Clicks as `item:timestamp` pairs, comma separated.
    #[arg(long)]
    pub session: String,
    /// Query time in epoch seconds; defaults to the last click.
    #[arg(long)]
    pub at_time: Option<i64>,
    #[arg(long)]
    pub k: Option<usize>,
    /// CSV destination for the ranked list.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    train: Option<TrainConfig>,
    evaluate: Option<EvaluateSection>,
    preprocess: Option<PreprocessSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateSection {
    k: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PreprocessSection {
    min_session_len: Option<usize>,
    min_item_freq: Option<usize>,
    test_window: Option<i64>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub const DEFAULT_K: usize = 20;

/// Resolves the training configuration: defaults, then file, then flags.
pub fn resolve_train_config(file: Option<TrainConfig>, args: &TrainArgs) -> TrainConfig {
    let mut c = file.unwrap_or_default();
    macro_rules! set {
        ($field:ident, $arg:expr) => {
            if let Some(v) = $arg {
                c.$field = v;
            }
        };
    }
    set!(dim, args.dim);
    set!(learning_rate, args.lr);
    set!(epochs, args.epochs);
    set!(batch_size, args.batch);
    set!(lambda_s, args.lambda_s);
    set!(lambda_v, args.lambda_v);
    set!(layers, args.layers);
    set!(attention_sign, args.attention_sign);
    set!(direction, args.direction);
    set!(seed, args.seed);
    set!(tau, args.tau);
    set!(cap, args.cap);
    set!(retraction, args.retraction);
    set!(init_scale, args.init_scale);
    if args.margin.is_some() {
        c.margin = args.margin;
    }
    if args.augment_prefixes {
        c.augment_prefixes = true;
    }
    c
}

/// Parses `item:timestamp,item:timestamp,...`.
pub fn parse_session_arg(s: &str) -> Result<Vec<Event>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|pair| {
            let (item, ts) = pair.split_once(':').ok_or_else(|| {
                Error::InvalidArgument(format!("expected item:timestamp, got {pair:?}"))
            })?;
            let item = item
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad item id {item:?}")))?;
            let ts = ts
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad timestamp {ts:?}")))?;
            Ok(Event::new(item, ts))
        })
        .collect()
}

/// Runs one parsed command, returning what should be printed to stdout.
pub fn run(cli: Cli) -> Result<String> {
    let file = load_file_config(cli.config.as_deref())?;
    match cli.command {
        Command::Preprocess(a) => preprocess(a, file.preprocess.unwrap_or_default()),
        Command::Synth(a) => synth(a),
        Command::Train(a) => {
            let cfg = resolve_train_config(file.train, &a);
            train_cmd(&a, cfg)
        }
        Command::Evaluate(a) => {
            let k = a.k.or(file.evaluate.and_then(|e| e.k)).unwrap_or(DEFAULT_K);
            evaluate_cmd(&a, k)
        }
        Command::Recommend(a) => {
            let k = a.k.or(file.evaluate.and_then(|e| e.k)).unwrap_or(DEFAULT_K);
            recommend_cmd(&a, k)
        }
    }
}

fn split_stats(split: &data::DatasetSplit) -> String {
    let clicks = split.num_clicks();
    let sessions = split.train.len() + split.test.len();
    format!(
        "items,train_sessions,test_sessions,avg_len,clicks\n{},{},{},{:.2},{}\n",
        split.vocab.len(),
        split.train.len(),
        split.test.len(),
        clicks as f64 / sessions as f64,
        clicks
    )
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn preprocess(a: PreprocessArgs, file: PreprocessSection) -> Result<String> {
    let defaults = PreprocessConfig::default();
    let cfg = PreprocessConfig {
        min_session_len: a
            .min_session_len
            .or(file.min_session_len)
            .unwrap_or(defaults.min_session_len),
        min_item_freq: a
            .min_item_freq
            .or(file.min_item_freq)
            .unwrap_or(defaults.min_item_freq),
        test_window: a
            .test_window
            .or(file.test_window)
            .unwrap_or(a.format.default_test_window()),
        fraction: a.fraction,
    };
    let mut log = data::parse_clicklog(&a.input, a.format)?;
    if let Some(path) = &a.categories {
        let cats = data::parse_categories(path)?;
        for e in &mut log.events {
            if e.category.is_none() {
                e.category = cats.get(&e.item_id).cloned();
            }
        }
    }
    let split = data::preprocess(&log.events, &cfg)?;
    data::write_split(&a.outdir, &split)?;
    let stats = split_stats(&split);
    write_text(&a.outdir.join("stats.csv"), &stats)?;
    let mut out = format!(
        "parsed {} events ({} malformed rows skipped)\n",
        log.events.len(),
        log.malformed
    );
    out.push_str(&stats);
    Ok(out)
}

fn synth(a: SynthArgs) -> Result<String> {
    let data = data::generate_synthetic(&SynthConfig {
        n_items: a.items,
        n_sessions: a.sessions,
        seed: a.seed,
        interval_signal: a.interval_signal,
    })?;
    let split = data::split_synthetic(&data.sessions, a.test_fraction)?;
    data::write_split(&a.outdir, &split)?;
    let mut matrix = String::from("from_item,to_item,probability\n");
    for (i, row) in data.transitions.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            let _ = writeln!(matrix, "{},{},{}", i + 1, j + 1, p);
        }
    }
    write_text(&a.outdir.join("transitions.csv"), &matrix)?;
    let stats = split_stats(&split);
    write_text(&a.outdir.join("stats.csv"), &stats)?;
    Ok(stats)
}

/// Path of the per-epoch trace written next to a checkpoint.
pub fn trace_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("trace.csv")
}

fn train_cmd(a: &TrainArgs, cfg: TrainConfig) -> Result<String> {
    cfg.validate()?;
    let split = data::read_split(&a.data)?;
    let fit = train::train_split(&split, &cfg)?;
    let mut trace = String::from("epoch,mean_loss,mean_item_distance,skipped_batches\n");
    let mut table = format!("{:>6} {:>14} {:>12}\n", "epoch", "loss", "item spread");
    for s in &fit.trace {
        let _ = writeln!(
            trace,
            "{},{},{},{}",
            s.epoch, s.mean_loss, s.mean_item_distance, s.skipped_batches
        );
        let _ = writeln!(
            table,
            "{:>6} {:>14.6} {:>12.4}",
            s.epoch, s.mean_loss, s.mean_item_distance
        );
    }
    Checkpoint::new(cfg, fit.params, fit.trace).save(&a.checkpoint)?;
    write_text(&trace_path(&a.checkpoint), &trace)?;
    table.push_str(&format!("checkpoint written to {}", a.checkpoint.display()));
    Ok(table)
}

fn evaluate_cmd(a: &EvaluateArgs, k: usize) -> Result<String> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let split = data::read_split(&a.data)?;
    let norm = ck.config.normalizer()?;
    let report = eval::evaluate(&ck.params, &norm, &split.test, k)?;
    if let Some(path) = &a.report {
        write_text(path, &report.to_csv())?;
    }
    let mut out = report.to_string();
    if a.baseline {
        let cases = eval::spop_rankings(&split.train, &split.test, k);
        if !cases.is_empty() {
            let _ = write!(
                out,
                "\nS-POP        MRR@{k} {:.4}  P@{k} {:.4}",
                eval::mrr_at_k(&cases, k)?,
                eval::p_at_k(&cases, k)?
            );
        }
    }
    Ok(out)
}

fn recommend_cmd(a: &RecommendArgs, k: usize) -> Result<String> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let events = parse_session_arg(&a.session)?;
    let norm = ck.config.normalizer()?;
    let graph = SessionGraph::from_events(&events, &norm)?;
    let at = a.at_time.unwrap_or(graph.last_timestamp);
    let interval = norm.normalize(at - graph.last_timestamp)?;
    let table = model::embedding_table(&ck.params);
    let list = model::recommend(&ck.params, &table, &graph, interval, k.min(table.len()))?;
    if let Some(path) = &a.output {
        let mut csv = String::from("rank,item_id,distance\n");
        for (r, (item, d)) in list.entries.iter().enumerate() {
            let _ = writeln!(csv, "{},{},{}", r + 1, item, d);
        }
        write_text(path, &csv)?;
    }
    let mut out = format!("{:>4} {:>12} {:>10}\n", "rank", "item", "distance");
    for (r, (item, d)) in list.entries.iter().enumerate() {
        let _ = writeln!(out, "{:>4} {:>12} {:>10.4}", r + 1, item, d);
    }
    Ok(out.trim_end().to_string())
}
