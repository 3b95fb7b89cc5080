//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use irlsum_core::metrics::{components, COMPONENT_NAMES, NUM_COMPONENTS};
use irlsum_core::report::{self, SystemOutputs};
use irlsum_core::trainer::{self, Workspace};
use irlsum_core::{build_vocab, policy, ExamplePair, ReferenceStrategy, RewardWeights, SyntheticConfig, TrainConfig};
use rayon::prelude::*;

use crate::artifacts;
use crate::checkpoint::{load_with_vocab, save_vocab, Checkpoint, VOCAB_FILE};
use crate::config::{load_config, PRESETS};
use crate::error::{Error, Result};
use crate::fsutil::atomic_write;
use crate::jsonl::{load_jsonl, to_jsonl};
use crate::manifest::Manifest;

pub const CORPUS_FILE: &str = "corpus.jsonl";

#[derive(Debug, Parser)]
#[command(
    name = "irlsum",
    version,
    about = "Summarization with reward weights learned by inverse RL"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic JSONL corpus.
    GenData(GenDataArgs),
    /// Teacher-forcing pretraining; writes the MLE checkpoint and vocabulary.
    TrainMle(TrainArgs),
    /// Self-critical RL with a ROUGE-L reward, starting from an MLE checkpoint.
    TrainRl(TrainArgs),
    /// Alternating reward-weight and policy updates, starting from an MLE checkpoint.
    TrainIrl(TrainArgs),
    /// Decode with checkpoints and write component, n-gram and entity reports.
    Evaluate(EvaluateArgs),
    /// Re-render the weight chart from a trajectory CSV.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = "IRLSUM_OUT_DIR", default_value = "runs")]
    pub out: PathBuf,
}

fn parse_rate(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn parse_strategy(s: &str) -> std::result::Result<ReferenceStrategy, String> {
    s.parse().map_err(|e: irlsum_core::Error| e.to_string())
}

fn parse_preset(s: &str) -> std::result::Result<String, String> {
    match s {
        "desk" | "desk-scale" => Ok("desk-scale".into()),
        "paper" | "paper-scale" => Ok("paper-scale".into()),
        other => Err(format!(
            "unknown preset {other:?}; expected one of {}",
            PRESETS.join(", ")
        )),
    }
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub pairs: u64,
    /// lead-copy, paraphrase or mixed.
    #[arg(long, default_value = "lead-copy", value_parser = parse_strategy)]
    pub strategy: ReferenceStrategy,
    /// Fraction of reference tokens paraphrased, in [0, 1].
    #[arg(long, default_value_t = 0.3, value_parser = parse_rate)]
    pub paraphrase_rate: f64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_sentences: u64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_sentences: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON file of TrainConfig fields overriding the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "desk-scale", value_parser = parse_preset)]
    pub preset: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use only the first this-many training pairs.
    #[arg(long)]
    pub max_examples: Option<usize>,
    /// Worker threads for evaluation; training is sequential.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<TrainConfig> {
        let mut config = load_config(&self.preset, self.config.as_deref())?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(n) = self.max_examples {
            config.max_examples = Some(n);
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training corpus (JSONL).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Validation corpus for MLE checkpoint selection; defaults to the training corpus.
    #[arg(long)]
    pub validation: Option<PathBuf>,
    /// MLE checkpoint to start from (required by train-rl and train-irl).
    #[arg(long)]
    pub pretrained: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// A system to evaluate, as NAME=PATH to a checkpoint; repeatable.
    #[arg(long = "checkpoint", value_parser = parse_named_path)]
    pub checkpoints: Vec<(String, PathBuf)>,
    /// Trajectory CSV of an IRL run; adds the weight chart to the report.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Trajectory CSV written by train-irl.
    #[arg(long)]
    pub trajectory: PathBuf,
    /// System label used in output file names.
    #[arg(long, default_value = "irl")]
    pub system: String,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

fn parse_named_path(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), PathBuf::from(path))),
        _ => Err(format!("expected NAME=PATH, got {s:?}")),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(a) => gen_data(&a),
        Command::TrainMle(a) => train_mle(&a),
        Command::TrainRl(a) => train_from_pretrained(&a, Mode::Rl),
        Command::TrainIrl(a) => train_from_pretrained(&a, Mode::Irl),
        Command::Evaluate(a) => evaluate(&a),
        Command::Report(a) => report(&a),
    }
}

fn mean_reference_components(corpus: &[ExamplePair], novelty_order: usize) -> Result<[f64; NUM_COMPONENTS]> {
    let cfg = irlsum_core::MetricsConfig { novelty_order };
    let mut sum = [0.0; NUM_COMPONENTS];
    for p in corpus {
        let c = components(&p.reference, &p.article, &p.reference, &cfg)?;
        for (s, v) in sum.iter_mut().zip(c.to_array()) {
            *s += v;
        }
    }
    Ok(sum.map(|s| s / corpus.len() as f64))
}

fn gen_data(a: &GenDataArgs) -> Result<()> {
    let synth = SyntheticConfig {
        pairs: a.pairs as usize,
        min_sentences: a.min_sentences as usize,
        max_sentences: a.max_sentences as usize,
        strategy: a.strategy,
        paraphrase_rate: a.paraphrase_rate,
        seed: a.seed,
    };
    let corpus = irlsum_core::gen_synthetic(&synth)?;
    let path = a.out.out.join(CORPUS_FILE);
    atomic_write(&path, to_jsonl(&corpus).as_bytes())?;
    let mut manifest = Manifest::new(
        "gen-data",
        None,
        a.seed,
        serde_json::to_value(&synth).expect("config serializes"),
    );
    manifest.add_output(&path)?;
    manifest.write(&a.out.out)?;

    println!("wrote {} pairs to {}", corpus.len(), path.display());
    let means = mean_reference_components(&corpus, 2)?;
    for (name, v) in COMPONENT_NAMES.iter().zip(means) {
        println!("reference {name}: {v:.4}");
    }
    Ok(())
}

fn train_mle(a: &TrainArgs) -> Result<()> {
    let config = a.config.resolve()?;
    let corpus = load_jsonl(&a.corpus)?;
    let validation = match &a.validation {
        Some(p) => load_jsonl(p)?,
        None => Vec::new(),
    };
    let vocab = build_vocab(config.truncate(&corpus), config.max_vocab)?;
    let outcome = trainer::pretrain_mle(&corpus, &validation, &vocab, &config)?;
    eprintln!(
        "mle: best epoch {} of {}, final loss {:.4}",
        outcome.best_epoch,
        outcome.epoch_losses.len(),
        outcome.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );

    let out = &a.out.out;
    let vocab_path = out.join(VOCAB_FILE);
    save_vocab(&vocab_path, &vocab)?;
    let ckpt_path = out.join("mle.ckpt.json");
    Checkpoint::new(outcome.params, &vocab, None)?.save(&ckpt_path)?;

    let mut manifest = Manifest::new("train-mle", Some(&a.config.preset), config.seed, config_value(&config));
    manifest.add_input("corpus", &a.corpus)?;
    if let Some(p) = &a.validation {
        manifest.add_input("validation", p)?;
    }
    manifest.add_output(&vocab_path)?;
    manifest.add_output(&ckpt_path)?;
    manifest.write(out)?;
    println!("wrote {}", ckpt_path.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Rl,
    Irl,
}

fn train_from_pretrained(a: &TrainArgs, mode: Mode) -> Result<()> {
    let command = match mode {
        Mode::Rl => "train-rl",
        Mode::Irl => "train-irl",
    };
    let Some(pretrained) = &a.pretrained else {
        return Err(Error::Config(format!(
            "{command} requires --pretrained <MLE checkpoint>; run train-mle first"
        )));
    };
    let config = a.config.resolve()?;
    let corpus = load_jsonl(&a.corpus)?;
    let (init, vocab) = load_with_vocab(pretrained)?;
    let out = &a.out.out;
    let mut manifest = Manifest::new(command, Some(&a.config.preset), config.seed, config_value(&config));
    manifest.add_input("corpus", &a.corpus)?;
    manifest.add_input("pretrained", pretrained)?;

    let vocab_path = out.join(VOCAB_FILE);
    save_vocab(&vocab_path, &vocab)?;
    manifest.add_output(&vocab_path)?;
    let ckpt = match mode {
        Mode::Rl => {
            let params = trainer::train_rl(&init.params, &corpus, &vocab, &config)?;
            let path = out.join("rl.ckpt.json");
            Checkpoint::new(params, &vocab, None)?.save(&path)?;
            path
        }
        Mode::Irl => {
            let result = trainer::train_irl(&init.params, &RewardWeights::uniform(), &corpus, &vocab, &config)?;
            let path = out.join("irl.ckpt.json");
            Checkpoint::new(result.params, &vocab, Some(result.phi))?.save(&path)?;
            let (csv, svg) = artifacts::emit_weight_curves(&result.trajectory, out, "irl", config.seed)?;
            manifest.add_output(&csv)?;
            manifest.add_output(&svg)?;
            let phi = result.phi.phi;
            eprintln!(
                "irl: final weights rouge {:.4} nov {:.4} cov {:.4} comp {:.4}",
                phi[0], phi[1], phi[2], phi[3]
            );
            path
        }
    };
    manifest.add_output(&ckpt)?;
    manifest.write(out)?;
    println!("wrote {}", ckpt.display());
    Ok(())
}

fn config_value(config: &TrainConfig) -> serde_json::Value {
    serde_json::to_value(config).expect("config serializes")
}

/// Greedy decodes of every pair, in corpus order, across `workers` threads.
fn decode_all(
    params: &irlsum_core::PolicyParams,
    ws: &Workspace<'_>,
    max_len: usize,
    workers: usize,
) -> Result<Vec<Vec<String>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..ws.len())
            .into_par_iter()
            .map(|i| {
                let ids = policy::greedy(params, ws.article_ids(i), max_len)?;
                Ok(ws.vocab.decode(&ids)?.surface)
            })
            .collect::<std::result::Result<Vec<_>, irlsum_core::Error>>()
            .map_err(Error::from)
    })
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let config = a.config.resolve()?;
    let corpus = load_jsonl(&a.corpus)?;
    let corpus = config.truncate(&corpus);
    let out = &a.out.out;
    let seed = config.seed;
    let mut manifest = Manifest::new("evaluate", Some(&a.config.preset), seed, config_value(&config));
    manifest.add_input("corpus", &a.corpus)?;

    let mut systems: Vec<SystemOutputs> = vec![report::reference_system(corpus)];
    let mut cased: Vec<Vec<String>> = vec![corpus.iter().map(|p| p.raw_reference.clone()).collect()];
    for (name, path) in &a.checkpoints {
        let (ckpt, vocab) = load_with_vocab(path)?;
        manifest.add_input(&format!("checkpoint:{name}"), path)?;
        let ws = Workspace::new(corpus, &vocab)?;
        let summaries = decode_all(&ckpt.params, &ws, config.max_decode_len, a.config.workers as usize)?;
        cased.push(
            summaries
                .iter()
                .zip(corpus)
                .map(|(s, p)| report::restore_case(s, &p.raw_article))
                .collect(),
        );
        let out_pairs: Vec<ExamplePair> = summaries
            .iter()
            .zip(corpus)
            .zip(&cased[cased.len() - 1])
            .map(|((s, p), text)| ExamplePair {
                id: p.id.clone(),
                article: p.article.clone(),
                reference: s.clone(),
                raw_article: p.raw_article.clone(),
                raw_reference: text.clone(),
            })
            .collect();
        let path = out.join(format!("summaries-{name}-seed{seed}.jsonl"));
        atomic_write(&path, to_jsonl(&out_pairs).as_bytes())?;
        manifest.add_output(&path)?;
        systems.push((name.clone(), summaries));
    }

    let metrics = config.metrics();
    let table = report::component_table(&systems, corpus, &metrics)?;
    let mut profiles = Vec::new();
    let mut entities = Vec::new();
    let mut overlaps = Vec::new();
    for ((name, summaries), cased) in systems.iter().zip(&cased) {
        profiles.push((
            name.clone(),
            report::novel_ngram_profile(summaries, corpus, &[1, 2, 3, 4])?,
        ));
        entities.push((name.clone(), report::entity_stats(cased, corpus)?));
        overlaps.push(report::overlap_row(&(name.clone(), summaries.clone()), corpus)?);
    }
    let names: Vec<&str> = systems.iter().map(|s| s.0.as_str()).collect();
    let tag = format!("{}-seed{seed}", names.join("-"));
    let files = [
        (format!("components-{tag}.csv"), artifacts::component_table_csv(&table)),
        (format!("ngrams-{tag}.csv"), artifacts::ngram_profile_csv(&profiles)),
        (format!("entities-{tag}.csv"), artifacts::entity_stats_csv(&entities)),
        (format!("overlap-{tag}.csv"), artifacts::overlap_csv(&overlaps)),
    ];
    for (name, bytes) in &files {
        let path = out.join(name);
        atomic_write(&path, bytes)?;
        manifest.add_output(&path)?;
    }
    if let Some(traj) = &a.trajectory {
        manifest.add_input("trajectory", traj)?;
        let svg = render_trajectory(traj, "irl", seed, out)?;
        manifest.add_output(&svg)?;
    }
    manifest.write(out)?;

    println!("{:<8} {:>8} {:>8} {:>8} {:>8}", "system", "R-L", "Nov", "Cov", "Comp");
    for r in &table.rows {
        println!(
            "{:<8} {:>8.2} {:>8.2} {:>8.2} {:>8.2}",
            r.system, r.rouge_l, r.novelty, r.coverage, r.compression
        );
    }
    Ok(())
}

fn render_trajectory(path: &Path, system: &str, seed: u64, out: &Path) -> Result<PathBuf> {
    let bytes = std::fs::read(path).map_err(crate::error::io_err(path))?;
    let rows = artifacts::parse_trajectory_csv(&bytes, path)?;
    let svg = artifacts::weight_chart_svg(&rows, &format!("Reward weights, {system}, seed {seed}"))?;
    let (_, svg_path) = artifacts::weight_curve_paths(out, system, seed);
    atomic_write(&svg_path, svg.as_bytes())?;
    Ok(svg_path)
}

fn report(a: &ReportArgs) -> Result<()> {
    let svg = render_trajectory(&a.trajectory, &a.system, a.seed, &a.out.out)?;
    println!("wrote {}", svg.display());
    Ok(())
}
