//! `branchqa`: build and score ambiguity-aware multi-hop QA datasets.
//!
//! Each stage reads and writes files in the output directory, so stages
//! can be rerun, resumed and diffed independently. Exit status is 0 on
//! success, 1 when records were kept despite failed checks, and 2 on any
//! input or configuration error.

mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use branchqa_core::eval::{evaluate_dataset, render_report_table, AliasTable, BranchMatcher, Pooling, Prediction};
use branchqa_core::graph::KnowledgeGraph;
use branchqa_core::par::{Parallelism, WorkerPool};
use branchqa_core::qgen::{build_client, translate_dataset, LlmSelector, PromptKit, Throttled, TranslatePolicy};
use branchqa_core::synth::{
    compute_dataset_stats, render_stats_table, synthesize, EntitySelector, OracleGreedy, QARecord,
};

use config::{PipelineConfig, SelectorKind};

#[derive(Parser)]
#[command(name = "branchqa", version, about = "Synthesize and score ambiguity-aware multi-hop QA over a knowledge graph")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Pipeline config (TOML, or JSON by extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Graph directory; overrides the config's graph paths.
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 means one per logical core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Never call a model: template questions, vetting skipped.
    #[arg(long, global = true)]
    offline: bool,
    /// Drop records that fail or cannot complete vetting.
    #[arg(long, global = true)]
    strict_filter: bool,
    #[arg(long, global = true)]
    quota_ambiguous: Option<usize>,
    #[arg(long, global = true)]
    quota_nonambiguous: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate the graph, and print its size.
    Ingest,
    /// Sample and execute plans until the quotas are met.
    Synthesize,
    /// Turn plans into questions and vet them.
    Translate {
        /// Records to translate [default: <out>/records.jsonl].
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Summarize a dataset.
    Stats {
        /// Dataset to summarize [default: <out>/dataset.jsonl].
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Score predictions against a dataset.
    Evaluate {
        /// Gold dataset [default: <out>/dataset.jsonl].
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        predictions: PathBuf,
        /// Do not penalize predicted branches that match no gold branch.
        #[arg(long)]
        ignore_spurious_branches: bool,
        /// Average per-branch scores instead of pooling counts.
        #[arg(long)]
        macro_average: bool,
    },
}

enum Status {
    Done,
    /// Output written, but some records carry failure flags.
    Partial,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = cli.global.log_level.parse().unwrap_or(log::LevelFilter::Warn);
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<Status> {
    let config = PipelineConfig::resolve(&cli.global)?;
    let pool = WorkerPool::new(Parallelism::from_workers(config.workers));
    match cli.command {
        Command::Ingest => ingest(&config),
        Command::Synthesize => cmd_synthesize(&config, &pool),
        Command::Translate { input } => cmd_translate(&config, &pool, input),
        Command::Stats { input } => cmd_stats(&config, input),
        Command::Evaluate {
            dataset,
            predictions,
            ignore_spurious_branches,
            macro_average,
        } => {
            let mut config = config;
            config.evaluation.ignore_spurious_branches |= ignore_spurious_branches;
            if macro_average {
                config.evaluation.pooling = Pooling::Macro;
            }
            cmd_evaluate(&config, &pool, dataset, predictions)
        }
    }
}

fn load_graph(config: &PipelineConfig) -> Result<KnowledgeGraph> {
    let paths = config.graph_paths()?;
    KnowledgeGraph::load(&paths).context("graph does not load")
}

fn prompts(config: &PipelineConfig) -> Result<PromptKit> {
    Ok(match &config.prompts_dir {
        Some(dir) => PromptKit::with_overrides(dir)?,
        None => PromptKit::builtin(),
    })
}

fn ingest(config: &PipelineConfig) -> Result<Status> {
    let graph = load_graph(config)?;
    println!(
        "entities={} triples={} surfaces={}",
        graph.entity_count(),
        graph.triple_count(),
        graph.ambiguity().len()
    );
    Ok(Status::Done)
}

fn cmd_synthesize(config: &PipelineConfig, pool: &WorkerPool) -> Result<Status> {
    let graph = load_graph(config)?;
    let kit = prompts(config)?;
    let client: Option<Throttled> = match (config.selector, config.offline) {
        (SelectorKind::Llm, false) => Some(build_client(&config.client)?),
        _ => None,
    };
    let llm;
    let selector: &dyn EntitySelector = match &client {
        Some(c) => {
            llm = LlmSelector { client: c, kit: &kit };
            &llm
        }
        None => &OracleGreedy,
    };
    io::echo_config(config)?;
    let output = synthesize(&graph, &config.synthesis, &config.quotas, selector, pool, config.max_ordinals)?;
    let stats = compute_dataset_stats(&output.records)?;
    io::write_jsonl(&config.out_dir.join("records.jsonl"), &output.records)?;
    io::write_json(&config.out_dir.join("stats.json"), &stats)?;
    println!(
        "records={} ambiguous={} non_ambiguous={} plans_examined={}",
        output.records.len(),
        output.records.iter().filter(|r| r.is_ambiguous()).count(),
        output.records.iter().filter(|r| !r.is_ambiguous()).count(),
        output.ordinals
    );
    for (reason, n) in &output.rejections {
        log::info!("rejected {n}: {reason}");
    }
    if let Some(c) = &client {
        println!("model_calls={}", c.calls());
    }
    Ok(Status::Done)
}

fn cmd_translate(config: &PipelineConfig, pool: &WorkerPool, input: Option<PathBuf>) -> Result<Status> {
    let graph = load_graph(config)?;
    let input = input.unwrap_or_else(|| config.out_dir.join("records.jsonl"));
    let records: Vec<QARecord> = io::read_jsonl(&input)?;
    if records.is_empty() {
        bail!("{} holds no records", input.display());
    }
    let kit = prompts(config)?;
    let client = build_client(&config.client)?;
    let policy = TranslatePolicy {
        offline: config.offline,
        strict: config.strict_filter,
        retries: config.client.translation_retries,
    };
    // Client calls are bounded by the client's own limit; extra workers
    // would only wait on it.
    let report = translate_dataset(records, &graph, &client, &kit, policy, pool);
    io::echo_config(config)?;
    io::write_jsonl(&config.out_dir.join("dataset.jsonl"), &report.records)?;
    io::write_jsonl(&config.out_dir.join("dropped.jsonl"), &report.dropped)?;
    println!(
        "records={} dropped={} flagged={} model_calls={}",
        report.records.len(),
        report.dropped.len(),
        report.flagged(),
        client.calls()
    );
    Ok(if report.flagged() > 0 { Status::Partial } else { Status::Done })
}

fn cmd_stats(config: &PipelineConfig, input: Option<PathBuf>) -> Result<Status> {
    let input = input.unwrap_or_else(|| config.out_dir.join("dataset.jsonl"));
    let records: Vec<QARecord> = io::read_jsonl(&input)?;
    let stats = compute_dataset_stats(&records).with_context(|| format!("cannot summarize {}", input.display()))?;
    io::write_json(&config.out_dir.join("stats.json"), &stats)?;
    print!("{}", render_stats_table(&stats));
    Ok(Status::Done)
}

fn cmd_evaluate(
    config: &PipelineConfig,
    pool: &WorkerPool,
    dataset: Option<PathBuf>,
    predictions: PathBuf,
) -> Result<Status> {
    let dataset = dataset.unwrap_or_else(|| config.out_dir.join("dataset.jsonl"));
    let records: Vec<QARecord> = io::read_jsonl(&dataset)?;
    let preds: Vec<Prediction> = io::read_jsonl(&predictions)?;
    if records.is_empty() {
        bail!("{} holds no records", dataset.display());
    }
    if preds.is_empty() {
        bail!("{} holds no predictions", predictions.display());
    }
    let mut sorted: Vec<&QARecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let aliases = AliasTable::from_records(sorted);

    let kit = prompts(config)?;
    let client = match (config.evaluation.llm_matcher, config.offline) {
        (true, false) => Some(build_client(&config.client)?),
        _ => None,
    };
    let matcher = client.as_ref().map(|c| BranchMatcher { client: c, kit: &kit });
    let report = evaluate_dataset(
        &records,
        &preds,
        &aliases,
        matcher.as_ref(),
        config.evaluation.scoring(),
        pool,
    )?;
    io::echo_config(config)?;
    io::write_json(&config.out_dir.join("report.json"), &report)?;
    let table = render_report_table(&report);
    io::write_text(&config.out_dir.join("report.txt"), &table)?;
    print!("{table}");
    if !report.missing_predictions.is_empty() {
        log::warn!("{} questions had no prediction", report.missing_predictions.len());
    }
    Ok(Status::Done)
}
