//! graphprop command line: partition graphs, build propagation schedules,
//! run broadcast analyses and train schedule-driven GNNs from declarative
//! JSON configs. Outputs are byte-deterministic in (config, seed), at any
//! thread count.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use graphprop::broadcast::{broadcast_sweep, SweepFamily, SweepSpec};
use graphprop::harness::{
    broadcast_from_config, build_dataset, build_partition, build_schedule, run_experiment,
    write_artifacts, ExperimentConfig, ScheduleKindSpec,
};
use graphprop::partition::partition_stats;
use graphprop::schedule::ScheduleKind as SweepKind;

#[derive(Parser)]
#[command(name = "graphprop", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's top-level seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the partition subgraph count.
    #[arg(long)]
    k: Option<usize>,
    /// Override the schedule kind
    /// (synchronous|partition|sequential|mst|random-phase).
    #[arg(long)]
    schedule: Option<String>,
    /// Output directory (or file, where noted). Prints to stdout if omitted
    /// and the subcommand produces a single artifact.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a node-to-subgraph partition and its stats.
    Partition(Common),
    /// Construct a propagation schedule and dump its phases.
    Schedule(Common),
    /// Run the broadcast simulator on the configured graph and schedule, or
    /// sweep synthetic families with --families.
    Broadcast {
        #[command(flatten)]
        common: Common,
        /// Sweep mode: comma-separated graph families
        /// (chain,cycle,grid,sbm).
        #[arg(long, value_delimiter = ',')]
        families: Vec<String>,
        /// Sweep sizes (node counts).
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        /// Sweep schedule kinds.
        #[arg(long, value_delimiter = ',')]
        kinds: Vec<String>,
        /// Stop as soon as the broadcast problem is solved.
        #[arg(long, default_value_t = true)]
        stop_when_solved: bool,
    },
    /// Train under the configured schedule and emit metrics and artifacts.
    Train {
        #[command(flatten)]
        common: Common,
        /// Worker threads for multi-seed configs.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Evaluate a checkpoint on one dataset split.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Split to evaluate: train|val|test.
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Multi-seed experiment sweep with mean/std aggregation.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated seeds; overrides the config's seed list.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&common.config)
        .with_context(|| format!("reading config {}", common.config.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
        cfg.seeds.clear();
    }
    if let Some(k) = common.k {
        cfg.partition.k = k;
    }
    if let Some(kind) = &common.schedule {
        cfg.schedule.kind = kind
            .parse::<ScheduleKindSpec>()
            .map_err(anyhow::Error::msg)?;
    }
    Ok(cfg)
}

fn write_or_print(out: &Option<PathBuf>, name: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            println!("{}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_partition(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let dataset = build_dataset(&cfg)?;
    let partition = build_partition(&cfg, &dataset, cfg.seed)?;
    let stats = partition_stats(&dataset.graph, &partition)?;
    write_or_print(&common.out, "partition.tsv", &partition.to_tsv())?;
    let stats_json = serde_json::to_string_pretty(&stats)?;
    write_or_print(
        &common.out,
        "partition_stats.json",
        &format!("{stats_json}\n"),
    )?;
    Ok(())
}

fn cmd_schedule(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let dataset = build_dataset(&cfg)?;
    let partition = if cfg.schedule.kind == ScheduleKindSpec::Partition {
        Some(build_partition(&cfg, &dataset, cfg.seed)?)
    } else {
        None
    };
    let schedule = build_schedule(&cfg, &dataset.graph, partition.as_ref(), cfg.seed)?;
    write_or_print(&common.out, "schedule.txt", &schedule.dump())?;
    Ok(())
}

fn parse_sweep_kind(s: &str) -> Result<SweepKind> {
    Ok(match s {
        "synchronous" | "sync" => SweepKind::Synchronous,
        "partition" => SweepKind::Partition,
        "sequential" => SweepKind::Sequential,
        "mst" => SweepKind::Mst,
        "random-phase" | "random" => SweepKind::RandomPhase,
        other => anyhow::bail!("unknown schedule kind '{other}'"),
    })
}

fn cmd_broadcast(
    common: &Common,
    families: &[String],
    sizes: &[usize],
    kinds: &[String],
    stop_when_solved: bool,
) -> Result<()> {
    let cfg = load_config(common)?;
    if families.is_empty() {
        let report = broadcast_from_config(&cfg, stop_when_solved)?;
        let line = serde_json::to_string(&report)?;
        write_or_print(&common.out, "broadcast.jsonl", &format!("{line}\n"))?;
        return Ok(());
    }
    anyhow::ensure!(!sizes.is_empty(), "--families requires --sizes");
    anyhow::ensure!(!kinds.is_empty(), "--families requires --kinds");
    let spec = SweepSpec {
        families: families
            .iter()
            .map(|f| f.parse::<SweepFamily>().map_err(anyhow::Error::msg))
            .collect::<Result<_>>()?,
        sizes: sizes.to_vec(),
        kinds: kinds
            .iter()
            .map(|k| parse_sweep_kind(k))
            .collect::<Result<_>>()?,
        k: cfg.partition.k,
        sbm_p_in: 0.5,
        sbm_p_out: 0.05,
        seed: cfg.seed,
    };
    let rows = broadcast_sweep(&spec)?;
    let mut text = String::new();
    for row in rows {
        text.push_str(&serde_json::to_string(&row)?);
        text.push('\n');
    }
    write_or_print(&common.out, "broadcast_sweep.jsonl", &text)?;
    Ok(())
}

fn cmd_train(common: &Common, threads: usize) -> Result<()> {
    let cfg = load_config(common)?;
    let (artifacts, report) = run_experiment(&cfg, threads)?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("graphprop-out"));
    write_artifacts(Path::new(&out), &artifacts, &report)?;
    for run in &artifacts {
        println!("{}", serde_json::to_string(&run.metrics)?);
    }
    if let Some(agg) = &report.aggregate {
        println!("{}", serde_json::to_string(agg)?);
    }
    Ok(())
}

fn cmd_eval(common: &Common, checkpoint: &Path, split: &str) -> Result<()> {
    let cfg = load_config(common)?;
    let text = std::fs::read_to_string(checkpoint)
        .with_context(|| format!("reading checkpoint {}", checkpoint.display()))?;
    let acc = graphprop::harness::evaluate_checkpoint(&cfg, &text, split)?;
    println!("{}", serde_json::json!({ "split": split, "accuracy": acc }));
    Ok(())
}

fn cmd_sweep(common: &Common, seeds: &[u64], threads: usize) -> Result<()> {
    let mut cfg = load_config(common)?;
    if !seeds.is_empty() {
        cfg.seeds = seeds.to_vec();
    }
    let (artifacts, report) = run_experiment(&cfg, threads)?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("graphprop-out"));
    write_artifacts(Path::new(&out), &artifacts, &report)?;
    if let Some(agg) = &report.aggregate {
        println!("{}", serde_json::to_string(agg)?);
    } else if let Some(run) = artifacts.first() {
        println!("{}", serde_json::to_string(&run.metrics)?);
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Partition(common) => cmd_partition(common),
        Command::Schedule(common) => cmd_schedule(common),
        Command::Broadcast {
            common,
            families,
            sizes,
            kinds,
            stop_when_solved,
        } => cmd_broadcast(common, families, sizes, kinds, *stop_when_solved),
        Command::Train { common, threads } => cmd_train(common, *threads),
        Command::Eval {
            common,
            checkpoint,
            split,
        } => cmd_eval(common, checkpoint, split),
        Command::Sweep {
            common,
            seeds,
            threads,
        } => cmd_sweep(common, seeds, *threads),
    }
}
