//! End-to-end experiment execution: dataset -> partition -> schedule ->
//! training -> metrics and artifact emission. Multi-seed sweeps run
//! independent configurations on worker threads; results are collected and
//! written in seed order, so outputs are byte-identical at any thread count.

use std::path::Path;

use serde::Serialize;

use crate::broadcast::simulate_broadcast;
use crate::gnn::{self, ModelConfig, ModelParams, TrainConfig};
use crate::graph::Graph;
use crate::partition::{flood_fill_partition, partition_stats, spectral_partition, Partition};
use crate::rng::derive_seed;
use crate::schedule::{
    mst_schedule, partition_schedule, random_phase_schedule, sequential_schedule,
    synchronous_schedule, Schedule,
};

use super::config::{DatasetSpec, ExperimentConfig, PartitionMethodSpec, ScheduleKindSpec};
use super::dataset::{load_dataset, Dataset, DatasetFiles};
use super::sbm::gen_sbm;
use super::HarnessError;

pub fn build_dataset(cfg: &ExperimentConfig) -> Result<Dataset, HarnessError> {
    match &cfg.dataset {
        DatasetSpec::Files(files) => load_dataset(files),
        DatasetSpec::Sbm(spec) => Ok(gen_sbm(spec)),
        DatasetSpec::Graph { edges, undirected } => {
            let files = DatasetFiles {
                edges: edges.clone(),
                features: None,
                labels: None,
                train_mask: None,
                val_mask: None,
                test_mask: None,
                undirected: *undirected,
            };
            load_dataset(&files)
        }
    }
}

/// Builds the configured partition for one run. Flood fill seeds from the
/// train mask when present, otherwise from all nodes.
pub fn build_partition(
    cfg: &ExperimentConfig,
    dataset: &Dataset,
    run_seed: u64,
) -> Result<Partition, HarnessError> {
    let graph = &dataset.graph;
    match cfg.partition.method {
        PartitionMethodSpec::FloodFill => {
            let labeled: Vec<usize> = if dataset.train_mask.is_empty() {
                (0..graph.num_nodes()).collect()
            } else {
                dataset.train_mask.clone()
            };
            Ok(flood_fill_partition(
                graph,
                cfg.partition.k,
                &labeled,
                derive_seed(run_seed, "partition"),
            )?)
        }
        PartitionMethodSpec::Spectral => {
            if graph.num_nodes() > cfg.spectral_node_cap {
                return Err(HarnessError::SpectralCapExceeded {
                    nodes: graph.num_nodes(),
                    cap: cfg.spectral_node_cap,
                });
            }
            Ok(spectral_partition(
                graph,
                cfg.partition.k,
                derive_seed(run_seed, "partition"),
            )?)
        }
        PartitionMethodSpec::Manual => {
            let path = cfg.partition.file.as_ref().expect("validated");
            let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
                path: path.display().to_string(),
                source,
            })?;
            Ok(Partition::from_tsv(&text)?)
        }
    }
}

/// Builds the configured schedule. Partition kinds consume `partition`; the
/// intra step count defaults to the partition's max subgraph diameter.
pub fn build_schedule(
    cfg: &ExperimentConfig,
    graph: &Graph,
    partition: Option<&Partition>,
    run_seed: u64,
) -> Result<Schedule, HarnessError> {
    let spec = &cfg.schedule;
    Ok(match spec.kind {
        ScheduleKindSpec::Synchronous => synchronous_schedule(graph, spec.steps)?,
        ScheduleKindSpec::Partition => {
            let partition = partition.ok_or_else(|| HarnessError::Validation {
                message: "partition schedule requires a partition".into(),
            })?;
            let t_s = match spec.t_s {
                Some(t) => t,
                None => partition_stats(graph, partition)?
                    .max_subgraph_diameter
                    .max(1),
            };
            let t_c = spec.t_c.unwrap_or(1);
            partition_schedule(
                graph,
                partition,
                spec.steps,
                t_s,
                t_c,
                spec.drop_final_inter,
            )?
        }
        ScheduleKindSpec::Sequential => sequential_schedule(graph, spec.root)?.repeat(spec.steps),
        ScheduleKindSpec::Mst => mst_schedule(graph, spec.steps, derive_seed(run_seed, "mst"))?,
        ScheduleKindSpec::RandomPhase => {
            random_phase_schedule(graph, spec.steps, derive_seed(run_seed, "random-phase"))?
        }
    })
}

fn model_config(cfg: &ExperimentConfig, dataset: &Dataset) -> ModelConfig {
    ModelConfig {
        dim: cfg.model.dim,
        num_nodes: dataset.graph.num_nodes(),
        num_edge_types: dataset.graph.num_edge_types(),
        num_features: dataset.features.num_features,
        num_classes: dataset.num_classes,
        input_mode: cfg.model.input_mode,
        aggregation: cfg.model.aggregation,
        identity_messages: cfg.model.identity_messages,
        hidden_dim: cfg.model.hidden_dim,
        concat_input: cfg.model.concat_input,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub test_acc: f64,
    pub best_val_acc: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub final_train_loss: f64,
    pub schedule_phases: usize,
    pub schedule_messages: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AggregateMetrics {
    pub num_runs: usize,
    pub mean_test_acc: f64,
    pub std_test_acc: f64,
    pub mean_val_acc: f64,
    pub std_val_acc: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricsReport {
    pub runs: Vec<RunMetrics>,
    pub aggregate: Option<AggregateMetrics>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl MetricsReport {
    pub fn from_runs(runs: Vec<RunMetrics>) -> Self {
        let aggregate = if runs.len() > 1 {
            let (mean_test_acc, std_test_acc) =
                mean_std(&runs.iter().map(|r| r.test_acc).collect::<Vec<_>>());
            let (mean_val_acc, std_val_acc) =
                mean_std(&runs.iter().map(|r| r.best_val_acc).collect::<Vec<_>>());
            Some(AggregateMetrics {
                num_runs: runs.len(),
                mean_test_acc,
                std_test_acc,
                mean_val_acc,
                std_val_acc,
            })
        } else {
            None
        };
        MetricsReport { runs, aggregate }
    }
}

/// Full artifact set of one training run; all file contents are produced as
/// strings so callers control filesystem layout and write order.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub seed: u64,
    pub partition_tsv: Option<String>,
    pub partition_stats_json: Option<String>,
    pub schedule_dump: String,
    pub history_jsonl: String,
    pub embeddings_tsv: String,
    pub checkpoint: String,
    pub metrics: RunMetrics,
}

fn check_finite(name: &str, value: f64) -> Result<(), HarnessError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::NonFiniteMetric { name: name.into() })
    }
}

/// JSON-lines rendering of a metrics report: one line per run, then one
/// aggregate line when present. Non-finite values are refused.
pub fn metrics_to_jsonl(report: &MetricsReport) -> Result<String, HarnessError> {
    let mut out = String::new();
    for run in &report.runs {
        check_finite("test_acc", run.test_acc)?;
        check_finite("best_val_acc", run.best_val_acc)?;
        check_finite("final_train_loss", run.final_train_loss)?;
        out.push_str(&serde_json::to_string(run).expect("metrics serialize"));
        out.push('\n');
    }
    if let Some(agg) = &report.aggregate {
        check_finite("mean_test_acc", agg.mean_test_acc)?;
        check_finite("std_test_acc", agg.std_test_acc)?;
        out.push_str(&serde_json::to_string(agg).expect("metrics serialize"));
        out.push('\n');
    }
    Ok(out)
}

pub fn emit_metrics(report: &MetricsReport, path: &Path) -> Result<(), HarnessError> {
    let text = metrics_to_jsonl(report)?;
    std::fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn embeddings_tsv(states: &gnn::NodeStates) -> String {
    let mut out = String::new();
    for v in 0..states.num_nodes {
        out.push_str(&v.to_string());
        for x in states.row(v) {
            out.push_str(&format!("\t{x}"));
        }
        out.push('\n');
    }
    out
}

/// Trains one seed of the experiment and produces every artifact.
pub fn run_single(cfg: &ExperimentConfig, seed: u64) -> Result<RunArtifacts, HarnessError> {
    let dataset = build_dataset(cfg)?;
    if dataset.train_mask.is_empty() || dataset.val_mask.is_empty() {
        return Err(HarnessError::Validation {
            message: "training requires nonempty train and val masks".into(),
        });
    }

    let needs_partition = cfg.schedule.kind == ScheduleKindSpec::Partition;
    let partition = if needs_partition {
        Some(build_partition(cfg, &dataset, seed)?)
    } else {
        None
    };
    let schedule = build_schedule(cfg, &dataset.graph, partition.as_ref(), seed)?;

    let train_cfg = TrainConfig {
        learning_rate: cfg.train.learning_rate,
        max_epochs: cfg.train.max_epochs,
        early_stop_window: cfg.train.early_stop_window,
        clip_norm: cfg.train.clip_norm,
        weight_decay: cfg.train.weight_decay,
        seed,
    };
    let result = gnn::train(
        &dataset.graph,
        &schedule,
        &dataset.features,
        &dataset.labels,
        &dataset.train_mask,
        &dataset.val_mask,
        model_config(cfg, &dataset),
        &train_cfg,
    )?;

    let eval_mask = if dataset.test_mask.is_empty() {
        &dataset.val_mask
    } else {
        &dataset.test_mask
    };
    let probs = gnn::predict_probs(&dataset.graph, &schedule, &result.params, &dataset.features)?;
    let test_acc = gnn::evaluate_accuracy(&probs, dataset.num_classes, &dataset.labels, eval_mask)?;

    let final_states =
        gnn::final_states(&dataset.graph, &schedule, &result.params, &dataset.features)?;

    let mut history_jsonl = String::new();
    for row in &result.history {
        history_jsonl.push_str(&serde_json::to_string(row).expect("history serializes"));
        history_jsonl.push('\n');
    }

    let (partition_tsv, partition_stats_json) = match &partition {
        Some(p) => {
            let stats = partition_stats(&dataset.graph, p)?;
            (
                Some(p.to_tsv()),
                Some(serde_json::to_string_pretty(&stats).expect("stats serialize")),
            )
        }
        None => (None, None),
    };

    let metrics = RunMetrics {
        seed,
        test_acc,
        best_val_acc: result.best_val_acc,
        best_epoch: result.best_epoch,
        epochs_run: result.history.len(),
        final_train_loss: result.history.last().map_or(f64::NAN, |h| h.train_loss),
        schedule_phases: schedule.num_phases(),
        schedule_messages: schedule.message_count(),
    };

    Ok(RunArtifacts {
        seed,
        partition_tsv,
        partition_stats_json,
        schedule_dump: schedule.dump(),
        history_jsonl,
        embeddings_tsv: embeddings_tsv(&final_states),
        checkpoint: result.params.to_checkpoint(),
        metrics,
    })
}

/// Runs every seed of the sweep, distributing runs over `threads` workers.
/// Results are returned in seed order regardless of scheduling.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    threads: usize,
) -> Result<(Vec<RunArtifacts>, MetricsReport), HarnessError> {
    let seeds = cfg.run_seeds();
    let threads = threads.max(1).min(seeds.len().max(1));

    let mut slots: Vec<Option<Result<RunArtifacts, HarnessError>>> =
        (0..seeds.len()).map(|_| None).collect();
    if threads <= 1 {
        for (i, &seed) in seeds.iter().enumerate() {
            slots[i] = Some(run_single(cfg, seed));
        }
    } else {
        let jobs: Vec<(usize, u64)> = seeds.iter().copied().enumerate().collect();
        let chunks: Vec<Vec<(usize, u64)>> = (0..threads)
            .map(|t| {
                jobs.iter()
                    .filter(|(i, _)| i % threads == t)
                    .copied()
                    .collect()
            })
            .collect();
        let results: Vec<Vec<(usize, Result<RunArtifacts, HarnessError>)>> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = chunks
                    .into_iter()
                    .map(|chunk| {
                        scope.spawn(move || {
                            chunk
                                .into_iter()
                                .map(|(i, seed)| (i, run_single(cfg, seed)))
                                .collect::<Vec<_>>()
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("worker panicked"))
                    .collect()
            });
        for part in results {
            for (i, result) in part {
                slots[i] = Some(result);
            }
        }
    }

    let mut artifacts = Vec::with_capacity(seeds.len());
    for (slot, &seed) in slots.into_iter().zip(&seeds) {
        let run = slot
            .expect("every slot filled")
            .map_err(|e| HarnessError::Context {
                context: format!("run with seed {seed}"),
                source: Box::new(e),
            })?;
        artifacts.push(run);
    }
    let report = MetricsReport::from_runs(artifacts.iter().map(|a| a.metrics.clone()).collect());
    Ok((artifacts, report))
}

/// Writes run artifacts under `dir`. Multi-seed sweeps suffix per-run files
/// with `_seed<N>`; `metrics.jsonl` always aggregates the whole sweep.
pub fn write_artifacts(
    dir: &Path,
    artifacts: &[RunArtifacts],
    report: &MetricsReport,
) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let write = |name: String, text: &str| -> Result<(), HarnessError> {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })
    };
    let multi = artifacts.len() > 1;
    for run in artifacts {
        let suffix = if multi {
            format!("_seed{}", run.seed)
        } else {
            String::new()
        };
        if let Some(tsv) = &run.partition_tsv {
            write(format!("partition{suffix}.tsv"), tsv)?;
        }
        if let Some(stats) = &run.partition_stats_json {
            write(format!("partition_stats{suffix}.json"), stats)?;
        }
        write(format!("schedule{suffix}.txt"), &run.schedule_dump)?;
        write(format!("history{suffix}.jsonl"), &run.history_jsonl)?;
        write(format!("embeddings{suffix}.tsv"), &run.embeddings_tsv)?;
        write(format!("checkpoint{suffix}.txt"), &run.checkpoint)?;
    }
    emit_metrics(report, &dir.join("metrics.jsonl"))
}

/// Accuracy of a checkpoint on one dataset split.
pub fn evaluate_checkpoint(
    cfg: &ExperimentConfig,
    checkpoint_text: &str,
    split: &str,
) -> Result<f64, HarnessError> {
    let dataset = build_dataset(cfg)?;
    let params = ModelParams::from_checkpoint(checkpoint_text)?;
    let needs_partition = cfg.schedule.kind == ScheduleKindSpec::Partition;
    let partition = if needs_partition {
        Some(build_partition(cfg, &dataset, cfg.seed)?)
    } else {
        None
    };
    let schedule = build_schedule(cfg, &dataset.graph, partition.as_ref(), cfg.seed)?;
    let mask = match split {
        "train" => &dataset.train_mask,
        "val" => &dataset.val_mask,
        "test" => &dataset.test_mask,
        other => {
            return Err(HarnessError::Validation {
                message: format!("unknown split '{other}' (expected train|val|test)"),
            })
        }
    };
    let probs = gnn::predict_probs(&dataset.graph, &schedule, &params, &dataset.features)?;
    Ok(gnn::evaluate_accuracy(
        &probs,
        dataset.num_classes,
        &dataset.labels,
        mask,
    )?)
}

/// Single broadcast run on the configured graph and schedule.
#[derive(Clone, Debug, Serialize)]
pub struct BroadcastReport {
    pub kind: ScheduleKindSpec,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub phases: usize,
    pub messages: u64,
    /// Reachable-token saturation.
    pub solved: bool,
    /// Strict criterion: every node holds all N tokens.
    pub all_tokens: bool,
}

pub fn broadcast_from_config(
    cfg: &ExperimentConfig,
    stop_when_solved: bool,
) -> Result<BroadcastReport, HarnessError> {
    let dataset = build_dataset(cfg)?;
    let needs_partition = cfg.schedule.kind == ScheduleKindSpec::Partition;
    let partition = if needs_partition {
        Some(build_partition(cfg, &dataset, cfg.seed)?)
    } else {
        None
    };
    let schedule = build_schedule(cfg, &dataset.graph, partition.as_ref(), cfg.seed)?;
    let state = simulate_broadcast(&dataset.graph, &schedule, stop_when_solved)?;
    Ok(BroadcastReport {
        kind: cfg.schedule.kind,
        num_nodes: dataset.graph.num_nodes(),
        num_edges: dataset.graph.num_edges(),
        phases: state.phases_executed,
        messages: state.messages_sent,
        solved: state.solved,
        all_tokens: state.all_tokens,
    })
}
