//! Experiment layer: dataset ingestion, synthetic generation, declarative
//! configs and end-to-end runs with machine-readable outputs.

pub mod config;
pub mod dataset;
pub mod experiment;
pub mod sbm;

pub use config::{
    DatasetSpec, ExperimentConfig, ModelSpec, PartitionMethodSpec, PartitionSpec, ScheduleKindSpec,
    ScheduleSpec, TrainSpec, DEFAULT_SPECTRAL_NODE_CAP, SCHEMA_VERSION,
};
pub use dataset::{load_dataset, save_dataset, Dataset, DatasetFiles};
pub use experiment::{
    broadcast_from_config, build_dataset, build_partition, build_schedule, emit_metrics,
    evaluate_checkpoint, metrics_to_jsonl, run_experiment, run_single, write_artifacts,
    AggregateMetrics, BroadcastReport, MetricsReport, RunArtifacts, RunMetrics,
};
pub use sbm::{gen_sbm, SbmSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{message} at line {line}")]
    ParseFile { line: usize, message: String },
    #[error("{message}")]
    Validation { message: String },
    #[error("spectral partition refused: {nodes} nodes exceeds the dense-solver cap of {cap}")]
    SpectralCapExceeded { nodes: usize, cap: usize },
    #[error("metric '{name}' is not finite")]
    NonFiniteMetric { name: String },
    #[error("{context}: {source}")]
    Context {
        context: String,
        source: Box<HarnessError>,
    },
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Partition(#[from] crate::partition::PartitionError),
    #[error(transparent)]
    Schedule(#[from] crate::schedule::ScheduleError),
    #[error(transparent)]
    Broadcast(#[from] crate::broadcast::BroadcastError),
    #[error(transparent)]
    Gnn(#[from] crate::gnn::GnnError),
}

#[cfg(test)]
mod tests;
