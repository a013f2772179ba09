//! Declarative experiment configuration (JSON with a `schema_version`).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::gnn::{AggregationKind, InputMode};

use super::dataset::DatasetFiles;
use super::sbm::SbmSpec;
use super::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

/// Default cap on the dense spectral solve; requests beyond it are refused.
pub const DEFAULT_SPECTRAL_NODE_CAP: usize = 4096;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetSpec {
    /// Load from files on disk.
    Files(DatasetFiles),
    /// Generate a stochastic block model dataset.
    Sbm(SbmSpec),
    /// Bare graph from an edge list; no features, labels or masks.
    Graph {
        edges: PathBuf,
        #[serde(default)]
        undirected: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionMethodSpec {
    FloodFill,
    Spectral,
    Manual,
}

fn default_k() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub method: PartitionMethodSpec,
    #[serde(default = "default_k")]
    pub k: usize,
    /// Assignment file for the manual method.
    #[serde(default)]
    pub file: Option<PathBuf>,
}

impl Default for PartitionSpec {
    fn default() -> Self {
        PartitionSpec {
            method: PartitionMethodSpec::FloodFill,
            k: 1,
            file: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKindSpec {
    Synchronous,
    Partition,
    Sequential,
    Mst,
    RandomPhase,
}

impl std::str::FromStr for ScheduleKindSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "synchronous" | "sync" => Ok(Self::Synchronous),
            "partition" => Ok(Self::Partition),
            "sequential" => Ok(Self::Sequential),
            "mst" => Ok(Self::Mst),
            "random-phase" | "random" => Ok(Self::RandomPhase),
            other => Err(format!("unknown schedule kind '{other}'")),
        }
    }
}

fn default_steps() -> usize {
    3
}

/// Schedule construction parameters. `steps` is the per-kind propagation
/// step count: outer iterations for synchronous/partition, full rounds for
/// sequential, the tree count for mst, the chunk count for random-phase.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub kind: ScheduleKindSpec,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Intra-subgraph steps per outer iteration; defaults to the partition's
    /// max subgraph diameter.
    #[serde(default)]
    pub t_s: Option<usize>,
    /// Inter-subgraph steps per outer iteration.
    #[serde(default)]
    pub t_c: Option<usize>,
    #[serde(default)]
    pub drop_final_inter: bool,
    /// BFS root for the sequential schedule.
    #[serde(default)]
    pub root: usize,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec {
            kind: ScheduleKindSpec::Synchronous,
            steps: default_steps(),
            t_s: None,
            t_c: None,
            drop_final_inter: false,
            root: 0,
        }
    }
}

fn default_dim() -> usize {
    16
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_aggregation")]
    pub aggregation: AggregationKind,
    #[serde(default = "default_input_mode")]
    pub input_mode: InputMode,
    #[serde(default)]
    pub identity_messages: bool,
    #[serde(default)]
    pub hidden_dim: Option<usize>,
    #[serde(default)]
    pub concat_input: bool,
}

fn default_aggregation() -> AggregationKind {
    AggregationKind::Sum
}

fn default_input_mode() -> InputMode {
    InputMode::Feature
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            dim: default_dim(),
            aggregation: default_aggregation(),
            input_mode: default_input_mode(),
            identity_messages: false,
            hidden_dim: None,
            concat_input: false,
        }
    }
}

fn default_lr() -> f64 {
    0.01
}

fn default_max_epochs() -> usize {
    100
}

fn default_window() -> usize {
    10
}

fn default_clip() -> f64 {
    5.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainSpec {
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_window")]
    pub early_stop_window: usize,
    #[serde(default = "default_clip")]
    pub clip_norm: f64,
    #[serde(default)]
    pub weight_decay: f64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        TrainSpec {
            learning_rate: default_lr(),
            max_epochs: default_max_epochs(),
            early_stop_window: default_window(),
            clip_norm: default_clip(),
            weight_decay: 0.0,
        }
    }
}

fn default_spectral_cap() -> usize {
    DEFAULT_SPECTRAL_NODE_CAP
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub partition: PartitionSpec,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainSpec,
    /// Top-level seed; every component derives its own stream from it.
    #[serde(default)]
    pub seed: u64,
    /// Seeds for multi-seed sweeps; falls back to `[seed]` when empty.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "default_spectral_cap")]
    pub spectral_node_cap: usize,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::Validation {
                message: format!("bad config: {e}"),
            })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Validation {
                message: format!(
                    "config schema_version {} unsupported (expected {SCHEMA_VERSION})",
                    cfg.schema_version
                ),
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schedule.steps == 0 {
            return Err(HarnessError::Validation {
                message: "schedule.steps must be at least 1".into(),
            });
        }
        if self.partition.method == PartitionMethodSpec::Manual && self.partition.file.is_none() {
            return Err(HarnessError::Validation {
                message: "manual partition requires a partition file".into(),
            });
        }
        if let DatasetSpec::Files(files) = &self.dataset {
            for (name, path) in [
                ("edges", Some(&files.edges)),
                ("features", files.features.as_ref()),
                ("labels", files.labels.as_ref()),
                ("train_mask", files.train_mask.as_ref()),
                ("val_mask", files.val_mask.as_ref()),
                ("test_mask", files.test_mask.as_ref()),
            ] {
                if let Some(path) = path {
                    if !path.exists() {
                        return Err(HarnessError::Validation {
                            message: format!("{name} file {} does not exist", path.display()),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Seed list for a sweep, in run order.
    pub fn run_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        }
    }
}
