//! Model parameters: per-edge-type message transforms, GRU update weights,
//! input and output heads. Includes deterministic initialization, a flat
//! parameter view for the optimizer, and a text checkpoint format.

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::rng::Rng;

use super::{GnnError, SparseFeatures};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputMode {
    /// Learnable per-node embedding table; rows of nodes with observed
    /// features start from those observations.
    Embedding,
    /// Learned linear reduction of sparse feature rows.
    Feature,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationKind {
    Sum,
    Avg,
    Max,
}

/// Static shape and wiring of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub dim: usize,
    pub num_nodes: usize,
    pub num_edge_types: usize,
    pub num_features: usize,
    pub num_classes: usize,
    pub input_mode: InputMode,
    pub aggregation: AggregationKind,
    /// Message function: affine per edge type, or the identity.
    pub identity_messages: bool,
    /// Optional tanh hidden layer in the output head.
    pub hidden_dim: Option<usize>,
    /// Concatenate the initial node representation to the final state at
    /// readout.
    pub concat_input: bool,
}

#[derive(Clone, Debug)]
pub struct GruWeights {
    pub w_r: Matrix,
    pub u_r: Matrix,
    pub b_r: Vec<f64>,
    pub w_z: Matrix,
    pub u_z: Matrix,
    pub b_z: Vec<f64>,
    pub w_h: Matrix,
    pub u_h: Matrix,
    pub b_h: Vec<f64>,
}

#[derive(Clone, Debug)]
pub enum InputHead {
    Embedding(Matrix),
    Feature(Matrix),
}

#[derive(Clone, Debug)]
pub struct ModelParams {
    pub cfg: ModelConfig,
    pub message_mats: Vec<Matrix>,
    pub message_biases: Vec<Vec<f64>>,
    pub gru: GruWeights,
    pub input: InputHead,
    pub hidden: Option<(Matrix, Vec<f64>)>,
    pub logits: (Matrix, Vec<f64>),
}

impl ModelConfig {
    /// Width of the vector fed to the output head.
    pub fn readout_dim(&self) -> usize {
        if self.concat_input {
            2 * self.dim
        } else {
            self.dim
        }
    }
}

impl ModelParams {
    /// Deterministic initialization: weight matrices uniform in
    /// (-1/sqrt(d), 1/sqrt(d)), biases zero, embeddings uniform in
    /// (-0.1, 0.1). In embedding mode, rows of nodes with at least one
    /// observed feature are then overwritten with the first `dim` feature
    /// values (remaining positions keep the drawn init).
    pub fn init(
        cfg: ModelConfig,
        features: Option<&SparseFeatures>,
        rng: &mut Rng,
    ) -> Result<Self, GnnError> {
        let d = cfg.dim;
        let bound = 1.0 / (d as f64).sqrt();
        fn mat(rng: &mut Rng, bound: f64, rows: usize, cols: usize) -> Matrix {
            let mut m = Matrix::zeros(rows, cols);
            for v in m.data.iter_mut() {
                *v = rng.uniform(-bound, bound);
            }
            m
        }

        let (message_mats, message_biases) = if cfg.identity_messages {
            (Vec::new(), Vec::new())
        } else {
            let mats: Vec<Matrix> = (0..cfg.num_edge_types)
                .map(|_| mat(rng, bound, d, d))
                .collect();
            let biases = vec![vec![0.0; d]; cfg.num_edge_types];
            (mats, biases)
        };

        let gru = GruWeights {
            w_r: mat(rng, bound, d, d),
            u_r: mat(rng, bound, d, d),
            b_r: vec![0.0; d],
            w_z: mat(rng, bound, d, d),
            u_z: mat(rng, bound, d, d),
            b_z: vec![0.0; d],
            w_h: mat(rng, bound, d, d),
            u_h: mat(rng, bound, d, d),
            b_h: vec![0.0; d],
        };

        let input = match cfg.input_mode {
            InputMode::Feature => {
                if let Some(f) = features {
                    if f.num_features != cfg.num_features {
                        return Err(GnnError::DimensionMismatch {
                            what: format!(
                                "feature width {} does not match config {}",
                                f.num_features, cfg.num_features
                            ),
                        });
                    }
                }
                InputHead::Feature(mat(rng, bound, cfg.num_features, d))
            }
            InputMode::Embedding => {
                let mut table = Matrix::zeros(cfg.num_nodes, d);
                for v in table.data.iter_mut() {
                    *v = rng.uniform(-0.1, 0.1);
                }
                if let Some(f) = features {
                    for v in 0..cfg.num_nodes.min(f.rows.len()) {
                        if f.rows[v].is_empty() {
                            continue;
                        }
                        // Observed row: the dense first-d prefix of the
                        // observation, including its zeros.
                        for j in 0..d.min(f.num_features) {
                            table.set(v, j, 0.0);
                        }
                        for &(dim, value) in &f.rows[v] {
                            if dim < d {
                                table.set(v, dim, value);
                            }
                        }
                    }
                }
                InputHead::Embedding(table)
            }
        };

        let readout_in = cfg.readout_dim();
        let hidden = cfg
            .hidden_dim
            .map(|h| (mat(rng, bound, readout_in, h), vec![0.0; h]));
        let logits_in = cfg.hidden_dim.unwrap_or(readout_in);
        let logits = (
            mat(rng, bound, logits_in, cfg.num_classes),
            vec![0.0; cfg.num_classes],
        );

        Ok(ModelParams {
            cfg,
            message_mats,
            message_biases,
            gru,
            input,
            hidden,
            logits,
        })
    }

    /// Same shapes, all values zero. Used for gradient accumulators.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.for_each_tensor_mut(|_, _, data| data.iter_mut().for_each(|v| *v = 0.0));
        z
    }

    /// Visits every tensor in a fixed order: `(name, is_weight_matrix, data)`.
    /// The weight-matrix flag marks tensors subject to weight decay (biases
    /// and the embedding table are excluded).
    pub fn for_each_tensor_mut<F: FnMut(&str, bool, &mut [f64])>(&mut self, mut f: F) {
        for (c, m) in self.message_mats.iter_mut().enumerate() {
            f(&format!("message_mat_{c}"), true, &mut m.data);
        }
        for (c, b) in self.message_biases.iter_mut().enumerate() {
            f(&format!("message_bias_{c}"), false, b);
        }
        f("gru_w_r", true, &mut self.gru.w_r.data);
        f("gru_u_r", true, &mut self.gru.u_r.data);
        f("gru_b_r", false, &mut self.gru.b_r);
        f("gru_w_z", true, &mut self.gru.w_z.data);
        f("gru_u_z", true, &mut self.gru.u_z.data);
        f("gru_b_z", false, &mut self.gru.b_z);
        f("gru_w_h", true, &mut self.gru.w_h.data);
        f("gru_u_h", true, &mut self.gru.u_h.data);
        f("gru_b_h", false, &mut self.gru.b_h);
        match &mut self.input {
            InputHead::Embedding(e) => f("embedding", false, &mut e.data),
            InputHead::Feature(w) => f("input_weight", true, &mut w.data),
        }
        if let Some((w, b)) = &mut self.hidden {
            f("hidden_weight", true, &mut w.data);
            f("hidden_bias", false, b);
        }
        f("logits_weight", true, &mut self.logits.0.data);
        f("logits_bias", false, &mut self.logits.1);
    }

    pub fn for_each_tensor<F: FnMut(&str, bool, &[f64])>(&self, mut f: F) {
        // Reuses the mutable visitor on a clone-free path by matching the
        // same order explicitly.
        for (c, m) in self.message_mats.iter().enumerate() {
            f(&format!("message_mat_{c}"), true, &m.data);
        }
        for (c, b) in self.message_biases.iter().enumerate() {
            f(&format!("message_bias_{c}"), false, b);
        }
        f("gru_w_r", true, &self.gru.w_r.data);
        f("gru_u_r", true, &self.gru.u_r.data);
        f("gru_b_r", false, &self.gru.b_r);
        f("gru_w_z", true, &self.gru.w_z.data);
        f("gru_u_z", true, &self.gru.u_z.data);
        f("gru_b_z", false, &self.gru.b_z);
        f("gru_w_h", true, &self.gru.w_h.data);
        f("gru_u_h", true, &self.gru.u_h.data);
        f("gru_b_h", false, &self.gru.b_h);
        match &self.input {
            InputHead::Embedding(e) => f("embedding", false, &e.data),
            InputHead::Feature(w) => f("input_weight", true, &w.data),
        }
        if let Some((w, b)) = &self.hidden {
            f("hidden_weight", true, &w.data);
            f("hidden_bias", false, b);
        }
        f("logits_weight", true, &self.logits.0.data);
        f("logits_bias", false, &self.logits.1);
    }

    pub fn num_parameters(&self) -> usize {
        let mut n = 0;
        self.for_each_tensor(|_, _, data| n += data.len());
        n
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.num_parameters());
        self.for_each_tensor(|_, _, data| flat.extend_from_slice(data));
        flat
    }

    pub fn set_from_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        self.for_each_tensor_mut(|_, _, data| {
            data.copy_from_slice(&flat[offset..offset + data.len()]);
            offset += data.len();
        });
        debug_assert_eq!(offset, flat.len());
    }

    /// Mask over the flat layout: true where weight decay applies.
    pub fn weight_decay_mask(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.num_parameters());
        self.for_each_tensor(|_, is_weight, data| {
            mask.extend(std::iter::repeat_n(is_weight, data.len()));
        });
        mask
    }

    /// Sum of squared entries of the weight matrices (decay targets).
    pub fn weight_squared_norm(&self) -> f64 {
        let mut acc = 0.0;
        self.for_each_tensor(|_, is_weight, data| {
            if is_weight {
                acc += data.iter().map(|v| v * v).sum::<f64>();
            }
        });
        acc
    }

    /// Text checkpoint: a version line, the model config as JSON, then every
    /// tensor with a `tensor <name> <len>` shape header followed by its
    /// values, one per line, in full round-trip precision.
    pub fn to_checkpoint(&self) -> String {
        let mut out = String::from("graphprop-checkpoint v1\n");
        out.push_str(&serde_json::to_string(&self.cfg).expect("config serializes"));
        out.push('\n');
        self.for_each_tensor(|name, _, data| {
            out.push_str(&format!("tensor {name} {}\n", data.len()));
            for v in data {
                out.push_str(&format!("{v}\n"));
            }
        });
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self, GnnError> {
        let mut lines = text.lines();
        let magic = lines.next().unwrap_or_default();
        if magic != "graphprop-checkpoint v1" {
            return Err(GnnError::Checkpoint {
                message: format!("bad magic line '{magic}'"),
            });
        }
        let cfg_line = lines.next().ok_or_else(|| GnnError::Checkpoint {
            message: "missing config line".into(),
        })?;
        let cfg: ModelConfig =
            serde_json::from_str(cfg_line).map_err(|e| GnnError::Checkpoint {
                message: format!("bad config: {e}"),
            })?;
        let mut params = ModelParams::init(cfg, None, &mut Rng::from_seed(0))?;

        let mut tensors: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
        while let Some(header) = lines.next() {
            let mut it = header.split_whitespace();
            if it.next() != Some("tensor") {
                return Err(GnnError::Checkpoint {
                    message: format!("expected tensor header, got '{header}'"),
                });
            }
            let name = it.next().ok_or_else(|| GnnError::Checkpoint {
                message: "tensor header missing name".into(),
            })?;
            let len: usize =
                it.next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| GnnError::Checkpoint {
                        message: format!("tensor '{name}' has a bad length"),
                    })?;
            let mut data = Vec::with_capacity(len);
            for _ in 0..len {
                let line = lines.next().ok_or_else(|| GnnError::Checkpoint {
                    message: format!("tensor '{name}' truncated"),
                })?;
                data.push(
                    line.trim()
                        .parse::<f64>()
                        .map_err(|_| GnnError::Checkpoint {
                            message: format!("bad value '{line}' in tensor '{name}'"),
                        })?,
                );
            }
            tensors.insert(name.to_string(), data);
        }

        let mut missing = None;
        params.for_each_tensor_mut(|name, _, data| match tensors.get(name) {
            Some(values) if values.len() == data.len() => {
                data.copy_from_slice(values);
            }
            _ => missing = Some(name.to_string()),
        });
        if let Some(name) = missing {
            return Err(GnnError::Checkpoint {
                message: format!("tensor '{name}' missing or wrong size"),
            });
        }
        Ok(params)
    }
}
