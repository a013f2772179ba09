//! Full-batch training with Adam, global gradient-norm clipping and
//! early stopping on validation accuracy.

use serde::Serialize;

use crate::graph::{Graph, NodeId};
use crate::rng::Rng;
use crate::schedule::Schedule;

use super::backward::loss_and_gradients;
use super::params::{ModelConfig, ModelParams};
use super::{init_states, propagate, GnnError, SparseFeatures};

/// Inputs for one loss evaluation: features, labels and the node mask the
/// loss is averaged over.
#[derive(Clone, Copy, Debug)]
pub struct Batch<'a> {
    pub features: &'a SparseFeatures,
    pub labels: &'a [Option<usize>],
    pub mask: &'a [NodeId],
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Early stopping: halt after this many consecutive epochs without a
    /// validation-accuracy improvement.
    pub early_stop_window: usize,
    /// Global gradient-norm clip threshold.
    pub clip_norm: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            max_epochs: 100,
            early_stop_window: 10,
            clip_norm: 5.0,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
}

#[derive(Clone, Debug)]
pub struct TrainResult {
    /// Parameters at the best validation accuracy.
    pub params: ModelParams,
    pub history: Vec<EpochStats>,
    pub best_val_acc: f64,
    pub best_epoch: usize,
}

/// Fraction of `split` nodes whose argmax probability matches the label.
/// Argmax ties break toward the lowest class index.
pub fn evaluate_accuracy(
    probs: &[f64],
    num_classes: usize,
    labels: &[Option<usize>],
    split: &[NodeId],
) -> Result<f64, GnnError> {
    if split.is_empty() {
        return Err(GnnError::EmptyMask);
    }
    let mut correct = 0usize;
    for &v in split {
        let label = labels[v].ok_or(GnnError::MissingLabel { node: v })?;
        let row = &probs[v * num_classes..(v + 1) * num_classes];
        let mut best = 0;
        for (c, &p) in row.iter().enumerate() {
            if p > row[best] {
                best = c;
            }
        }
        if best == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / split.len() as f64)
}

/// Fraction of positive instances ranked within the top `k` by score. Score
/// ties break toward the lower index, keeping the metric deterministic.
pub fn recall_at_k(scores: &[f64], positive: &[bool], k: usize) -> Result<f64, GnnError> {
    if k > scores.len() {
        return Err(GnnError::KTooLarge { k, n: scores.len() });
    }
    let total_positives = positive.iter().filter(|&&p| p).count();
    if total_positives == 0 {
        return Ok(0.0);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let hits = order[..k].iter().filter(|&&i| positive[i]).count();
    Ok(hits as f64 / total_positives as f64)
}

/// Forward pass producing per-node class probabilities under `params`.
pub fn predict_probs(
    graph: &Graph,
    schedule: &Schedule,
    params: &ModelParams,
    features: &SparseFeatures,
) -> Result<Vec<f64>, GnnError> {
    let initial = init_states(params, features)?;
    let final_states = propagate(graph, schedule, &initial, params)?;
    let classes = params.cfg.num_classes;
    let mut probs = vec![0.0; graph.num_nodes() * classes];
    for v in 0..graph.num_nodes() {
        let (_, _, logits) = super::head_forward(params, final_states.row(v), initial.row(v));
        probs[v * classes..(v + 1) * classes].copy_from_slice(&super::softmax(&logits));
    }
    Ok(probs)
}

/// Final node states under `params`, for embedding dumps.
pub fn final_states(
    graph: &Graph,
    schedule: &Schedule,
    params: &ModelParams,
    features: &SparseFeatures,
) -> Result<super::NodeStates, GnnError> {
    let initial = init_states(params, features)?;
    propagate(graph, schedule, &initial, params)
}

pub(super) struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

#[cfg(test)]
pub(super) fn test_adam(len: usize, lr: f64) -> Adam {
    Adam::new(len, lr)
}

impl Adam {
    fn new(len: usize, lr: f64) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub(super) fn step(&mut self, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..theta.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            theta[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

fn clip_global_norm(grad: &mut [f64], clip: f64) {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > clip && norm > 0.0 {
        let scale = clip / norm;
        for g in grad.iter_mut() {
            *g *= scale;
        }
    }
}

/// Full-batch Adam training. Each epoch runs one forward/backward pass: the
/// training loss and the validation accuracy are recorded for the parameters
/// at the start of the epoch, then one clipped Adam step is applied.
/// Training stops after `early_stop_window` epochs without validation
/// improvement (strict) or at `max_epochs`; the returned parameters are the
/// best-validation snapshot.
#[allow(clippy::too_many_arguments)]
pub fn train(
    graph: &Graph,
    schedule: &Schedule,
    features: &SparseFeatures,
    labels: &[Option<usize>],
    train_mask: &[NodeId],
    val_mask: &[NodeId],
    model_cfg: ModelConfig,
    cfg: &TrainConfig,
) -> Result<TrainResult, GnnError> {
    let mut init_rng = Rng::derive(cfg.seed, "param-init");
    let mut params = ModelParams::init(model_cfg, Some(features), &mut init_rng)?;
    let mut adam = Adam::new(params.num_parameters(), cfg.learning_rate);

    let batch = Batch {
        features,
        labels,
        mask: train_mask,
    };

    let mut history = Vec::new();
    let mut best_params = params.clone();
    let mut best_val_acc = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0usize;

    for epoch in 1..=cfg.max_epochs {
        let (loss, grads, probs) =
            loss_and_gradients(graph, schedule, &batch, &params, cfg.weight_decay)?;
        if !loss.is_finite() {
            return Err(GnnError::Divergence { epoch });
        }
        let val_acc = evaluate_accuracy(&probs, params.cfg.num_classes, labels, val_mask)?;
        history.push(EpochStats {
            epoch,
            train_loss: loss,
            val_acc,
        });

        if val_acc > best_val_acc {
            best_val_acc = val_acc;
            best_params = params.clone();
            best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.early_stop_window {
                break;
            }
        }

        let mut grad_flat = grads.to_flat();
        clip_global_norm(&mut grad_flat, cfg.clip_norm);
        let mut theta = params.to_flat();
        adam.step(&mut theta, &grad_flat);
        params.set_from_flat(&theta);
    }

    Ok(TrainResult {
        params: best_params,
        history,
        best_val_acc,
        best_epoch,
    })
}
