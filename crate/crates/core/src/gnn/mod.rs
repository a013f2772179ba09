//! From-scratch graph neural network executed under an arbitrary schedule.
//!
//! Per phase: every active edge transforms its source state through the
//! edge-type message function, destinations aggregate incoming messages in
//! ascending edge-id order, and only nodes that received at least one message
//! update their state through a shared GRU. Messages always read pre-phase
//! states (barrier semantics). The reference arithmetic is `f64` end to end,
//! with one fixed reduction order, so runs are exactly reproducible.

mod backward;
mod params;
mod train;

pub use backward::{backward, loss_and_gradients};
pub use params::{AggregationKind, GruWeights, InputHead, InputMode, ModelConfig, ModelParams};
pub use train::{
    evaluate_accuracy, final_states, predict_probs, recall_at_k, train, Batch, EpochStats,
    TrainConfig, TrainResult,
};

use thiserror::Error;

use crate::graph::{Graph, NodeId};
use crate::schedule::{Schedule, ScheduleError};

#[derive(Debug, Error)]
pub enum GnnError {
    #[error("non-finite state detected in phase {phase}")]
    NonFinite { phase: usize },
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("mask is empty")]
    EmptyMask,
    #[error("dimension mismatch: {what}")]
    DimensionMismatch { what: String },
    #[error("k = {k} exceeds the number of ranked instances ({n})")]
    KTooLarge { k: usize, n: usize },
    #[error("node {node} has no label but is in a mask")]
    MissingLabel { node: usize },
    #[error("bad checkpoint: {message}")]
    Checkpoint { message: String },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Sparse per-node feature rows; each row holds `(dim, value)` pairs sorted
/// by dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseFeatures {
    pub num_nodes: usize,
    pub num_features: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseFeatures {
    pub fn empty(num_nodes: usize, num_features: usize) -> Self {
        SparseFeatures {
            num_nodes,
            num_features,
            rows: vec![Vec::new(); num_nodes],
        }
    }

    pub fn from_dense(rows: Vec<Vec<f64>>) -> Self {
        let num_nodes = rows.len();
        let num_features = rows.first().map_or(0, Vec::len);
        let rows = rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .enumerate()
                    .filter(|&(_, v)| v != 0.0)
                    .collect()
            })
            .collect();
        SparseFeatures {
            num_nodes,
            num_features,
            rows,
        }
    }

    /// Dense copy of one row.
    pub fn dense_row(&self, v: NodeId) -> Vec<f64> {
        let mut row = vec![0.0; self.num_features];
        for &(dim, value) in &self.rows[v] {
            row[dim] = value;
        }
        row
    }
}

/// Node state matrix `H` (row v = state of node v) plus the phase counter.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeStates {
    pub num_nodes: usize,
    pub dim: usize,
    /// Row-major `num_nodes x dim`.
    pub h: Vec<f64>,
    pub step: usize,
}

impl NodeStates {
    pub fn new(num_nodes: usize, dim: usize) -> Self {
        NodeStates {
            num_nodes,
            dim,
            h: vec![0.0; num_nodes * dim],
            step: 0,
        }
    }

    pub fn row(&self, v: NodeId) -> &[f64] {
        &self.h[v * self.dim..(v + 1) * self.dim]
    }

    pub fn row_mut(&mut self, v: NodeId) -> &mut [f64] {
        &mut self.h[v * self.dim..(v + 1) * self.dim]
    }
}

/// Initial states: the embedding table in embedding mode, or the learned
/// reduction `X W_in` of the sparse feature rows in feature mode.
pub fn init_states(
    params: &ModelParams,
    features: &SparseFeatures,
) -> Result<NodeStates, GnnError> {
    let d = params.cfg.dim;
    let n = params.cfg.num_nodes;
    if features.num_nodes != n {
        return Err(GnnError::DimensionMismatch {
            what: format!("features cover {} nodes, model has {n}", features.num_nodes),
        });
    }
    let mut states = NodeStates::new(n, d);
    match &params.input {
        InputHead::Embedding(table) => {
            states.h.copy_from_slice(&table.data);
        }
        InputHead::Feature(w_in) => {
            if features.num_features != w_in.rows {
                return Err(GnnError::DimensionMismatch {
                    what: format!(
                        "feature width {} does not match input head {}",
                        features.num_features, w_in.rows
                    ),
                });
            }
            for v in 0..n {
                let row = states.row_mut(v);
                for &(dim, value) in &features.rows[v] {
                    let w_row = w_in.row(dim);
                    for j in 0..d {
                        row[j] += value * w_row[j];
                    }
                }
            }
        }
    }
    Ok(states)
}

/// Message for one edge: the edge-type affine transform of the source state,
/// or the state itself under identity messages.
pub fn message(params: &ModelParams, etype: usize, h: &[f64]) -> Vec<f64> {
    if params.cfg.identity_messages {
        return h.to_vec();
    }
    let mut m = params.message_mats[etype].matvec(h);
    for (mi, bi) in m.iter_mut().zip(&params.message_biases[etype]) {
        *mi += bi;
    }
    m
}

/// Elementwise reduction of a message list in list order; the empty list
/// reduces to the zero vector.
pub fn aggregate(kind: AggregationKind, messages: &[Vec<f64>], dim: usize) -> Vec<f64> {
    if messages.is_empty() {
        return vec![0.0; dim];
    }
    match kind {
        AggregationKind::Sum | AggregationKind::Avg => {
            let mut acc = vec![0.0; dim];
            for m in messages {
                for (a, v) in acc.iter_mut().zip(m) {
                    *a += v;
                }
            }
            if kind == AggregationKind::Avg {
                let c = messages.len() as f64;
                for a in &mut acc {
                    *a /= c;
                }
            }
            acc
        }
        AggregationKind::Max => {
            let mut acc = messages[0].clone();
            for m in &messages[1..] {
                for (a, v) in acc.iter_mut().zip(m) {
                    if *v > *a {
                        *a = *v;
                    }
                }
            }
            acc
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// GRU intermediates kept for the backward pass.
#[derive(Clone, Debug)]
pub struct GruActivation {
    pub m_bar: Vec<f64>,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub h_tilde: Vec<f64>,
    pub h_new: Vec<f64>,
}

/// GRU step with the aggregated message as input and the node state as
/// hidden state:
/// r = sigma(W_r m + U_r h + b_r), z = sigma(W_z m + U_z h + b_z),
/// h~ = tanh(W_h m + U_h (r*h) + b_h), h' = (1-z)*h + z*h~.
pub fn gru_update(gru: &GruWeights, h: &[f64], m_bar: &[f64]) -> GruActivation {
    let d = h.len();
    let mut r = gru.w_r.matvec(m_bar);
    let ur = gru.u_r.matvec(h);
    for i in 0..d {
        r[i] = sigmoid(r[i] + ur[i] + gru.b_r[i]);
    }
    let mut z = gru.w_z.matvec(m_bar);
    let uz = gru.u_z.matvec(h);
    for i in 0..d {
        z[i] = sigmoid(z[i] + uz[i] + gru.b_z[i]);
    }
    let rh: Vec<f64> = (0..d).map(|i| r[i] * h[i]).collect();
    let mut h_tilde = gru.w_h.matvec(m_bar);
    let uh = gru.u_h.matvec(&rh);
    for i in 0..d {
        h_tilde[i] = (h_tilde[i] + uh[i] + gru.b_h[i]).tanh();
    }
    let h_new: Vec<f64> = (0..d)
        .map(|i| (1.0 - z[i]) * h[i] + z[i] * h_tilde[i])
        .collect();
    GruActivation {
        m_bar: m_bar.to_vec(),
        r,
        z,
        h_tilde,
        h_new,
    }
}

/// Per-phase forward record used by BPTT.
#[derive(Clone, Debug)]
pub struct PhaseTape {
    /// Snapshot of all states before the phase.
    pub pre_h: Vec<f64>,
    /// One message per phase edge, ascending edge order, `|edges| x dim`.
    pub msgs: Vec<f64>,
    /// Nodes that received at least one message, ascending.
    pub receivers: Vec<NodeId>,
    /// GRU intermediates, aligned with `receivers`.
    pub gru: Vec<GruActivation>,
}

#[derive(Clone, Debug, Default)]
pub struct Tape {
    pub phases: Vec<PhaseTape>,
}

/// Runs the schedule phase by phase. Nodes receiving no message in a phase
/// keep their state unchanged. Fails on the first phase that produces a
/// non-finite state.
pub fn propagate(
    graph: &Graph,
    schedule: &Schedule,
    states: &NodeStates,
    params: &ModelParams,
) -> Result<NodeStates, GnnError> {
    let (out, _) = propagate_with_tape(graph, schedule, states, params, false)?;
    Ok(out)
}

/// As [`propagate`], optionally recording the tape for the backward pass.
pub fn propagate_with_tape(
    graph: &Graph,
    schedule: &Schedule,
    states: &NodeStates,
    params: &ModelParams,
    record: bool,
) -> Result<(NodeStates, Tape), GnnError> {
    schedule.validate_for(graph)?;
    let d = params.cfg.dim;
    let n = graph.num_nodes();
    let agg = params.cfg.aggregation;
    let mut h = states.clone();
    let mut tape = Tape::default();

    for (phase_idx, phase) in schedule.phases().iter().enumerate() {
        let pre_h = h.h.clone();
        let mut msgs: Vec<f64> = Vec::with_capacity(if record { phase.edges.len() * d } else { 0 });
        // Aggregation state per destination: accumulator plus message count.
        let mut acc: Vec<Option<(Vec<f64>, usize)>> = vec![None; n];
        let mut receivers: Vec<NodeId> = Vec::new();

        for &e in &phase.edges {
            let edge = graph.edge(e);
            let src_state = &pre_h[edge.src * d..(edge.src + 1) * d];
            let m = message(params, edge.etype, src_state);
            match &mut acc[edge.dst] {
                None => {
                    acc[edge.dst] = Some((m.clone(), 1));
                    receivers.push(edge.dst);
                }
                Some((a, count)) => {
                    match agg {
                        AggregationKind::Sum | AggregationKind::Avg => {
                            for (ai, mi) in a.iter_mut().zip(&m) {
                                *ai += mi;
                            }
                        }
                        AggregationKind::Max => {
                            for (ai, mi) in a.iter_mut().zip(&m) {
                                if *mi > *ai {
                                    *ai = *mi;
                                }
                            }
                        }
                    }
                    *count += 1;
                }
            }
            if record {
                msgs.extend_from_slice(&m);
            }
        }

        receivers.sort_unstable();
        let mut gru_tape = Vec::with_capacity(if record { receivers.len() } else { 0 });
        for &v in &receivers {
            let (a, count) = acc[v].take().expect("receiver has messages");
            let m_bar: Vec<f64> = if agg == AggregationKind::Avg {
                a.iter().map(|x| x / count as f64).collect()
            } else {
                a
            };
            let h_prev = &pre_h[v * d..(v + 1) * d];
            let act = gru_update(&params.gru, h_prev, &m_bar);
            if act.h_new.iter().any(|x| !x.is_finite()) {
                return Err(GnnError::NonFinite { phase: phase_idx });
            }
            h.row_mut(v).copy_from_slice(&act.h_new);
            if record {
                gru_tape.push(act);
            }
        }

        h.step += 1;
        if record {
            tape.phases.push(PhaseTape {
                pre_h,
                msgs,
                receivers,
                gru: gru_tape,
            });
        }
    }
    Ok((h, tape))
}

/// Output-head forward pass for one node: returns `(readout input, hidden
/// activation, logits)`.
pub(crate) fn head_forward(
    params: &ModelParams,
    final_state: &[f64],
    initial_state: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let readout_in: Vec<f64> = if params.cfg.concat_input {
        final_state
            .iter()
            .chain(initial_state.iter())
            .copied()
            .collect()
    } else {
        final_state.to_vec()
    };
    let (hidden_act, logits_in) = match &params.hidden {
        Some((w1, b1)) => {
            let mut a = w1.matvec_t(&readout_in);
            for (ai, bi) in a.iter_mut().zip(b1) {
                *ai = (*ai + bi).tanh();
            }
            (a.clone(), a)
        }
        None => (Vec::new(), readout_in.clone()),
    };
    let (w2, b2) = &params.logits;
    let mut logits = w2.matvec_t(&logits_in);
    for (li, bi) in logits.iter_mut().zip(b2) {
        *li += bi;
    }
    (readout_in, hidden_act, logits)
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Softmax cross-entropy readout averaged over `mask`, plus the weight-decay
/// term over the weight matrices. Probabilities come back for every node.
pub fn readout_loss(
    final_states: &NodeStates,
    initial_states: &NodeStates,
    labels: &[Option<usize>],
    mask: &[NodeId],
    params: &ModelParams,
    weight_decay: f64,
) -> Result<(f64, Vec<f64>), GnnError> {
    if mask.is_empty() {
        return Err(GnnError::EmptyMask);
    }
    let classes = params.cfg.num_classes;
    let n = final_states.num_nodes;
    let mut probs = vec![0.0; n * classes];
    for v in 0..n {
        let (_, _, logits) = head_forward(params, final_states.row(v), initial_states.row(v));
        probs[v * classes..(v + 1) * classes].copy_from_slice(&softmax(&logits));
    }
    let mut ce = 0.0;
    for &v in mask {
        let label = labels[v].ok_or(GnnError::MissingLabel { node: v })?;
        ce -= probs[v * classes + label].max(f64::MIN_POSITIVE).ln();
    }
    let mut loss = ce / mask.len() as f64;
    if weight_decay != 0.0 {
        loss += 0.5 * weight_decay * params.weight_squared_norm();
    }
    Ok((loss, probs))
}

#[cfg(test)]
mod tests;
