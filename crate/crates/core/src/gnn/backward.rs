//! Exact reverse-mode gradients through the unrolled phase sequence.
//!
//! The forward tape keeps, per phase, the pre-phase states, every message,
//! and the GRU intermediates of each receiver. The backward pass walks the
//! phases in reverse: receivers route their state gradient through the GRU
//! (splitting into pre-state and aggregated-message parts), message
//! gradients distribute to edges according to the aggregation kind, and edge
//! gradients flow into the per-type message transforms and the source
//! states. Everything lands in one gradient accumulator shaped like the
//! parameters.

use crate::graph::Graph;
use crate::schedule::Schedule;

use super::params::{AggregationKind, InputHead, ModelParams};
use super::train::Batch;
use super::{head_forward, init_states, propagate_with_tape, GnnError};

/// Loss, parameter gradients and per-node probabilities for one full-batch
/// forward/backward pass.
pub fn loss_and_gradients(
    graph: &Graph,
    schedule: &Schedule,
    batch: &Batch,
    params: &ModelParams,
    weight_decay: f64,
) -> Result<(f64, ModelParams, Vec<f64>), GnnError> {
    let d = params.cfg.dim;
    let n = graph.num_nodes();
    let classes = params.cfg.num_classes;

    let initial = init_states(params, batch.features)?;
    let (final_states, tape) = propagate_with_tape(graph, schedule, &initial, params, true)?;
    let (loss, probs) = super::readout_loss(
        &final_states,
        &initial,
        batch.labels,
        batch.mask,
        params,
        weight_decay,
    )?;

    let mut grads = params.zeros_like();
    let inv_mask = 1.0 / batch.mask.len() as f64;

    // Readout backward: gradient w.r.t. final states, plus the direct path
    // into the initial states when they are concatenated at readout.
    let mut g_final = vec![0.0; n * d];
    let mut g_init_readout = vec![0.0; n * d];
    for &v in batch.mask {
        let label = batch.labels[v].ok_or(GnnError::MissingLabel { node: v })?;
        let (readout_in, hidden_act, _) = head_forward(params, final_states.row(v), initial.row(v));
        let mut dlogits: Vec<f64> = probs[v * classes..(v + 1) * classes]
            .iter()
            .map(|&p| p * inv_mask)
            .collect();
        dlogits[label] -= inv_mask;

        let d_readout = match (&params.hidden, &mut grads.hidden) {
            (Some((w1, _)), Some((gw1, gb1))) => {
                grads.logits.0.add_outer(&hidden_act, &dlogits);
                for (b, dl) in grads.logits.1.iter_mut().zip(&dlogits) {
                    *b += dl;
                }
                let da = params.logits.0.matvec(&dlogits);
                let dp: Vec<f64> = da
                    .iter()
                    .zip(&hidden_act)
                    .map(|(&g, &a)| g * (1.0 - a * a))
                    .collect();
                gw1.add_outer(&readout_in, &dp);
                for (b, v) in gb1.iter_mut().zip(&dp) {
                    *b += v;
                }
                w1.matvec(&dp)
            }
            _ => {
                grads.logits.0.add_outer(&readout_in, &dlogits);
                for (b, dl) in grads.logits.1.iter_mut().zip(&dlogits) {
                    *b += dl;
                }
                params.logits.0.matvec(&dlogits)
            }
        };
        for j in 0..d {
            g_final[v * d + j] += d_readout[j];
        }
        if params.cfg.concat_input {
            for j in 0..d {
                g_init_readout[v * d + j] += d_readout[d + j];
            }
        }
    }

    // BPTT over the phases in reverse. `g` always holds the gradient with
    // respect to the states after the phase currently being reversed.
    let mut g = g_final;
    for (phase, ptape) in schedule.phases().iter().zip(tape.phases.iter()).rev() {
        let mut g_pre = g.clone();
        // Aggregated-message gradients per receiver, filled by the GRU pass.
        let mut dm_bar: Vec<Option<Vec<f64>>> = vec![None; n];

        for (ri, &v) in ptape.receivers.iter().enumerate() {
            let act = &ptape.gru[ri];
            let h_prev = &ptape.pre_h[v * d..(v + 1) * d];
            let gv = &g[v * d..(v + 1) * d];
            let gru = &params.gru;
            let ggru = &mut grads.gru;

            let dz: Vec<f64> = (0..d)
                .map(|i| gv[i] * (act.h_tilde[i] - h_prev[i]))
                .collect();
            let dh_tilde: Vec<f64> = (0..d).map(|i| gv[i] * act.z[i]).collect();
            let mut dh: Vec<f64> = (0..d).map(|i| gv[i] * (1.0 - act.z[i])).collect();

            let dq: Vec<f64> = (0..d)
                .map(|i| dh_tilde[i] * (1.0 - act.h_tilde[i] * act.h_tilde[i]))
                .collect();
            let rh: Vec<f64> = (0..d).map(|i| act.r[i] * h_prev[i]).collect();
            ggru.w_h.add_outer(&dq, &act.m_bar);
            ggru.u_h.add_outer(&dq, &rh);
            for (b, v) in ggru.b_h.iter_mut().zip(&dq) {
                *b += v;
            }
            let drh = gru.u_h.matvec_t(&dq);
            let dr: Vec<f64> = (0..d).map(|i| drh[i] * h_prev[i]).collect();
            for i in 0..d {
                dh[i] += drh[i] * act.r[i];
            }
            let mut dm = gru.w_h.matvec_t(&dq);

            let da_r: Vec<f64> = (0..d)
                .map(|i| dr[i] * act.r[i] * (1.0 - act.r[i]))
                .collect();
            ggru.w_r.add_outer(&da_r, &act.m_bar);
            ggru.u_r.add_outer(&da_r, h_prev);
            for (b, v) in ggru.b_r.iter_mut().zip(&da_r) {
                *b += v;
            }
            let wr = gru.w_r.matvec_t(&da_r);
            let ur = gru.u_r.matvec_t(&da_r);
            for i in 0..d {
                dm[i] += wr[i];
                dh[i] += ur[i];
            }

            let da_z: Vec<f64> = (0..d)
                .map(|i| dz[i] * act.z[i] * (1.0 - act.z[i]))
                .collect();
            ggru.w_z.add_outer(&da_z, &act.m_bar);
            ggru.u_z.add_outer(&da_z, h_prev);
            for (b, v) in ggru.b_z.iter_mut().zip(&da_z) {
                *b += v;
            }
            let wz = gru.w_z.matvec_t(&da_z);
            let uz = gru.u_z.matvec_t(&da_z);
            for i in 0..d {
                dm[i] += wz[i];
                dh[i] += uz[i];
            }

            g_pre[v * d..(v + 1) * d].copy_from_slice(&dh);
            dm_bar[v] = Some(dm);
        }

        // Group the phase edges by destination, preserving ascending edge
        // order within each group (matches the forward reduction order).
        let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (idx, &e) in phase.edges.iter().enumerate() {
            incoming[graph.edge(e).dst].push(idx);
        }

        for &v in &ptape.receivers {
            let group = &incoming[v];
            let dm = dm_bar[v].take().expect("receiver has a message gradient");
            let count = group.len();

            // Per-dimension argmax (first maximal message wins), only needed
            // for max aggregation.
            let argmax: Vec<usize> = if params.cfg.aggregation == AggregationKind::Max {
                (0..d)
                    .map(|j| {
                        let mut best = group[0];
                        for &idx in &group[1..] {
                            if ptape.msgs[idx * d + j] > ptape.msgs[best * d + j] {
                                best = idx;
                            }
                        }
                        best
                    })
                    .collect()
            } else {
                Vec::new()
            };

            for &idx in group {
                let e = phase.edges[idx];
                let edge = graph.edge(e);
                let dm_e: Vec<f64> = match params.cfg.aggregation {
                    AggregationKind::Sum => dm.clone(),
                    AggregationKind::Avg => dm.iter().map(|x| x / count as f64).collect(),
                    AggregationKind::Max => (0..d)
                        .map(|j| if argmax[j] == idx { dm[j] } else { 0.0 })
                        .collect(),
                };
                let h_src = &ptape.pre_h[edge.src * d..(edge.src + 1) * d];
                if params.cfg.identity_messages {
                    for j in 0..d {
                        g_pre[edge.src * d + j] += dm_e[j];
                    }
                } else {
                    grads.message_mats[edge.etype].add_outer(&dm_e, h_src);
                    for (b, v) in grads.message_biases[edge.etype].iter_mut().zip(&dm_e) {
                        *b += v;
                    }
                    let back = params.message_mats[edge.etype].matvec_t(&dm_e);
                    for j in 0..d {
                        g_pre[edge.src * d + j] += back[j];
                    }
                }
            }
        }

        g = g_pre;
    }

    // Input head backward: propagation path plus the concat readout path.
    for i in 0..n * d {
        g[i] += g_init_readout[i];
    }
    match (&params.input, &mut grads.input) {
        (InputHead::Embedding(_), InputHead::Embedding(ge)) => {
            for (gi, vi) in ge.data.iter_mut().zip(&g) {
                *gi += vi;
            }
        }
        (InputHead::Feature(_), InputHead::Feature(gw)) => {
            for v in 0..n {
                for &(dim, x) in &batch.features.rows[v] {
                    let row = gw.row_mut(dim);
                    for j in 0..d {
                        row[j] += x * g[v * d + j];
                    }
                }
            }
        }
        _ => unreachable!("gradient head mirrors parameter head"),
    }

    if weight_decay != 0.0 {
        let pf = params.to_flat();
        let mask = params.weight_decay_mask();
        let mut gf = grads.to_flat();
        for i in 0..gf.len() {
            if mask[i] {
                gf[i] += weight_decay * pf[i];
            }
        }
        grads.set_from_flat(&gf);
    }

    Ok((loss, grads, probs))
}

/// Gradients of the masked readout loss with respect to every parameter.
pub fn backward(
    graph: &Graph,
    schedule: &Schedule,
    batch: &Batch,
    params: &ModelParams,
    weight_decay: f64,
) -> Result<ModelParams, GnnError> {
    loss_and_gradients(graph, schedule, batch, params, weight_decay).map(|(_, g, _)| g)
}
