//! Broadcast problem: starting from per-node unique tokens, deliver every
//! node's token to every node that can reach it. Includes an exact simulator
//! over any schedule and the closed forms for bidirected chains.

use serde::Serialize;
use thiserror::Error;

use crate::graph::Graph;
use crate::partition::Partition;
use crate::schedule::{
    partition_schedule, synchronous_schedule, Schedule, ScheduleError, ScheduleKind,
};

#[derive(Debug, Error)]
pub enum BroadcastError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Partition(#[from] crate::partition::PartitionError),
    #[error("k = {k} out of range for n = {n}")]
    KOutOfRange { k: usize, n: usize },
}

/// Fixed-size bitset used for per-node token sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitSet {
    bits: usize,
    blocks: Vec<u64>,
}

impl BitSet {
    pub fn new(bits: usize) -> Self {
        BitSet {
            bits,
            blocks: vec![0; bits.div_ceil(64)],
        }
    }

    pub fn set(&mut self, i: usize) {
        self.blocks[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        self.blocks[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a |= b;
        }
    }

    pub fn count(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn len(&self) -> usize {
        self.bits
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }
}

/// Simulator output. `solved` means every node holds exactly the tokens of
/// the nodes that can reach it (its ancestor set); `all_tokens` additionally
/// requires all `N` tokens everywhere, which is attainable only on strongly
/// connected graphs.
#[derive(Clone, Debug)]
pub struct BroadcastState {
    pub tokens: Vec<BitSet>,
    pub messages_sent: u64,
    pub phases_executed: usize,
    pub solved: bool,
    pub all_tokens: bool,
}

/// Ancestor sets: bit `u` of entry `v` is set iff `v` is reachable from `u`.
fn ancestor_sets(graph: &Graph) -> Vec<BitSet> {
    let n = graph.num_nodes();
    let mut sets = vec![BitSet::new(n); n];
    for u in 0..n {
        let dist = graph.bfs_distances(u);
        for (v, &d) in dist.iter().enumerate() {
            if d != usize::MAX {
                sets[v].set(u);
            }
        }
    }
    sets
}

/// Executes the schedule phase by phase with barrier semantics: every active
/// edge (u, v) delivers u's pre-phase token set to v, and each executed phase
/// adds its edge count to `messages_sent`. With `stop_when_solved`, execution
/// halts as soon as the token sets saturate (checked before the first phase
/// as well), counting only executed phases.
pub fn simulate_broadcast(
    graph: &Graph,
    schedule: &Schedule,
    stop_when_solved: bool,
) -> Result<BroadcastState, BroadcastError> {
    schedule.validate_for(graph)?;
    let n = graph.num_nodes();
    let targets = ancestor_sets(graph);
    let mut tokens: Vec<BitSet> = (0..n)
        .map(|v| {
            let mut b = BitSet::new(n);
            b.set(v);
            b
        })
        .collect();

    let saturated =
        |tokens: &[BitSet]| -> bool { tokens.iter().zip(&targets).all(|(t, g)| t == g) };

    let mut messages_sent = 0u64;
    let mut phases_executed = 0usize;
    let mut solved = saturated(&tokens);

    if !(stop_when_solved && solved) {
        for phase in schedule.phases() {
            // Barrier semantics: all deliveries read pre-phase state.
            let mut incoming: Vec<Option<BitSet>> = vec![None; n];
            for &e in &phase.edges {
                let edge = graph.edge(e);
                incoming[edge.dst]
                    .get_or_insert_with(|| BitSet::new(n))
                    .union_with(&tokens[edge.src]);
            }
            for (v, inc) in incoming.into_iter().enumerate() {
                if let Some(inc) = inc {
                    tokens[v].union_with(&inc);
                }
            }
            messages_sent += phase.edges.len() as u64;
            phases_executed += 1;
            solved = saturated(&tokens);
            if stop_when_solved && solved {
                break;
            }
        }
    }

    let all_tokens = solved && tokens.iter().all(|t| t.count() == n);
    Ok(BroadcastState {
        tokens,
        messages_sent,
        phases_executed,
        solved,
        all_tokens,
    })
}

/// Closed-form chain analysis for a bidirected chain of `n` nodes split
/// evenly into `k` sub-chains.
#[derive(Clone, Debug, Serialize)]
pub struct ChainFormulaReport {
    pub n: usize,
    pub k: usize,
    /// 2(N-1)^2
    pub sync_messages: u64,
    /// 2((N-K)^2 + (K-1)^2)
    pub partition_messages: u64,
    /// Real-valued minimizer (N+1)/2 of the partition count in K.
    pub optimal_k_real: f64,
    /// Integer minimizers over K in [1, N] (one value, or two on a tie).
    pub optimal_k_int: Vec<usize>,
}

pub fn partition_chain_messages(n: usize, k: usize) -> u64 {
    let n = n as i64;
    let k = k as i64;
    (2 * ((n - k) * (n - k) + (k - 1) * (k - 1))) as u64
}

pub fn sync_chain_messages(n: usize) -> u64 {
    let m = (n as i64) - 1;
    (2 * m * m) as u64
}

pub fn chain_formulas(n: usize, k: usize) -> Result<ChainFormulaReport, BroadcastError> {
    if k == 0 || k > n {
        return Err(BroadcastError::KOutOfRange { k, n });
    }
    let mut best = u64::MAX;
    let mut optimal_k_int = Vec::new();
    for cand in 1..=n {
        let m = partition_chain_messages(n, cand);
        match m.cmp(&best) {
            std::cmp::Ordering::Less => {
                best = m;
                optimal_k_int = vec![cand];
            }
            std::cmp::Ordering::Equal => optimal_k_int.push(cand),
            std::cmp::Ordering::Greater => {}
        }
    }
    Ok(ChainFormulaReport {
        n,
        k,
        sync_messages: sync_chain_messages(n),
        partition_messages: partition_chain_messages(n, k),
        optimal_k_real: (n as f64 + 1.0) / 2.0,
        optimal_k_int,
    })
}

/// Contiguous even chain partition: block `v / (n / k)`.
pub fn even_chain_partition(n: usize, k: usize) -> Partition {
    assert!(k >= 1 && n.is_multiple_of(k), "k must divide n");
    let block = n / k;
    Partition::manual((0..n).map(|v| v / block).collect(), k)
}

/// The exact schedule used by the chain analysis: T_S = n/k - 1, T_C = 1,
/// T = k, final inter phase dropped.
pub fn chain_partition_schedule(graph: &Graph, k: usize) -> Result<Schedule, BroadcastError> {
    let n = graph.num_nodes();
    let partition = even_chain_partition(n, k);
    let t_s = n / k - 1;
    Ok(partition_schedule(graph, &partition, k, t_s, 1, true)?)
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepFamily {
    Chain,
    Cycle,
    Grid,
    Sbm,
}

impl std::str::FromStr for SweepFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chain" => Ok(SweepFamily::Chain),
            "cycle" => Ok(SweepFamily::Cycle),
            "grid" => Ok(SweepFamily::Grid),
            "sbm" => Ok(SweepFamily::Sbm),
            other => Err(format!("unknown graph family '{other}'")),
        }
    }
}

/// One sweep configuration result, serialized as a JSON line. The `solved`
/// column is the strict broadcast criterion: every node holds all N tokens.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub family: SweepFamily,
    #[serde(rename = "N")]
    pub n: usize,
    pub kind: ScheduleKind,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[serde(rename = "T_S")]
    pub t_s: Option<usize>,
    #[serde(rename = "T_C")]
    pub t_c: Option<usize>,
    pub phases: usize,
    pub messages: u64,
    pub solved: bool,
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub families: Vec<SweepFamily>,
    pub sizes: Vec<usize>,
    pub kinds: Vec<ScheduleKind>,
    /// Subgraph count for partition schedules; chains use an even split when
    /// `k` divides the size, flood fill otherwise.
    pub k: usize,
    pub sbm_p_in: f64,
    pub sbm_p_out: f64,
    pub seed: u64,
}

fn sweep_graph(family: SweepFamily, size: usize, spec: &SweepSpec) -> Graph {
    match family {
        SweepFamily::Chain => crate::generators::chain_graph(size),
        SweepFamily::Cycle => crate::generators::cycle_graph(size),
        SweepFamily::Grid => {
            let side = (size as f64).sqrt().floor() as usize;
            crate::generators::grid_graph(side.max(1), side.max(1))
        }
        SweepFamily::Sbm => {
            let mut rng = crate::rng::Rng::derive(spec.seed, "sweep-sbm");
            crate::generators::sbm_graph(
                size,
                4.min(size.max(1)),
                spec.sbm_p_in,
                spec.sbm_p_out,
                &mut rng,
            )
        }
    }
}

fn sweep_schedule(
    graph: &Graph,
    kind: ScheduleKind,
    spec: &SweepSpec,
) -> Result<Schedule, BroadcastError> {
    let n = graph.num_nodes();
    let diameter = graph.diameter().diameter.max(1);
    Ok(match kind {
        ScheduleKind::Synchronous => synchronous_schedule(graph, diameter)?,
        ScheduleKind::Partition => {
            let k = spec.k.clamp(1, n.max(1));
            if n.is_multiple_of(k) && graph.num_edges() == 2 * (n.saturating_sub(1)) {
                // Chain-like: use the even split with its exact step counts.
                chain_partition_schedule(graph, k)?
            } else {
                let labeled: Vec<usize> = (0..n).collect();
                let partition =
                    crate::partition::flood_fill_partition(graph, k, &labeled, spec.seed)?;
                let stats = crate::partition::partition_stats(graph, &partition)?;
                let t_s = stats.max_subgraph_diameter.max(1);
                partition_schedule(graph, &partition, k.max(1), t_s, 1, false)?
            }
        }
        ScheduleKind::Sequential => {
            let rounds = diameter;
            crate::schedule::sequential_schedule(graph, 0)?.repeat(rounds)
        }
        ScheduleKind::Mst => crate::schedule::mst_schedule(graph, diameter, spec.seed)?,
        ScheduleKind::RandomPhase => {
            crate::schedule::random_phase_schedule(graph, spec.k.max(1), spec.seed)?
                .repeat(diameter)
        }
    })
}

/// Runs every (family, size, kind) combination and reports exact phase and
/// message counts. Configurations run with `stop_when_solved` so the message
/// column reflects the first solving phase.
pub fn broadcast_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, BroadcastError> {
    let mut rows = Vec::new();
    for &family in &spec.families {
        for &size in &spec.sizes {
            let graph = sweep_graph(family, size, spec);
            for &kind in &spec.kinds {
                let schedule = sweep_schedule(&graph, kind, spec)?;
                let state = simulate_broadcast(&graph, &schedule, true)?;
                rows.push(SweepRow {
                    family,
                    n: graph.num_nodes(),
                    kind,
                    k: schedule.params.k,
                    t_s: schedule.params.t_s,
                    t_c: schedule.params.t_c,
                    phases: state.phases_executed,
                    messages: state.messages_sent,
                    solved: state.all_tokens,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{chain_graph, cycle_graph};
    use crate::graph::Graph;

    /// Naive reference simulator with hash-set token sets, kept independent
    /// of the bitset implementation.
    fn naive_simulate(
        graph: &Graph,
        schedule: &Schedule,
        stop_when_solved: bool,
    ) -> (Vec<std::collections::BTreeSet<usize>>, u64, usize, bool) {
        let n = graph.num_nodes();
        let mut targets: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); n];
        for u in 0..n {
            for (v, &d) in graph.bfs_distances(u).iter().enumerate() {
                if d != usize::MAX {
                    targets[v].insert(u);
                }
            }
        }
        let mut tokens: Vec<std::collections::BTreeSet<usize>> =
            (0..n).map(|v| std::iter::once(v).collect()).collect();
        let mut messages = 0u64;
        let mut phases = 0usize;
        let mut solved = tokens == targets;
        if !(stop_when_solved && solved) {
            for phase in schedule.phases() {
                let snapshot = tokens.clone();
                for &e in &phase.edges {
                    let edge = graph.edge(e);
                    let from = snapshot[edge.src].clone();
                    tokens[edge.dst].extend(from);
                }
                messages += phase.edges.len() as u64;
                phases += 1;
                solved = tokens == targets;
                if stop_when_solved && solved {
                    break;
                }
            }
        }
        (tokens, messages, phases, solved)
    }

    #[test]
    fn single_node_zero_messages() {
        let g = Graph::build(1, 1, vec![]).unwrap();
        let s = synchronous_schedule(&g, 5).unwrap();
        let state = simulate_broadcast(&g, &s, true).unwrap();
        assert!(state.solved);
        assert_eq!(state.messages_sent, 0);
        assert_eq!(state.phases_executed, 0);
    }

    #[test]
    fn chain5_synchronous_32_messages() {
        let g = chain_graph(5);
        let s = synchronous_schedule(&g, 10).unwrap();
        let state = simulate_broadcast(&g, &s, true).unwrap();
        assert!(state.solved);
        assert_eq!(state.phases_executed, 4);
        assert_eq!(state.messages_sent, 32);
    }

    #[test]
    fn chain10_partition_82_messages() {
        let g = chain_graph(10);
        let s = chain_partition_schedule(&g, 5).unwrap();
        let state = simulate_broadcast(&g, &s, false).unwrap();
        assert!(state.solved);
        assert!(state.all_tokens);
        assert_eq!(state.messages_sent, 82);
    }

    #[test]
    fn matches_naive_simulator() {
        let mut rng = crate::rng::Rng::from_seed(99);
        for trial in 0..25 {
            let n = 2 + rng.below(12);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in 0..n {
                    if u != v && rng.bernoulli(0.25) {
                        edges.push((u, v, 0));
                    }
                }
            }
            let g = Graph::build(n, 1, edges).unwrap();
            let schedules = vec![
                synchronous_schedule(&g, 3).unwrap(),
                crate::schedule::random_phase_schedule(&g, 3.min(g.num_edges().max(1)), trial)
                    .unwrap()
                    .repeat(2),
                crate::schedule::sequential_schedule(&g, 0).unwrap(),
            ];
            for s in schedules {
                for stop in [false, true] {
                    let fast = simulate_broadcast(&g, &s, stop).unwrap();
                    let (tokens, messages, phases, solved) = naive_simulate(&g, &s, stop);
                    assert_eq!(fast.messages_sent, messages);
                    assert_eq!(fast.phases_executed, phases);
                    assert_eq!(fast.solved, solved);
                    for v in 0..n {
                        let got: Vec<usize> = (0..n).filter(|&u| fast.tokens[v].get(u)).collect();
                        let want: Vec<usize> = tokens[v].iter().copied().collect();
                        assert_eq!(got, want, "trial {trial} node {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn monotone_token_growth() {
        let g = cycle_graph(7);
        let s = synchronous_schedule(&g, 1).unwrap();
        let mut counts: Vec<usize> = (0..7).map(|_| 1).collect();
        // Execute phase by phase via repeated single-phase schedules.
        let mut tokens_prev: Option<Vec<usize>> = None;
        for t in 1..=4 {
            let st = simulate_broadcast(&g, &s.repeat(t), false).unwrap();
            let now: Vec<usize> = st.tokens.iter().map(BitSet::count).collect();
            if let Some(prev) = tokens_prev {
                for (a, b) in prev.iter().zip(&now) {
                    assert!(b >= a);
                }
            }
            counts = now.clone();
            tokens_prev = Some(now);
        }
        assert!(counts.iter().all(|&c| c == 7));
    }

    #[test]
    fn coverage_window_solves() {
        // Any schedule covering all edges D times solves broadcast.
        let g = cycle_graph(9);
        let d = g.diameter().diameter;
        let s = synchronous_schedule(&g, d).unwrap();
        let state = simulate_broadcast(&g, &s, false).unwrap();
        assert!(state.solved);
    }

    #[test]
    fn formulas_basic_instances() {
        let r = chain_formulas(2, 1).unwrap();
        assert_eq!(r.sync_messages, 2);
        assert_eq!(r.partition_messages, 2);

        let r = chain_formulas(10, 5).unwrap();
        assert_eq!(r.sync_messages, 162);
        assert_eq!(r.partition_messages, 82);

        let r = chain_formulas(9, 5).unwrap();
        assert_eq!(r.partition_messages, 64);
        assert_eq!(r.sync_messages, 128);
        assert_eq!(r.optimal_k_int, vec![5]);
    }

    #[test]
    fn formulas_degenerate_match_sync() {
        for n in 2..=20 {
            assert_eq!(partition_chain_messages(n, 1), sync_chain_messages(n));
            assert_eq!(partition_chain_messages(n, n), sync_chain_messages(n));
        }
    }

    #[test]
    fn formulas_k_range() {
        assert!(chain_formulas(5, 0).is_err());
        assert!(chain_formulas(5, 6).is_err());
    }

    #[test]
    fn formulas_integer_minimizers() {
        for n in 2..=40usize {
            let r = chain_formulas(n, 1).unwrap();
            if n % 2 == 1 {
                assert_eq!(r.optimal_k_int, vec![(n + 1) / 2]);
            } else {
                // Even chains tie between the floor and ceiling of (N+1)/2.
                assert_eq!(r.optimal_k_int, vec![n / 2, n / 2 + 1]);
            }
        }
    }

    #[test]
    fn sweep_chain_partition_beats_sync() {
        // K = N/2 per size.
        for n in [4usize, 8, 16] {
            let spec = SweepSpec {
                families: vec![SweepFamily::Chain],
                sizes: vec![n],
                kinds: vec![ScheduleKind::Synchronous, ScheduleKind::Partition],
                k: n / 2,
                sbm_p_in: 0.5,
                sbm_p_out: 0.1,
                seed: 0,
            };
            let rows = broadcast_sweep(&spec).unwrap();
            let (sync, part) = (&rows[0], &rows[1]);
            assert!(sync.solved && part.solved);
            assert!(part.messages <= sync.messages, "{part:?} vs {sync:?}");
        }
    }

    #[test]
    fn sweep_cycle_solves_at_diameter() {
        let spec = SweepSpec {
            families: vec![SweepFamily::Cycle],
            sizes: vec![6],
            kinds: vec![ScheduleKind::Synchronous],
            k: 2,
            sbm_p_in: 0.5,
            sbm_p_out: 0.1,
            seed: 0,
        };
        let rows = broadcast_sweep(&spec).unwrap();
        assert_eq!(rows[0].phases, 3);
        assert!(rows[0].solved);
    }

    #[test]
    fn sweep_disconnected_sbm_reports_unsolved() {
        let spec = SweepSpec {
            families: vec![SweepFamily::Sbm],
            sizes: vec![16],
            kinds: vec![ScheduleKind::Synchronous, ScheduleKind::Partition],
            k: 2,
            sbm_p_in: 1.0,
            sbm_p_out: 0.0,
            seed: 1,
        };
        let rows = broadcast_sweep(&spec).unwrap();
        for row in rows {
            assert!(!row.solved, "{row:?}");
        }
    }
}
