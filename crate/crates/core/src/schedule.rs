//! Propagation schedules: ordered phase lists of directed edge ids with
//! barrier semantics. A phase is the unit of message accounting and of GNN
//! unrolling; empty phases are dropped and never counted.

use serde::Serialize;
use thiserror::Error;

use crate::graph::{EdgeId, Graph, NodeId};
use crate::partition::{Partition, PartitionError};
use crate::rng::Rng;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("{what} must be at least 1")]
    ZeroParam { what: &'static str },
    #[error("root node {root} out of range (num_nodes = {num_nodes})")]
    RootOutOfRange { root: usize, num_nodes: usize },
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("schedule built for a graph with {schedule_nodes} nodes / {schedule_edges} edges, got {graph_nodes} nodes / {graph_edges} edges")]
    GraphMismatch {
        schedule_nodes: usize,
        schedule_edges: usize,
        graph_nodes: usize,
        graph_edges: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Synchronous,
    Partition,
    Sequential,
    Mst,
    RandomPhase,
}

/// Schedule parameters, populated as applicable per kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ScheduleParams {
    pub t: Option<usize>,
    pub t_s: Option<usize>,
    pub t_c: Option<usize>,
    pub k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Phase {
    pub label: String,
    /// Edge ids, ascending.
    pub edges: Vec<EdgeId>,
}

/// Immutable ordered phase list bound to the graph it was built from.
#[derive(Clone, Debug)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub params: ScheduleParams,
    phases: Vec<Phase>,
    num_nodes: usize,
    num_edges: usize,
}

impl Schedule {
    fn new(kind: ScheduleKind, params: ScheduleParams, graph: &Graph) -> Self {
        Schedule {
            kind,
            params,
            phases: Vec::new(),
            num_nodes: graph.num_nodes(),
            num_edges: graph.num_edges(),
        }
    }

    fn push_phase(&mut self, label: impl Into<String>, mut edges: Vec<EdgeId>) {
        if edges.is_empty() {
            return;
        }
        edges.sort_unstable();
        self.phases.push(Phase {
            label: label.into(),
            edges,
        });
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn num_phases(&self) -> usize {
        self.phases.len()
    }

    /// Total messages: the sum of phase sizes.
    pub fn message_count(&self) -> u64 {
        self.phases.iter().map(|p| p.edges.len() as u64).sum()
    }

    /// The whole phase list repeated `times` times.
    pub fn repeat(&self, times: usize) -> Schedule {
        let mut out = self.clone();
        out.phases = Vec::with_capacity(self.phases.len() * times);
        for _ in 0..times {
            out.phases.extend(self.phases.iter().cloned());
        }
        out
    }

    pub fn validate_for(&self, graph: &Graph) -> Result<(), ScheduleError> {
        if self.num_nodes != graph.num_nodes() || self.num_edges != graph.num_edges() {
            return Err(ScheduleError::GraphMismatch {
                schedule_nodes: self.num_nodes,
                schedule_edges: self.num_edges,
                graph_nodes: graph.num_nodes(),
                graph_edges: graph.num_edges(),
            });
        }
        Ok(())
    }

    /// Dump format: one phase per line, `phase_idx<TAB>label<TAB>id,id,...`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, phase) in self.phases.iter().enumerate() {
            let ids: Vec<String> = phase.edges.iter().map(|e| e.to_string()).collect();
            out.push_str(&format!("{}\t{}\t{}\n", i, phase.label, ids.join(",")));
        }
        out
    }
}

/// `t` phases, each activating every edge.
pub fn synchronous_schedule(graph: &Graph, t: usize) -> Result<Schedule, ScheduleError> {
    if t == 0 {
        return Err(ScheduleError::ZeroParam { what: "t" });
    }
    let all: Vec<EdgeId> = (0..graph.num_edges()).collect();
    let mut s = Schedule::new(
        ScheduleKind::Synchronous,
        ScheduleParams {
            t: Some(t),
            ..ScheduleParams::default()
        },
        graph,
    );
    for _ in 0..t {
        s.push_phase("sync", all.clone());
    }
    Ok(s)
}

/// Alternating intra/inter schedule over a partition: each of `t` outer
/// iterations contributes `t_s` intra phases (the union of all subgraph edge
/// sets — subgraphs step simultaneously) followed by `t_c` inter phases (the
/// cut set). With `drop_final_inter`, the last inter phase of the last outer
/// iteration is omitted.
pub fn partition_schedule(
    graph: &Graph,
    partition: &Partition,
    t: usize,
    t_s: usize,
    t_c: usize,
    drop_final_inter: bool,
) -> Result<Schedule, ScheduleError> {
    if t == 0 {
        return Err(ScheduleError::ZeroParam { what: "t" });
    }
    let view = partition.view(graph)?;
    let intra = view.intra_edges();
    let cut = {
        let mut c = view.cut_edges.clone();
        c.sort_unstable();
        c
    };
    let mut s = Schedule::new(
        ScheduleKind::Partition,
        ScheduleParams {
            t: Some(t),
            t_s: Some(t_s),
            t_c: Some(t_c),
            k: Some(partition.k),
        },
        graph,
    );
    for outer in 0..t {
        for _ in 0..t_s {
            s.push_phase("intra", intra.clone());
        }
        for inner in 0..t_c {
            if drop_final_inter && outer == t - 1 && inner == t_c - 1 {
                continue;
            }
            s.push_phase("inter", cut.clone());
        }
    }
    Ok(s)
}

/// BFS visiting order from `root`: nodes sorted by (BFS distance, id), with
/// unreached nodes appended in ascending id order.
fn bfs_order(graph: &Graph, root: NodeId) -> Vec<usize> {
    let dist = graph.bfs_distances(root);
    let mut nodes: Vec<NodeId> = (0..graph.num_nodes()).collect();
    nodes.sort_by_key(|&v| (dist[v], v));
    let mut order = vec![0usize; graph.num_nodes()];
    for (pos, &v) in nodes.iter().enumerate() {
        order[v] = pos;
    }
    order
}

/// Sequential schedule: a BFS visiting order splits the edges into an
/// order-respecting DAG and an order-violating DAG (self-loops dropped). Each
/// DAG unrolls into topological level phases — an edge (u, v) fires at the
/// level where u has received all of its DAG parents — forward levels first,
/// then backward.
pub fn sequential_schedule(graph: &Graph, root: NodeId) -> Result<Schedule, ScheduleError> {
    if root >= graph.num_nodes() && graph.num_nodes() > 0 {
        return Err(ScheduleError::RootOutOfRange {
            root,
            num_nodes: graph.num_nodes(),
        });
    }
    let order = bfs_order(graph, root);
    let mut s = Schedule::new(ScheduleKind::Sequential, ScheduleParams::default(), graph);
    for (dir, tag) in [(true, "dag-fwd"), (false, "dag-bwd")] {
        let in_dag = |e: &crate::graph::Edge| {
            if dir {
                order[e.src] < order[e.dst]
            } else {
                order[e.src] > order[e.dst]
            }
        };
        // Longest-path level of each node within the DAG. Processing nodes in
        // DAG order (position within `order`, or reversed for the backward
        // DAG) sees every parent before its children.
        let mut by_pos: Vec<NodeId> = (0..graph.num_nodes()).collect();
        by_pos.sort_by_key(|&v| order[v]);
        if !dir {
            by_pos.reverse();
        }
        let mut level = vec![0usize; graph.num_nodes()];
        for &u in &by_pos {
            for &e in graph.out_edges(u) {
                let edge = graph.edge(e);
                if in_dag(&edge) {
                    level[edge.dst] = level[edge.dst].max(level[u] + 1);
                }
            }
        }
        let mut phases: Vec<Vec<EdgeId>> = Vec::new();
        for (id, edge) in graph.edges().iter().enumerate() {
            if in_dag(edge) {
                let l = level[edge.src];
                if phases.len() <= l {
                    phases.resize(l + 1, Vec::new());
                }
                phases[l].push(id);
            }
        }
        for (l, edges) in phases.into_iter().enumerate() {
            s.push_phase(format!("{tag}-{l}"), edges);
        }
    }
    Ok(s)
}

/// Undirected support of the graph: distinct unordered pairs (self-loops
/// excluded), each mapped to its directed edge instances.
fn undirected_support(graph: &Graph) -> Vec<((NodeId, NodeId), Vec<EdgeId>)> {
    let mut map: std::collections::BTreeMap<(NodeId, NodeId), Vec<EdgeId>> =
        std::collections::BTreeMap::new();
    for (id, e) in graph.edges().iter().enumerate() {
        if e.src == e.dst {
            continue;
        }
        let key = (e.src.min(e.dst), e.src.max(e.dst));
        map.entry(key).or_default().push(id);
    }
    map.into_iter().collect()
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Spanning-tree sequence schedule. Every undirected support pair gets an
/// initial random weight in (0, 1); each of `k_trees` iterations runs
/// Kruskal on the current weights (a spanning forest when disconnected),
/// then adds 1 to the weights of the chosen pairs so later trees prefer
/// fresh edges. Each forest unrolls into one phase per depth, edges directed
/// away from each component's lowest-id root.
pub fn mst_schedule(graph: &Graph, k_trees: usize, seed: u64) -> Result<Schedule, ScheduleError> {
    if k_trees == 0 {
        return Err(ScheduleError::ZeroParam { what: "k_trees" });
    }
    let support = undirected_support(graph);
    let mut rng = Rng::from_seed(seed);
    let mut weights: Vec<f64> = support
        .iter()
        .map(|_| {
            // Strictly positive in (0, 1).
            let mut w = rng.next_f64();
            while w == 0.0 {
                w = rng.next_f64();
            }
            w
        })
        .collect();

    let mut s = Schedule::new(
        ScheduleKind::Mst,
        ScheduleParams {
            k: Some(k_trees),
            ..ScheduleParams::default()
        },
        graph,
    );

    for tree_idx in 0..k_trees {
        // Kruskal with (weight, support index) ordering for determinism.
        let mut order: Vec<usize> = (0..support.len()).collect();
        order.sort_by(|&a, &b| weights[a].partial_cmp(&weights[b]).unwrap().then(a.cmp(&b)));
        let mut uf = UnionFind::new(graph.num_nodes());
        let mut chosen: Vec<usize> = Vec::new();
        for &i in &order {
            let ((u, v), _) = support[i];
            if uf.union(u, v) {
                chosen.push(i);
            }
        }
        for &i in &chosen {
            weights[i] += 1.0;
        }

        // Adjacency over the forest.
        let mut adj: Vec<Vec<(NodeId, usize)>> = vec![Vec::new(); graph.num_nodes()];
        for &i in &chosen {
            let ((u, v), _) = support[i];
            adj[u].push((v, i));
            adj[v].push((u, i));
        }
        // Root each component at its lowest-id node; collect edges per depth.
        let mut depth_edges: Vec<Vec<EdgeId>> = Vec::new();
        let mut seen = vec![false; graph.num_nodes()];
        for root in 0..graph.num_nodes() {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut frontier = vec![root];
            let mut depth = 0usize;
            while !frontier.is_empty() {
                let mut next = Vec::new();
                for &u in &frontier {
                    for &(v, i) in &adj[u] {
                        if !seen[v] {
                            seen[v] = true;
                            if depth_edges.len() <= depth {
                                depth_edges.resize(depth + 1, Vec::new());
                            }
                            depth_edges[depth].push(directed_instance(graph, &support[i].1, u, v));
                            next.push(v);
                        }
                    }
                }
                frontier = next;
                depth += 1;
            }
        }
        for edges in depth_edges {
            s.push_phase(format!("mst-{tree_idx}"), edges);
        }
    }
    Ok(s)
}

/// Directed edge id realizing parent -> child for a support pair (lowest id
/// wins among parallel instances); falls back to the reverse instance when
/// only the opposite direction exists in the graph.
fn directed_instance(graph: &Graph, ids: &[EdgeId], parent: NodeId, child: NodeId) -> EdgeId {
    ids.iter()
        .copied()
        .find(|&id| graph.edge(id).src == parent && graph.edge(id).dst == child)
        .unwrap_or(ids[0])
}

/// `k` phases of a random edge partition, in chunk order.
pub fn random_phase_schedule(
    graph: &Graph,
    k: usize,
    seed: u64,
) -> Result<Schedule, ScheduleError> {
    if k == 0 {
        return Err(ScheduleError::ZeroParam { what: "k" });
    }
    let chunks = crate::partition::random_edge_phases(graph, k, seed);
    let mut s = Schedule::new(
        ScheduleKind::RandomPhase,
        ScheduleParams {
            k: Some(k),
            ..ScheduleParams::default()
        },
        graph,
    );
    for (i, chunk) in chunks.into_iter().enumerate() {
        s.push_phase(format!("random-chunk-{i}"), chunk);
    }
    Ok(s)
}
