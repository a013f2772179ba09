//! Node-to-subgraph partitioners: multi-seed flood fill, spectral
//! normalized-cut clustering, and random edge phases.

use std::collections::VecDeque;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{EdgeId, Graph, NodeId};
use crate::linalg::{symmetric_eigen, LinalgError, Matrix};
use crate::rng::Rng;

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("k = {k} exceeds the number of labeled nodes ({labeled})")]
    TooFewLabeled { k: usize, labeled: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("k = {k} exceeds the number of nodes ({nodes})")]
    TooFewNodes { k: usize, nodes: usize },
    #[error("labeled node set is empty")]
    NoLabeled,
    #[error("labeled node {id} out of range (num_nodes = {num_nodes})")]
    LabeledOutOfRange { id: usize, num_nodes: usize },
    #[error("partition built for {partition_nodes} nodes, graph has {graph_nodes}")]
    GraphMismatch {
        partition_nodes: usize,
        graph_nodes: usize,
    },
    #[error("eigensolver failed: {0}")]
    Eigen(#[from] LinalgError),
    #[error("bad partition file: {message} at line {line}")]
    ParseFile { line: usize, message: String },
}

/// How a partition was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionMethod {
    FloodFill,
    Spectral,
    Manual,
}

/// Total node-to-subgraph assignment with provenance.
#[derive(Clone, Debug)]
pub struct Partition {
    pub assignment: Vec<usize>,
    pub k: usize,
    pub method: PartitionMethod,
    pub seed: u64,
}

impl Partition {
    pub fn manual(assignment: Vec<usize>, k: usize) -> Self {
        debug_assert!(assignment.iter().all(|&s| s < k));
        Partition {
            assignment,
            k,
            method: PartitionMethod::Manual,
            seed: 0,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.assignment.len()
    }

    /// Induced edge-set view on `graph`; errors if node counts disagree.
    pub fn view(&self, graph: &Graph) -> Result<crate::graph::PartitionView, PartitionError> {
        if self.assignment.len() != graph.num_nodes() {
            return Err(PartitionError::GraphMismatch {
                partition_nodes: self.assignment.len(),
                graph_nodes: graph.num_nodes(),
            });
        }
        graph
            .partition_view(&self.assignment, self.k)
            .map_err(|_| PartitionError::GraphMismatch {
                partition_nodes: self.assignment.len(),
                graph_nodes: graph.num_nodes(),
            })
    }

    /// `node_id<TAB>subgraph_id` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (v, s) in self.assignment.iter().enumerate() {
            out.push_str(&format!("{v}\t{s}\n"));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, PartitionError> {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>, what: &str| -> Result<usize, PartitionError> {
                let tok = tok.ok_or_else(|| PartitionError::ParseFile {
                    line: idx + 1,
                    message: format!("missing {what}"),
                })?;
                tok.parse().map_err(|_| PartitionError::ParseFile {
                    line: idx + 1,
                    message: format!("bad {what} '{tok}'"),
                })
            };
            let node = parse(it.next(), "node id")?;
            let sub = parse(it.next(), "subgraph id")?;
            pairs.push((node, sub));
        }
        let n = pairs.iter().map(|&(v, _)| v + 1).max().unwrap_or(0);
        let mut assignment = vec![usize::MAX; n];
        for (v, s) in pairs {
            assignment[v] = s;
        }
        if let Some(v) = assignment.iter().position(|&s| s == usize::MAX) {
            return Err(PartitionError::ParseFile {
                line: 0,
                message: format!("node {v} has no assignment"),
            });
        }
        let k = assignment.iter().map(|&s| s + 1).max().unwrap_or(1);
        Ok(Partition {
            assignment,
            k,
            method: PartitionMethod::Manual,
            seed: 0,
        })
    }
}

// ---------------------------------------------------------------------------
// Seed sampling
// ---------------------------------------------------------------------------

/// Degree-biased sampler over the labeled node set: node u is drawn with
/// probability d_u / sum of labeled out-degrees.
#[derive(Clone, Debug)]
pub struct SeedSampler {
    pub ids: Vec<NodeId>,
    pub degrees: Vec<usize>,
    pub probs: Vec<f64>,
}

impl SeedSampler {
    pub fn new(graph: &Graph, labeled: &[NodeId]) -> Result<Self, PartitionError> {
        if labeled.is_empty() {
            return Err(PartitionError::NoLabeled);
        }
        for &id in labeled {
            if id >= graph.num_nodes() {
                return Err(PartitionError::LabeledOutOfRange {
                    id,
                    num_nodes: graph.num_nodes(),
                });
            }
        }
        let ids = labeled.to_vec();
        let degrees: Vec<usize> = ids.iter().map(|&u| graph.out_degree(u)).collect();
        let total: usize = degrees.iter().sum();
        let probs = if total == 0 {
            // All labeled degrees zero: uniform fallback.
            vec![1.0 / ids.len() as f64; ids.len()]
        } else {
            degrees.iter().map(|&d| d as f64 / total as f64).collect()
        };
        Ok(SeedSampler {
            ids,
            degrees,
            probs,
        })
    }

    /// Draws `k` distinct seeds without replacement. Zero-probability nodes
    /// become eligible (uniformly) only once all positive-probability nodes
    /// are taken.
    pub fn sample(&self, k: usize, rng: &mut Rng) -> Result<Vec<NodeId>, PartitionError> {
        if k > self.ids.len() {
            return Err(PartitionError::TooFewLabeled {
                k,
                labeled: self.ids.len(),
            });
        }
        let mut remaining: Vec<usize> = (0..self.ids.len()).collect();
        let mut weights: Vec<f64> = remaining.iter().map(|&i| self.probs[i]).collect();
        let mut seeds = Vec::with_capacity(k);
        for _ in 0..k {
            let total: f64 = weights.iter().sum();
            let pick = if total <= 0.0 {
                rng.below(remaining.len())
            } else {
                let x = rng.next_f64() * total;
                let mut acc = 0.0;
                let mut chosen = remaining.len() - 1;
                for (i, &w) in weights.iter().enumerate() {
                    acc += w;
                    if x < acc {
                        chosen = i;
                        break;
                    }
                }
                chosen
            };
            seeds.push(self.ids[remaining[pick]]);
            remaining.remove(pick);
            weights.remove(pick);
        }
        Ok(seeds)
    }
}

// ---------------------------------------------------------------------------
// Multi-seed flood fill
// ---------------------------------------------------------------------------

/// One queue visit: queue index, popped node, children claimed by that pop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PopEvent {
    pub queue: usize,
    pub node: NodeId,
    pub claimed: Vec<NodeId>,
}

/// Step-by-step record of a flood-fill run, for conformance checking.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FloodFillTrace {
    pub seeds: Vec<NodeId>,
    /// Per round: the visiting permutation and the pops it produced.
    pub rounds: Vec<(Vec<usize>, Vec<PopEvent>)>,
    /// Subgraph that received the unvisited leftovers, if any.
    pub leftover_target: Option<usize>,
    pub leftover: Vec<NodeId>,
}

pub fn flood_fill_partition(
    graph: &Graph,
    k: usize,
    labeled: &[NodeId],
    seed: u64,
) -> Result<Partition, PartitionError> {
    flood_fill_partition_traced(graph, k, labeled, seed).map(|(p, _)| p)
}

/// Flood fill with an instrumented trace.
///
/// Seeds are sampled from the labeled set biased by out-degree, each seed
/// starts its own FIFO queue, and rounds proceed until every queue drains:
/// each round permutes the queues uniformly at random, and every nonempty
/// queue pops exactly one node and claims that node's unvisited out-children.
/// Nodes never visited are finally assigned, all together, to the smallest
/// subgraph (ties to the lowest index).
pub fn flood_fill_partition_traced(
    graph: &Graph,
    k: usize,
    labeled: &[NodeId],
    seed: u64,
) -> Result<(Partition, FloodFillTrace), PartitionError> {
    if k == 0 {
        return Err(PartitionError::ZeroK);
    }
    let sampler = SeedSampler::new(graph, labeled)?;
    let mut rng = Rng::from_seed(seed);
    let seeds = sampler.sample(k, &mut rng)?;

    let n = graph.num_nodes();
    let mut visited = vec![false; n];
    let mut label = vec![0usize; n];
    let mut queues: Vec<VecDeque<NodeId>> = vec![VecDeque::new(); k];
    for (q, &s) in seeds.iter().enumerate() {
        queues[q].push_back(s);
        visited[s] = true;
        label[s] = q;
    }

    let mut trace = FloodFillTrace {
        seeds: seeds.clone(),
        ..FloodFillTrace::default()
    };

    while queues.iter().any(|q| !q.is_empty()) {
        let order = rng.permutation(k);
        let mut pops = Vec::new();
        for &q in &order {
            if let Some(u) = queues[q].pop_front() {
                let mut claimed = Vec::new();
                for &e in graph.out_edges(u) {
                    let v = graph.edge(e).dst;
                    if !visited[v] {
                        visited[v] = true;
                        label[v] = q;
                        queues[q].push_back(v);
                        claimed.push(v);
                    }
                }
                pops.push(PopEvent {
                    queue: q,
                    node: u,
                    claimed,
                });
            }
        }
        trace.rounds.push((order, pops));
    }

    let leftover: Vec<NodeId> = (0..n).filter(|&v| !visited[v]).collect();
    if !leftover.is_empty() {
        let mut sizes = vec![0usize; k];
        for v in 0..n {
            if visited[v] {
                sizes[label[v]] += 1;
            }
        }
        let smallest = sizes
            .iter()
            .enumerate()
            .min_by_key(|&(i, &s)| (s, i))
            .map(|(i, _)| i)
            .unwrap();
        for &v in &leftover {
            label[v] = smallest;
        }
        trace.leftover_target = Some(smallest);
        trace.leftover = leftover;
    }

    Ok((
        Partition {
            assignment: label,
            k,
            method: PartitionMethod::FloodFill,
            seed,
        },
        trace,
    ))
}

// ---------------------------------------------------------------------------
// Spectral partitioning
// ---------------------------------------------------------------------------

/// Random-walk normalized Laplacian `L = I - D^{-1} W` of the symmetrized
/// weight matrix. Rows of isolated nodes are identity rows.
#[derive(Clone, Debug)]
pub struct LaplacianMatrix {
    pub matrix: Matrix,
    pub degrees: Vec<f64>,
}

/// Symmetric weights: each directed edge (u,v) contributes 1 to W[u][v] and
/// W[v][u]; parallel edges accumulate as multiplicity.
fn symmetric_weights(graph: &Graph) -> Matrix {
    let n = graph.num_nodes();
    let mut w = Matrix::zeros(n, n);
    for e in graph.edges() {
        w.set(e.src, e.dst, w.get(e.src, e.dst) + 1.0);
        w.set(e.dst, e.src, w.get(e.dst, e.src) + 1.0);
    }
    w
}

pub fn random_walk_laplacian(graph: &Graph) -> LaplacianMatrix {
    let n = graph.num_nodes();
    let w = symmetric_weights(graph);
    let degrees: Vec<f64> = (0..n).map(|i| w.row(i).iter().sum()).collect();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        if degrees[i] > 0.0 {
            for j in 0..n {
                let v = if i == j { 1.0 } else { 0.0 };
                l.set(i, j, v - w.get(i, j) / degrees[i]);
            }
        } else {
            l.set(i, i, 1.0);
        }
    }
    LaplacianMatrix { matrix: l, degrees }
}

/// Eigenpairs of the random-walk Laplacian via the symmetrically normalized
/// form `I - D^{-1/2} W D^{-1/2}` (same spectrum, symmetric). Eigenvectors are
/// mapped back through `D^{-1/2}` and unit-normalized. Returns the `k`
/// smallest pairs, eigenvalues ascending.
pub fn laplacian_eigenpairs(graph: &Graph, k: usize) -> Result<(Vec<f64>, Matrix), PartitionError> {
    let n = graph.num_nodes();
    let w = symmetric_weights(graph);
    let degrees: Vec<f64> = (0..n).map(|i| w.row(i).iter().sum()).collect();
    let inv_sqrt: Vec<f64> = degrees
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut sym = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = if i == j { 1.0 } else { 0.0 };
            sym.set(i, j, v - inv_sqrt[i] * w.get(i, j) * inv_sqrt[j]);
        }
    }
    let (vals, vecs) = symmetric_eigen(&sym)?;
    let mut out = Matrix::zeros(n, k);
    for j in 0..k {
        let mut col: Vec<f64> = (0..n)
            .map(|i| {
                if degrees[i] > 0.0 {
                    vecs.get(i, j) * inv_sqrt[i]
                } else {
                    vecs.get(i, j)
                }
            })
            .collect();
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut col {
                *x /= norm;
            }
        }
        for i in 0..n {
            out.set(i, j, col[i]);
        }
    }
    Ok((vals[..k].to_vec(), out))
}

/// Normalized-cut spectral partition: embed nodes as rows of the matrix of
/// the `k` smallest Laplacian eigenvectors, then cluster rows with seeded
/// k-means++.
pub fn spectral_partition(graph: &Graph, k: usize, seed: u64) -> Result<Partition, PartitionError> {
    if k == 0 {
        return Err(PartitionError::ZeroK);
    }
    let n = graph.num_nodes();
    if k > n {
        return Err(PartitionError::TooFewNodes { k, nodes: n });
    }
    let assignment = if k == 1 {
        vec![0; n]
    } else {
        let (_, embedding) = laplacian_eigenpairs(graph, k)?;
        let mut rng = Rng::from_seed(seed);
        kmeans(&embedding, k, &mut rng)
    };
    Ok(Partition {
        assignment,
        k,
        method: PartitionMethod::Spectral,
        seed,
    })
}

/// Lloyd's k-means with k-means++ seeding. Single restart, at most 300
/// iterations, assignment ties broken toward the lowest cluster index.
/// Clusters that empty out steal the point farthest from its centroid.
fn kmeans(rows: &Matrix, k: usize, rng: &mut Rng) -> Vec<usize> {
    let n = rows.rows;
    let d = rows.cols;
    debug_assert!(k <= n);

    let dist2 =
        |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum() };

    // k-means++ seeding.
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(rows.row(rng.below(n)).to_vec());
    let mut d2: Vec<f64> = (0..n).map(|i| dist2(rows.row(i), &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total <= 0.0 {
            // All points coincide with a centroid; take the first free point.
            (0..n)
                .find(|&i| centroids.iter().all(|c| dist2(rows.row(i), c) > 0.0))
                .unwrap_or_else(|| rng.below(n))
        } else {
            let x = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if x < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(rows.row(idx).to_vec());
        for i in 0..n {
            let nd = dist2(rows.row(i), centroids.last().unwrap());
            if nd < d2[i] {
                d2[i] = nd;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for _ in 0..300 {
        let mut changed = false;
        for i in 0..n {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let dd = dist2(rows.row(i), centroid);
                if dd < best_d {
                    best_d = dd;
                    best = c;
                }
            }
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        // Refill empty clusters with the globally farthest point.
        loop {
            let mut counts = vec![0usize; k];
            for &a in &assignment {
                counts[a] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let far = (0..n)
                .max_by(|&a, &b| {
                    let da = dist2(rows.row(a), &centroids[assignment[a]]);
                    let db = dist2(rows.row(b), &centroids[assignment[b]]);
                    da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                })
                .unwrap();
            assignment[far] = empty;
            changed = true;
        }
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == c).collect();
            if members.is_empty() {
                continue;
            }
            for j in 0..d {
                centroid[j] =
                    members.iter().map(|&i| rows.get(i, j)).sum::<f64>() / members.len() as f64;
            }
        }
        if !changed {
            break;
        }
    }
    assignment
}

// ---------------------------------------------------------------------------
// Random edge phases
// ---------------------------------------------------------------------------

/// Chops a uniformly random permutation of the edge ids into `k` near-equal
/// consecutive chunks (sizes differ by at most one; earlier chunks take the
/// remainder). Chunks are disjoint and cover every edge id.
pub fn random_edge_phases(graph: &Graph, k: usize, seed: u64) -> Vec<Vec<EdgeId>> {
    assert!(k >= 1, "k must be at least 1");
    let m = graph.num_edges();
    let mut ids: Vec<EdgeId> = (0..m).collect();
    let mut rng = Rng::from_seed(seed);
    rng.shuffle(&mut ids);
    let base = m / k;
    let rem = m % k;
    let mut chunks = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = base + usize::from(i < rem);
        chunks.push(ids[start..start + len].to_vec());
        start += len;
    }
    chunks
}

// ---------------------------------------------------------------------------
// Stats
// ---------------------------------------------------------------------------

/// Per-partition report; `max_subgraph_diameter` is the default intra step
/// count for partition schedules.
#[derive(Clone, Debug, Serialize)]
pub struct PartitionStats {
    pub k: usize,
    pub sizes: Vec<usize>,
    pub cut_size: usize,
    pub subgraph_diameters: Vec<usize>,
    pub max_subgraph_diameter: usize,
}

pub fn partition_stats(
    graph: &Graph,
    partition: &Partition,
) -> Result<PartitionStats, PartitionError> {
    let view = partition.view(graph)?;
    let mut sizes = vec![0usize; partition.k];
    for &s in &partition.assignment {
        sizes[s] += 1;
    }

    let mut subgraph_diameters = Vec::with_capacity(partition.k);
    for k in 0..partition.k {
        // BFS restricted to the subgraph's own edges.
        let nodes: Vec<NodeId> = (0..graph.num_nodes())
            .filter(|&v| partition.assignment[v] == k)
            .collect();
        let mut local_adj: std::collections::HashMap<NodeId, Vec<NodeId>> =
            nodes.iter().map(|&v| (v, Vec::new())).collect();
        for &e in &view.subgraph_edges[k] {
            let edge = graph.edge(e);
            local_adj.get_mut(&edge.src).unwrap().push(edge.dst);
        }
        let mut diameter = 0;
        for &src in &nodes {
            let mut dist: std::collections::HashMap<NodeId, usize> =
                std::collections::HashMap::new();
            dist.insert(src, 0);
            let mut queue = VecDeque::new();
            queue.push_back(src);
            while let Some(u) = queue.pop_front() {
                let du = dist[&u];
                for &v in &local_adj[&u] {
                    if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(v) {
                        e.insert(du + 1);
                        queue.push_back(v);
                    }
                }
            }
            diameter = diameter.max(dist.values().copied().max().unwrap_or(0));
        }
        subgraph_diameters.push(diameter);
    }

    Ok(PartitionStats {
        k: partition.k,
        sizes,
        cut_size: view.cut_edges.len(),
        max_subgraph_diameter: subgraph_diameters.iter().copied().max().unwrap_or(0),
        subgraph_diameters,
    })
}
