//! Directed typed multigraph and its derived views.
//!
//! Nodes, edges and edge types are dense 0-based ids. Edge ids are stable:
//! edge `i` is the `i`-th record of the source edge list. Duplicate edges are
//! kept; every downstream count is per edge instance.

use thiserror::Error;

pub type NodeId = usize;
pub type EdgeId = usize;
pub type EdgeTypeId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("{message} at line {line}")]
    Parse { line: usize, message: String },
    #[error("node id {id} out of range (num_nodes = {num_nodes})")]
    NodeOutOfRange { id: usize, num_nodes: usize },
    #[error("edge type {etype} out of range (num_edge_types = {num_edge_types})")]
    EdgeTypeOutOfRange { etype: usize, num_edge_types: usize },
    #[error("assignment covers {got} nodes, graph has {expected}")]
    PartialAssignment { got: usize, expected: usize },
    #[error("subgraph id {id} out of range (k = {k})")]
    SubgraphOutOfRange { id: usize, k: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub etype: EdgeTypeId,
}

/// Directed multigraph with integer edge types and prebuilt adjacency indices.
/// Immutable after construction; all queries are read-only.
#[derive(Clone, Debug)]
pub struct Graph {
    num_nodes: usize,
    num_edge_types: usize,
    edges: Vec<Edge>,
    out_adj: Vec<Vec<EdgeId>>,
    in_adj: Vec<Vec<EdgeId>>,
}

impl Graph {
    pub fn build(
        num_nodes: usize,
        num_edge_types: usize,
        edges: Vec<(NodeId, NodeId, EdgeTypeId)>,
    ) -> Result<Self, GraphError> {
        let mut es = Vec::with_capacity(edges.len());
        for (src, dst, etype) in edges {
            if src >= num_nodes {
                return Err(GraphError::NodeOutOfRange { id: src, num_nodes });
            }
            if dst >= num_nodes {
                return Err(GraphError::NodeOutOfRange { id: dst, num_nodes });
            }
            if etype >= num_edge_types {
                return Err(GraphError::EdgeTypeOutOfRange {
                    etype,
                    num_edge_types,
                });
            }
            es.push(Edge { src, dst, etype });
        }
        Ok(Self::from_checked(num_nodes, num_edge_types, es))
    }

    fn from_checked(num_nodes: usize, num_edge_types: usize, edges: Vec<Edge>) -> Self {
        let mut out_adj = vec![Vec::new(); num_nodes];
        let mut in_adj = vec![Vec::new(); num_nodes];
        for (id, e) in edges.iter().enumerate() {
            out_adj[e.src].push(id);
            in_adj[e.dst].push(id);
        }
        Graph {
            num_nodes,
            num_edge_types,
            edges,
            out_adj,
            in_adj,
        }
    }

    /// Parses the edge-list text format: one `src dst etype` record per line
    /// (any whitespace separator), `#` comment lines ignored, optional first
    /// record `nodes=N types=C`. Counts not fixed by a header or by the caller
    /// are inferred as max id + 1.
    pub fn parse_edge_list(
        text: &str,
        num_nodes: Option<usize>,
        num_edge_types: Option<usize>,
    ) -> Result<Self, GraphError> {
        let mut header_nodes = None;
        let mut header_types = None;
        let mut records: Vec<(usize, NodeId, NodeId, EdgeTypeId)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with("nodes=") {
                for part in line.split_whitespace() {
                    if let Some(v) = part.strip_prefix("nodes=") {
                        header_nodes = Some(v.parse::<usize>().map_err(|_| GraphError::Parse {
                            line: line_no,
                            message: format!("bad node count '{v}'"),
                        })?);
                    } else if let Some(v) = part.strip_prefix("types=") {
                        header_types = Some(v.parse::<usize>().map_err(|_| GraphError::Parse {
                            line: line_no,
                            message: format!("bad type count '{v}'"),
                        })?);
                    } else {
                        return Err(GraphError::Parse {
                            line: line_no,
                            message: format!("unexpected header field '{part}'"),
                        });
                    }
                }
                continue;
            }
            let mut it = line.split_whitespace();
            let mut next_field = |name: &str| -> Result<usize, GraphError> {
                let tok = it.next().ok_or_else(|| GraphError::Parse {
                    line: line_no,
                    message: format!("missing {name}"),
                })?;
                tok.parse::<usize>().map_err(|_| GraphError::Parse {
                    line: line_no,
                    message: format!("bad {name} '{tok}'"),
                })
            };
            let src = next_field("src")?;
            let dst = next_field("dst")?;
            let etype = next_field("etype")?;
            if it.next().is_some() {
                return Err(GraphError::Parse {
                    line: line_no,
                    message: "trailing fields".to_string(),
                });
            }
            records.push((line_no, src, dst, etype));
        }

        let n = num_nodes.or(header_nodes).unwrap_or_else(|| {
            records
                .iter()
                .map(|&(_, s, d, _)| s.max(d) + 1)
                .max()
                .unwrap_or(0)
        });
        let c = num_edge_types
            .or(header_types)
            .unwrap_or_else(|| records.iter().map(|&(_, _, _, t)| t + 1).max().unwrap_or(1));

        let mut edges = Vec::with_capacity(records.len());
        for (line, src, dst, etype) in records {
            for &id in &[src, dst] {
                if id >= n {
                    return Err(GraphError::Parse {
                        line,
                        message: format!("node id {id} out of range"),
                    });
                }
            }
            if etype >= c {
                return Err(GraphError::Parse {
                    line,
                    message: format!("edge type {etype} out of range"),
                });
            }
            edges.push(Edge { src, dst, etype });
        }
        Ok(Self::from_checked(n, c, edges))
    }

    /// Serializes to the edge-list text format with a header line.
    pub fn to_edge_list_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "nodes={} types={}\n",
            self.num_nodes, self.num_edge_types
        ));
        for e in &self.edges {
            out.push_str(&format!("{}\t{}\t{}\n", e.src, e.dst, e.etype));
        }
        out
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_edge_types(&self) -> usize {
        self.num_edge_types
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Edge {
        self.edges[id]
    }

    /// Out-edge ids of `v`, in edge-id order.
    pub fn out_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.out_adj[v]
    }

    /// In-edge ids of `v`, in edge-id order.
    pub fn in_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.in_adj[v]
    }

    pub fn out_neighbors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.out_adj[v].iter().map(move |&e| self.edges[e].dst)
    }

    pub fn out_degree(&self, v: NodeId) -> usize {
        self.out_adj[v].len()
    }

    /// Interprets this graph's edge list as undirected and returns the graph
    /// with each record split into both directions. Nothing is deduplicated:
    /// a reverse edge already present yields a parallel pair, and self-loops
    /// are doubled.
    pub fn bidirect(&self) -> Graph {
        let mut edges = Vec::with_capacity(self.edges.len() * 2);
        for e in &self.edges {
            edges.push(*e);
            edges.push(Edge {
                src: e.dst,
                dst: e.src,
                etype: e.etype,
            });
        }
        Self::from_checked(self.num_nodes, self.num_edge_types, edges)
    }

    /// BFS hop distances from `src`; `usize::MAX` marks unreachable nodes.
    pub fn bfs_distances(&self, src: NodeId) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.num_nodes];
        dist[src] = 0;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u];
            for &e in &self.out_adj[u] {
                let v = self.edges[e].dst;
                if dist[v] == usize::MAX {
                    dist[v] = du + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Directed diameter over reachable ordered pairs, with per-source
    /// eccentricities and a strong-connectivity flag.
    pub fn diameter(&self) -> DiameterReport {
        let mut diameter = 0;
        let mut eccentricities = vec![0; self.num_nodes];
        let mut strongly_connected = true;
        for v in 0..self.num_nodes {
            let dist = self.bfs_distances(v);
            let mut ecc = 0;
            let mut reached = 0;
            for &d in &dist {
                if d != usize::MAX {
                    reached += 1;
                    ecc = ecc.max(d);
                }
            }
            if reached != self.num_nodes {
                strongly_connected = false;
            }
            eccentricities[v] = ecc;
            diameter = diameter.max(ecc);
        }
        DiameterReport {
            diameter,
            eccentricities,
            strongly_connected,
        }
    }

    /// Splits edge ids by a total node assignment: edge (u,v) lands in
    /// subgraph k iff both endpoints map to k, otherwise in the cut.
    pub fn partition_view(
        &self,
        assignment: &[usize],
        k: usize,
    ) -> Result<PartitionView, GraphError> {
        if assignment.len() != self.num_nodes {
            return Err(GraphError::PartialAssignment {
                got: assignment.len(),
                expected: self.num_nodes,
            });
        }
        for &s in assignment {
            if s >= k {
                return Err(GraphError::SubgraphOutOfRange { id: s, k });
            }
        }
        let mut subgraph_edges = vec![Vec::new(); k];
        let mut cut_edges = Vec::new();
        for (id, e) in self.edges.iter().enumerate() {
            let a = assignment[e.src];
            let b = assignment[e.dst];
            if a == b {
                subgraph_edges[a].push(id);
            } else {
                cut_edges.push(id);
            }
        }
        Ok(PartitionView {
            k,
            subgraph_edges,
            cut_edges,
        })
    }
}

/// Result of [`Graph::diameter`].
#[derive(Clone, Debug)]
pub struct DiameterReport {
    pub diameter: usize,
    pub eccentricities: Vec<usize>,
    pub strongly_connected: bool,
}

/// Edge ids split into induced subgraph sets and the cut set. Sets are
/// pairwise disjoint and together cover every edge id.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionView {
    pub k: usize,
    pub subgraph_edges: Vec<Vec<EdgeId>>,
    pub cut_edges: Vec<EdgeId>,
}

impl PartitionView {
    pub fn total_subgraph_edges(&self) -> usize {
        self.subgraph_edges.iter().map(Vec::len).sum()
    }

    /// Union of all subgraph edge sets, ascending.
    pub fn intra_edges(&self) -> Vec<EdgeId> {
        let mut all: Vec<EdgeId> = self
            .subgraph_edges
            .iter()
            .flat_map(|s| s.iter().copied())
            .collect();
        all.sort_unstable();
        all
    }
}
