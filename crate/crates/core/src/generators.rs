//! Synthetic graph families: chain, cycle, grid and stochastic block model.
//! All are emitted bidirected with a single edge type.

use crate::graph::Graph;
use crate::rng::Rng;

/// Bidirected path on `n` nodes.
pub fn chain_graph(n: usize) -> Graph {
    let edges: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1, 0)).collect();
    Graph::build(n, 1, edges).unwrap().bidirect()
}

/// Bidirected cycle on `n` nodes (a chain for `n < 3`).
pub fn cycle_graph(n: usize) -> Graph {
    let mut edges: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1, 0)).collect();
    if n >= 3 {
        edges.push((n - 1, 0, 0));
    }
    Graph::build(n, 1, edges).unwrap().bidirect()
}

/// Bidirected 4-neighbor grid with `rows * cols` nodes, row-major ids.
pub fn grid_graph(rows: usize, cols: usize) -> Graph {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1, 0));
            }
            if r + 1 < rows {
                edges.push((v, v + cols, 0));
            }
        }
    }
    Graph::build(rows * cols, 1, edges).unwrap().bidirect()
}

/// Stochastic block model graph: nodes split into `num_blocks` near-equal
/// blocks (sizes differ by at most one, block of node v = block_of(v)), each
/// unordered pair {u, v} drawn independently with probability `p_in` inside a
/// block and `p_out` across, then bidirected. No self-loops.
pub fn sbm_graph(
    num_nodes: usize,
    num_blocks: usize,
    p_in: f64,
    p_out: f64,
    rng: &mut Rng,
) -> Graph {
    let mut edges = Vec::new();
    for u in 0..num_nodes {
        for v in (u + 1)..num_nodes {
            let p = if sbm_block_of(u, num_nodes, num_blocks)
                == sbm_block_of(v, num_nodes, num_blocks)
            {
                p_in
            } else {
                p_out
            };
            if rng.bernoulli(p) {
                edges.push((u, v, 0));
            }
        }
    }
    Graph::build(num_nodes, 1, edges).unwrap().bidirect()
}

/// Block id of `v` when `num_nodes` nodes are split into `num_blocks`
/// consecutive near-equal blocks (first `num_nodes % num_blocks` blocks get
/// the extra node).
pub fn sbm_block_of(v: usize, num_nodes: usize, num_blocks: usize) -> usize {
    let base = num_nodes / num_blocks;
    let rem = num_nodes % num_blocks;
    let big = (base + 1) * rem;
    if v < big {
        v / (base + 1)
    } else {
        rem + (v - big) / base.max(1)
    }
}
