use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::{GraphSnapshot, Route};
use crate::error::{Error, Result};
use crate::math;

/// Node counts per BFS depth. When some nodes are unreachable from every root,
/// the last entry is the fallback layer holding them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShellProfile {
    pub shell_sizes: Vec<usize>,
    pub fallback_count: usize,
}

impl ShellProfile {
    pub fn total(&self) -> usize {
        self.shell_sizes.iter().sum()
    }
}

/// Multi-source BFS from the in-degree-zero nodes (or the smallest id when every
/// node has an in-edge). Unreachable nodes share one layer at depth `max_k + 1`.
pub fn bfs_shells(g: &GraphSnapshot) -> Result<ShellProfile> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut roots: Vec<usize> = (0..n).filter(|&i| g.in_degree(i) == 0).collect();
    if roots.is_empty() {
        roots.push(0);
    }
    let mut depth = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for &r in &roots {
        depth[r] = 0;
        queue.push_back(r);
    }
    while let Some(u) = queue.pop_front() {
        for &(v, _) in g.out_neighbors(u) {
            if depth[v] == usize::MAX {
                depth[v] = depth[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let max_depth = depth.iter().copied().filter(|&d| d != usize::MAX).max().unwrap_or(0);
    let mut shell_sizes = vec![0usize; max_depth + 1];
    let mut fallback_count = 0;
    for &d in &depth {
        if d == usize::MAX {
            fallback_count += 1;
        } else {
            shell_sizes[d] += 1;
        }
    }
    if fallback_count > 0 {
        shell_sizes.push(fallback_count);
    }
    Ok(ShellProfile { shell_sizes, fallback_count })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellGrowth {
    /// OLS slope of `ln(|V_k| + 1)` on depth `k`.
    pub gamma_hat: f64,
    /// `tanh(max(0, gamma_hat))`.
    pub phi: f64,
}

pub fn shell_growth_slope(p: &ShellProfile) -> ShellGrowth {
    let xs: Vec<f64> = (0..p.shell_sizes.len()).map(|k| k as f64).collect();
    let ys: Vec<f64> = p.shell_sizes.iter().map(|&s| math::ln(s as f64 + 1.0)).collect();
    let gamma_hat = math::ols_slope(&xs, &ys);
    ShellGrowth { gamma_hat, phi: math::tanh(gamma_hat.max(0.0)) }
}

/// Connected components of the undirected projection as a per-node label, plus the count.
pub fn connected_components(g: &GraphSnapshot) -> (Vec<usize>, usize) {
    let n = g.node_count();
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = count;
        stack.push(s);
        while let Some(u) = stack.pop() {
            for &v in g.undirected_neighbors(u) {
                if label[v] == usize::MAX {
                    label[v] = count;
                    stack.push(v);
                }
            }
        }
        count += 1;
    }
    (label, count)
}

/// `(|E_und| - |V| + C) / |V|`, clamped to `[0, 1]`. Zero for an empty graph.
pub fn cycle_rank_norm(g: &GraphSnapshot) -> f64 {
    let n = g.node_count();
    if n == 0 {
        return 0.0;
    }
    let (_, c) = connected_components(g);
    let rank = g.undirected_edge_count() + c - n;
    math::clamp01(rank as f64 / n as f64)
}

/// Global clustering coefficient of the undirected projection:
/// closed connected triplets over all connected triplets.
pub fn triangle_density(g: &GraphSnapshot) -> f64 {
    let mut closed = 0u64;
    let mut triplets = 0u64;
    for u in 0..g.node_count() {
        let nb = g.undirected_neighbors(u);
        let k = nb.len() as u64;
        triplets += k * k.saturating_sub(1) / 2;
        for (a, &v) in nb.iter().enumerate() {
            for &w in &nb[a + 1..] {
                if g.undirected_neighbors(v).binary_search(&w).is_ok() {
                    closed += 1;
                }
            }
        }
    }
    if triplets == 0 {
        0.0
    } else {
        closed as f64 / triplets as f64
    }
}

/// Fraction of directed edges whose reverse edge also exists.
pub fn reciprocal_ratio(g: &GraphSnapshot) -> f64 {
    let m = g.edge_count();
    if m == 0 {
        return 0.0;
    }
    let paired = g.edges().iter().filter(|e| g.has_edge(e.dst, e.src)).count();
    paired as f64 / m as f64
}

/// Induced subgraph on the route's nodes, keeping attributes and the timestamp.
pub fn route_subgraph(g: &GraphSnapshot, r: &Route) -> Result<GraphSnapshot> {
    r.indices_in(g)?;
    let nodes = g.nodes().iter().filter(|n| r.contains(n.id)).copied().collect();
    let edges = g
        .edges()
        .iter()
        .filter(|e| r.contains(e.src) && r.contains(e.dst))
        .copied()
        .collect();
    GraphSnapshot::new(g.timestamp(), nodes, edges)
}

/// Hop distances on the undirected projection from every node; `usize::MAX` marks
/// unreachable pairs. Row-major `n x n`.
pub fn all_pairs_hops(g: &GraphSnapshot) -> Vec<usize> {
    let n = g.node_count();
    let mut dist = vec![usize::MAX; n * n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        let row = &mut dist[s * n..(s + 1) * n];
        row[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in g.undirected_neighbors(u) {
                if row[v] == usize::MAX {
                    row[v] = row[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, NodeAttrs};

    pub(crate) fn graph(n: u32, edges: &[(u32, u32)]) -> GraphSnapshot {
        GraphSnapshot::new(
            0.0,
            (0..n).map(|i| NodeAttrs::new(i, 0.0, 1.0)).collect(),
            edges.iter().map(|&(s, d)| Edge::new(s, d, 1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn shells_of_binary_tree() {
        let g = graph(7, &[(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)]);
        let p = bfs_shells(&g).unwrap();
        assert_eq!(p.shell_sizes, vec![1, 2, 4]);
        assert_eq!(p.fallback_count, 0);
    }

    #[test]
    fn unreachable_cycle_goes_to_fallback_layer() {
        // r=0 -> x=1, c1=2 <-> c2=3
        let g = graph(4, &[(0, 1), (2, 3), (3, 2)]);
        let p = bfs_shells(&g).unwrap();
        assert_eq!(p.shell_sizes, vec![1, 1, 2]);
        assert_eq!(p.fallback_count, 2);
    }

    #[test]
    fn shells_single_node_and_empty() {
        assert_eq!(bfs_shells(&graph(1, &[])).unwrap().shell_sizes, vec![1]);
        let empty = GraphSnapshot::new(0.0, vec![], vec![]).unwrap();
        assert_eq!(bfs_shells(&empty), Err(Error::EmptyGraph));
    }

    #[test]
    fn all_cyclic_graph_roots_at_smallest_id() {
        let g = graph(3, &[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(bfs_shells(&g).unwrap().shell_sizes, vec![1, 1, 1]);
    }

    #[test]
    fn shell_slope_examples() {
        // Independent oracle: slope through (k, ln(s+1)) written out by hand.
        let ys = [2f64.ln(), 3f64.ln(), 5f64.ln(), 9f64.ln()];
        let oracle = (-1.5 * ys[0] - 0.5 * ys[1] + 0.5 * ys[2] + 1.5 * ys[3]) / 5.0;
        let s = shell_growth_slope(&ShellProfile { shell_sizes: vec![1, 2, 4, 8], fallback_count: 0 });
        assert!((s.gamma_hat - oracle).abs() < 1e-12);
        assert!((s.gamma_hat - 0.502).abs() < 1e-3);
        assert!((s.phi - 0.464).abs() < 1e-3);

        let flat = shell_growth_slope(&ShellProfile { shell_sizes: vec![1, 1, 1], fallback_count: 0 });
        assert_eq!((flat.gamma_hat, flat.phi), (0.0, 0.0));

        let shrinking = shell_growth_slope(&ShellProfile { shell_sizes: vec![4, 2, 1], fallback_count: 0 });
        assert!(shrinking.gamma_hat < 0.0);
        assert_eq!(shrinking.phi, 0.0);

        let single = shell_growth_slope(&ShellProfile { shell_sizes: vec![5], fallback_count: 0 });
        assert_eq!(single.gamma_hat, 0.0);
    }

    #[test]
    fn cycle_rank_examples() {
        assert_eq!(cycle_rank_norm(&graph(4, &[(0, 1), (1, 2), (1, 3)])), 0.0);
        assert!((cycle_rank_norm(&graph(3, &[(0, 1), (1, 2), (2, 0)])) - 1.0 / 3.0).abs() < 1e-15);
        let two = graph(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]);
        assert!((cycle_rank_norm(&two) - 1.0 / 3.0).abs() < 1e-15);
        // a reciprocal pair is one undirected edge
        assert_eq!(cycle_rank_norm(&graph(2, &[(0, 1), (1, 0)])), 0.0);
    }

    #[test]
    fn triangle_density_examples() {
        assert_eq!(triangle_density(&graph(3, &[(0, 1), (1, 2), (2, 0)])), 1.0);
        assert_eq!(triangle_density(&graph(4, &[(0, 1), (0, 2), (0, 3)])), 0.0);
        let pendant = graph(4, &[(0, 1), (1, 2), (2, 0), (2, 3)]);
        assert!((triangle_density(&pendant) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn reciprocal_ratio_examples() {
        assert_eq!(reciprocal_ratio(&graph(2, &[(0, 1), (1, 0)])), 1.0);
        assert_eq!(reciprocal_ratio(&graph(3, &[(0, 1), (1, 2), (0, 2)])), 0.0);
        assert!((reciprocal_ratio(&graph(3, &[(0, 1), (1, 0), (0, 2)])) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(reciprocal_ratio(&graph(2, &[])), 0.0);
    }

    #[test]
    fn route_subgraph_examples() {
        let g = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let full = route_subgraph(&g, &Route::from_ids(0, &[0, 1, 2]).unwrap()).unwrap();
        assert_eq!(full, g);
        let one = route_subgraph(&g, &Route::from_ids(0, &[1]).unwrap()).unwrap();
        assert_eq!((one.node_count(), one.edge_count()), (1, 0));
        let chain = route_subgraph(&g, &Route::from_ids(0, &[0, 1, 2]).unwrap()).unwrap();
        assert_eq!((chain.node_count(), chain.edge_count()), (3, 3));
        assert!(matches!(
            route_subgraph(&g, &Route::from_ids(0, &[0, 9]).unwrap()),
            Err(Error::RouteNodeMissing(_))
        ));
    }

    #[test]
    fn hop_distances_on_path() {
        let g = graph(4, &[(0, 1), (2, 1)]);
        let d = all_pairs_hops(&g);
        assert_eq!(d[2], 2);
        assert_eq!(d[3], usize::MAX);
    }
}
