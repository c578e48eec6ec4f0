//! Monte-Carlo cascades on expansion trees: shell infection counts against the
//! branching-process expectation `(b·p)^r` and the threshold `p = e^{-γ}`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::graph::{Edge, GraphSnapshot, NodeAttrs, NodeId};
use crate::math;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct CascadeConfig {
    pub branching: f64,
    pub depth: usize,
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self { branching: 2.0, depth: 6, p: 0.5, trials: 100_000, seed: 0 }
    }
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.branching >= 1.0) || !self.branching.is_finite() {
            return Err(Error::OutOfRange { what: "branching", value: self.branching });
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::OutOfRange { what: "transmission probability", value: self.p });
        }
        if self.depth == 0 || self.trials == 0 {
            return Err(Error::InvalidInput("cascade depth and trials must be at least 1"));
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        math::ln(self.branching)
    }

    pub fn analytic_threshold(&self) -> f64 {
        1.0 / self.branching
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionTree {
    pub graph: GraphSnapshot,
    pub shell_sizes: Vec<usize>,
}

/// Rooted tree with `round(b^k)` nodes in shell `k`, each attached to a parent in shell
/// `k − 1` chosen round-robin. Node ids are assigned shell by shell starting at the root `0`.
pub fn generate_expansion_tree(b: f64, depth: usize) -> Result<ExpansionTree> {
    if !(b >= 1.0) || !b.is_finite() {
        return Err(Error::OutOfRange { what: "branching", value: b });
    }
    let shell_sizes: Vec<usize> = (0..=depth).map(|k| math::round(math::powf(b, k as f64)) as usize).collect();
    let total: usize = shell_sizes.iter().sum();
    let nodes = (0..total as u32).map(|i| NodeAttrs::new(i, 0.0, 1.0)).collect();
    let mut edges = Vec::with_capacity(total.saturating_sub(1));
    let mut prev_start = 0usize;
    let mut start = 1usize;
    for k in 1..=depth {
        let prev = shell_sizes[k - 1];
        for j in 0..shell_sizes[k] {
            edges.push(Edge::new((prev_start + j % prev) as u32, (start + j) as u32, 1.0));
        }
        prev_start = start;
        start += shell_sizes[k];
    }
    Ok(ExpansionTree { graph: GraphSnapshot::new(0.0, nodes, edges)?, shell_sizes })
}

/// Shell structure reachable from a root along directed edges, as used by the simulator.
#[derive(Debug, Clone)]
pub struct CascadePlan {
    /// Children of each local node in the next shell (CSR layout).
    offsets: Vec<usize>,
    children: Vec<u32>,
    depth_of: Vec<u32>,
    pub shell_sizes: Vec<usize>,
}

impl CascadePlan {
    pub fn new(g: &GraphSnapshot, root: NodeId) -> Result<Self> {
        let r = g.index_of(root).ok_or(Error::UnknownNode(root))?;
        let n = g.node_count();
        let mut depth = vec![u32::MAX; n];
        depth[r] = 0;
        let mut order = vec![r];
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &(v, _) in g.out_neighbors(u) {
                if depth[v] == u32::MAX {
                    depth[v] = depth[u] + 1;
                    order.push(v);
                }
            }
        }
        // local ids follow BFS order so that shells are contiguous
        let mut local = vec![u32::MAX; n];
        for (i, &u) in order.iter().enumerate() {
            local[u] = i as u32;
        }
        let mut offsets = Vec::with_capacity(order.len() + 1);
        let mut children = Vec::new();
        let mut depth_of = Vec::with_capacity(order.len());
        offsets.push(0);
        for &u in &order {
            for &(v, _) in g.out_neighbors(u) {
                if depth[v] == depth[u] + 1 {
                    children.push(local[v]);
                }
            }
            offsets.push(children.len());
            depth_of.push(depth[u]);
        }
        let max_depth = *depth_of.last().unwrap_or(&0) as usize;
        let mut shell_sizes = vec![0; max_depth + 1];
        depth_of.iter().for_each(|&d| shell_sizes[d as usize] += 1);
        Ok(Self { offsets, children, depth_of, shell_sizes })
    }

    pub fn depth(&self) -> usize {
        self.shell_sizes.len() - 1
    }
}

/// Integer per-shell sums over a batch of trials; batches merge by addition.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CascadeTally {
    pub trials: u64,
    pub sum: Vec<u64>,
    pub sum_sq: Vec<u128>,
}

impl CascadeTally {
    pub fn merge(&mut self, other: &CascadeTally) {
        if self.sum.len() < other.sum.len() {
            self.sum.resize(other.sum.len(), 0);
            self.sum_sq.resize(other.sum_sq.len(), 0);
        }
        self.trials += other.trials;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
    }

    pub fn stats(&self) -> CascadeStats {
        let t = self.trials as f64;
        let mean: Vec<f64> = self.sum.iter().map(|&s| s as f64 / t).collect();
        let std_err = self
            .sum_sq
            .iter()
            .zip(&mean)
            .map(|(&sq, &m)| {
                if self.trials < 2 {
                    return 0.0;
                }
                let var = ((sq as f64) - t * m * m).max(0.0) / (t - 1.0);
                math::sqrt(var / t)
            })
            .collect();
        CascadeStats { trials: self.trials, mean, std_err }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeStats {
    pub trials: u64,
    /// Mean infected count per shell, shell 0 being the root.
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
}

#[inline]
fn transmits(r: &mut rng::DetRng, threshold: u64, always: bool) -> bool {
    always || r.next_u64() < threshold
}

/// Runs trials `range` (trial `i` uses its own seed derived from `seed` and `i`).
pub fn simulate_range(plan: &CascadePlan, p: f64, seed: u64, range: Range<u64>) -> CascadeTally {
    let shells = plan.shell_sizes.len();
    let always = p >= 1.0;
    // P(next_u64 < threshold) = p up to 2^-64
    let threshold = (p.clamp(0.0, 1.0) * 18_446_744_073_709_551_616.0) as u64;
    let mut tally = CascadeTally { trials: 0, sum: vec![0; shells], sum_sq: vec![0; shells] };
    let mut counts = vec![0u64; shells];
    let mut frontier: Vec<u32> = Vec::new();
    let mut next: Vec<u32> = Vec::new();
    for trial in range {
        let mut r = rng::rng(rng::derive_seed(seed, trial));
        counts.iter_mut().for_each(|c| *c = 0);
        frontier.clear();
        frontier.push(0);
        counts[0] = 1;
        while !frontier.is_empty() {
            next.clear();
            for &u in &frontier {
                let u = u as usize;
                for &v in &plan.children[plan.offsets[u]..plan.offsets[u + 1]] {
                    if p > 0.0 && transmits(&mut r, threshold, always) {
                        next.push(v);
                    }
                }
            }
            if let Some(&v) = next.first() {
                counts[plan.depth_of[v as usize] as usize] += next.len() as u64;
            }
            core::mem::swap(&mut frontier, &mut next);
        }
        tally.trials += 1;
        for (k, &c) in counts.iter().enumerate() {
            tally.sum[k] += c;
            tally.sum_sq[k] += (c as u128) * (c as u128);
        }
    }
    tally
}

/// Mean shell infections over `trials` independent cascades from `root`.
pub fn simulate_cascade(g: &GraphSnapshot, root: NodeId, p: f64, trials: u64, seed: u64) -> Result<CascadeStats> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange { what: "transmission probability", value: p });
    }
    let plan = CascadePlan::new(g, root)?;
    Ok(simulate_range(&plan, p, seed, 0..trials).stats())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

impl Criticality {
    pub const EPSILON: f64 = 0.05;

    pub fn classify(slope: f64) -> Self {
        if slope > Self::EPSILON {
            Self::Supercritical
        } else if slope < -Self::EPSILON {
            Self::Subcritical
        } else {
            Self::Critical
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Subcritical => "subcritical",
            Self::Critical => "critical",
            Self::Supercritical => "supercritical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CriticalityRow {
    pub b: f64,
    pub p: f64,
    pub slope: f64,
    pub classification: Criticality,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CriticalityReport {
    pub rows: Vec<CriticalityRow>,
    pub analytic_threshold: f64,
    /// Where the fitted slope first crosses zero along the grid (linear interpolation).
    pub empirical_threshold: Option<f64>,
}

/// OLS slope of `ln(mean N_r)` on `r` over shells with a positive mean.
pub fn growth_slope(mean: &[f64]) -> f64 {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        mean.iter().enumerate().filter(|(_, &m)| m > 0.0).map(|(r, &m)| (r as f64, math::ln(m))).unzip();
    if xs.len() < 2 {
        // nothing spread past the root
        return f64::NEG_INFINITY;
    }
    math::ols_slope(&xs, &ys)
}

/// Sweeps `p_grid` on the `b`-expansion tree of the given depth and classifies each growth rate.
pub fn criticality_report(b: f64, p_grid: &[f64], depth: usize, trials: u64, seed: u64) -> Result<CriticalityReport> {
    let cfg = CascadeConfig { branching: b, depth, p: 0.5, trials, seed };
    cfg.validate()?;
    if let Some(&p) = p_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::OutOfRange { what: "transmission probability", value: p });
    }
    let tree = generate_expansion_tree(b, depth)?;
    let plan = CascadePlan::new(&tree.graph, NodeId(0))?;
    let rows: Vec<CriticalityRow> = p_grid
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let stats = simulate_range(&plan, p, rng::derive_seed(seed, i as u64), 0..trials).stats();
            let slope = growth_slope(&stats.mean);
            CriticalityRow { b, p, slope, classification: Criticality::classify(slope) }
        })
        .collect();
    Ok(CriticalityReport {
        empirical_threshold: threshold_crossing(&rows),
        analytic_threshold: cfg.analytic_threshold(),
        rows,
    })
}

/// First grid interval (in ascending `p`) where the slope changes from `≤ 0` to `> 0`.
pub fn threshold_crossing(rows: &[CriticalityRow]) -> Option<f64> {
    let mut sorted: Vec<&CriticalityRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.p.total_cmp(&b.p));
    sorted.windows(2).find(|w| w[0].slope <= 0.0 && w[1].slope > 0.0).map(|w| {
        let (a, b) = (w[0], w[1]);
        if !a.slope.is_finite() {
            return b.p;
        }
        a.p + (b.p - a.p) * (-a.slope) / (b.slope - a.slope)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{bfs_shells, cycle_rank_norm};

    #[test]
    fn expansion_tree_shells() {
        let t = generate_expansion_tree(2.0, 3).unwrap();
        assert_eq!(t.shell_sizes, vec![1, 2, 4, 8]);
        assert_eq!(bfs_shells(&t.graph).unwrap().shell_sizes[..4], [1, 2, 4, 8]);
        assert_eq!(cycle_rank_norm(&t.graph), 0.0);
        assert_eq!(generate_expansion_tree(1.0, 5).unwrap().shell_sizes, vec![1; 6]);
        assert_eq!(generate_expansion_tree(3.0, 2).unwrap().shell_sizes, vec![1, 3, 9]);
        assert_eq!(generate_expansion_tree(1.5, 3).unwrap().shell_sizes, vec![1, 2, 2, 3]);
        assert!(generate_expansion_tree(0.5, 3).is_err());
    }

    #[test]
    fn certain_and_impossible_transmission() {
        let t = generate_expansion_tree(2.0, 5).unwrap();
        let s = simulate_cascade(&t.graph, NodeId(0), 1.0, 50, 1).unwrap();
        assert_eq!(s.mean, vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0]);
        assert!(s.std_err.iter().all(|&e| e == 0.0));
        let s = simulate_cascade(&t.graph, NodeId(0), 0.0, 50, 1).unwrap();
        assert_eq!(s.mean, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn critical_binary_tree_stays_flat() {
        let t = generate_expansion_tree(2.0, 6).unwrap();
        let s = simulate_cascade(&t.graph, NodeId(0), 0.5, 100_000, 7).unwrap();
        for (r, m) in s.mean.iter().enumerate() {
            assert!((m - 1.0).abs() <= 0.05, "shell {r}: {m}");
            assert!((m - 1.0).abs() <= 3.0 * s.std_err[r].max(1e-12) || r == 0, "shell {r}: {m} ± {}", s.std_err[r]);
        }
    }

    #[test]
    fn split_ranges_merge_to_the_whole() {
        let t = generate_expansion_tree(3.0, 4).unwrap();
        let plan = CascadePlan::new(&t.graph, NodeId(0)).unwrap();
        let whole = simulate_range(&plan, 0.4, 3, 0..1000);
        let mut parts = simulate_range(&plan, 0.4, 3, 600..1000);
        parts.merge(&simulate_range(&plan, 0.4, 3, 0..600));
        assert_eq!(whole, parts);
    }

    #[test]
    fn classification_and_crossing() {
        assert_eq!(Criticality::classify(0.2), Criticality::Supercritical);
        assert_eq!(Criticality::classify(0.0), Criticality::Critical);
        assert_eq!(Criticality::classify(-0.06), Criticality::Subcritical);
        let row = |p, slope| CriticalityRow { b: 2.0, p, slope, classification: Criticality::classify(slope) };
        let rows = [row(0.4, -0.2), row(0.5, -0.1), row(0.6, 0.1)];
        assert!((threshold_crossing(&rows).unwrap() - 0.55).abs() < 1e-12);
        assert_eq!(threshold_crossing(&rows[..2]), None);
    }

    #[test]
    fn report_marks_certain_spread_supercritical() {
        let rep = criticality_report(3.0, &[0.0, 1.0], 4, 200, 1).unwrap();
        assert_eq!(rep.rows[1].classification, Criticality::Supercritical);
        assert!((rep.rows[1].slope - libm::log(3.0)).abs() < 1e-9);
        assert_eq!(rep.rows[0].classification, Criticality::Subcritical);
        assert!((rep.analytic_threshold - 1.0 / 3.0).abs() < 1e-15);
        assert!(criticality_report(2.0, &[1.5], 3, 10, 0).is_err());
    }

    #[test]
    fn cascades_are_deterministic() {
        let t = generate_expansion_tree(2.0, 4).unwrap();
        let a = simulate_cascade(&t.graph, NodeId(0), 0.6, 500, 42).unwrap();
        let b = simulate_cascade(&t.graph, NodeId(0), 0.6, 500, 42).unwrap();
        assert_eq!(a, b);
    }
}
