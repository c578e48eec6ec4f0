use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::Rng;

use super::topology::{all_pairs_hops, connected_components};
use super::GraphSnapshot;
use crate::rng;

/// Four-point Gromov δ of the undirected projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaEstimate {
    pub delta: f64,
    /// Every 4-subset of the component was evaluated.
    pub exhaustive: bool,
    /// Projection disconnected or fewer than four nodes in the largest component.
    pub degenerate: bool,
    pub tuples_evaluated: usize,
    pub component_size: usize,
}

fn four_point(d: &[usize], n: usize, q: [usize; 4]) -> f64 {
    let [x, y, z, w] = q;
    let mut s = [
        d[x * n + y] + d[z * n + w],
        d[x * n + z] + d[y * n + w],
        d[x * n + w] + d[y * n + z],
    ];
    s.sort_unstable();
    (s[2] - s[1]) as f64 / 2.0
}

fn choose4(m: usize) -> u128 {
    if m < 4 {
        return 0;
    }
    let m = m as u128;
    m * (m - 1) * (m - 2) * (m - 3) / 24
}

struct Component {
    members: Vec<usize>,
    hops: Vec<usize>,
    n: usize,
    disconnected: bool,
}

fn largest_component(g: &GraphSnapshot) -> Component {
    let (label, count) = connected_components(g);
    let mut sizes = alloc::vec![0usize; count];
    for &l in &label {
        sizes[l] += 1;
    }
    // First label wins ties, i.e. the component holding the smallest node id.
    let best = (0..count).fold(0, |b, l| if sizes[l] > sizes[b] { l } else { b });
    let members = (0..label.len()).filter(|&i| label[i] == best).collect();
    Component { members, hops: all_pairs_hops(g), n: g.node_count(), disconnected: count > 1 }
}

/// Maximum four-point δ over `samples` distinct 4-subsets drawn uniformly without
/// replacement. Enumerates exactly instead when there are at most `samples` subsets.
/// A disconnected projection is measured on its largest component and flagged.
pub fn gromov_delta(g: &GraphSnapshot, samples: usize, seed: u64) -> DeltaEstimate {
    let comp = largest_component(g);
    let m = comp.members.len();
    if m < 4 {
        return DeltaEstimate {
            delta: 0.0,
            exhaustive: true,
            degenerate: true,
            tuples_evaluated: 0,
            component_size: m,
        };
    }
    if choose4(m) <= samples as u128 {
        return exhaustive(&comp);
    }
    let mut rng = rng::rng(seed);
    let mut seen = BTreeSet::new();
    let mut delta: f64 = 0.0;
    while seen.len() < samples {
        let mut q = [0usize; 4];
        for slot in q.iter_mut() {
            *slot = rng.random_range(0..m);
        }
        q.sort_unstable();
        if q.windows(2).any(|w| w[0] == w[1]) || !seen.insert(q) {
            continue;
        }
        let nodes = q.map(|i| comp.members[i]);
        delta = delta.max(four_point(&comp.hops, comp.n, nodes));
    }
    DeltaEstimate {
        delta,
        exhaustive: false,
        degenerate: comp.disconnected,
        tuples_evaluated: samples,
        component_size: m,
    }
}

/// Exact δ over every 4-subset of the largest component.
pub fn gromov_delta_exhaustive(g: &GraphSnapshot) -> DeltaEstimate {
    let comp = largest_component(g);
    if comp.members.len() < 4 {
        return DeltaEstimate {
            delta: 0.0,
            exhaustive: true,
            degenerate: true,
            tuples_evaluated: 0,
            component_size: comp.members.len(),
        };
    }
    exhaustive(&comp)
}

fn exhaustive(comp: &Component) -> DeltaEstimate {
    let m = comp.members.len();
    let v = &comp.members;
    let mut delta: f64 = 0.0;
    let mut count = 0;
    for a in 0..m {
        for b in a + 1..m {
            for c in b + 1..m {
                for d in c + 1..m {
                    delta = delta.max(four_point(&comp.hops, comp.n, [v[a], v[b], v[c], v[d]]));
                    count += 1;
                }
            }
        }
    }
    DeltaEstimate {
        delta,
        exhaustive: true,
        degenerate: comp.disconnected,
        tuples_evaluated: count,
        component_size: m,
    }
}
