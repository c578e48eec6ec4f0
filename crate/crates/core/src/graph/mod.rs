//! Execution-graph snapshots, routes and failure events, plus the pure topology
//! computations the scorers and the gate read from them.

mod gromov;
mod topology;

pub use gromov::{gromov_delta, gromov_delta_exhaustive, DeltaEstimate};
pub use topology::{
    all_pairs_hops, bfs_shells, connected_components, cycle_rank_norm, reciprocal_ratio,
    route_subgraph, shell_growth_slope, triangle_density, ShellGrowth, ShellProfile,
};

use alloc::vec::Vec;
use core::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Stable node identifier. Node order everywhere is ascending id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct RouteId(pub u32);

/// Per-node state: load `ℓ` and fitness (both in `[0, 1]`).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NodeAttrs {
    pub id: NodeId,
    pub load: f64,
    pub fitness: f64,
}

impl NodeAttrs {
    pub fn new(id: u32, load: f64, fitness: f64) -> Self {
        Self { id: NodeId(id), load, fitness }
    }
}

/// Directed delegation edge with reliability `w` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub reliability: f64,
}

impl Edge {
    pub fn new(src: u32, dst: u32, reliability: f64) -> Self {
        Self { src: NodeId(src), dst: NodeId(dst), reliability }
    }
}

/// Immutable, validated directed graph at one instant.
///
/// Nodes are kept sorted by id and addressed internally by dense index, which
/// fixes a deterministic iteration order for every computation downstream.
#[derive(Debug, Clone)]
pub struct GraphSnapshot {
    timestamp: f64,
    nodes: Vec<NodeAttrs>,
    edges: Vec<Edge>,
    out_adj: Vec<Vec<(usize, f64)>>,
    in_adj: Vec<Vec<usize>>,
    und_adj: Vec<Vec<usize>>,
    content_hash: u64,
    structure_hash: u64,
}

impl PartialEq for GraphSnapshot {
    fn eq(&self, other: &Self) -> bool {
        self.timestamp.to_bits() == other.timestamp.to_bits()
            && self.nodes == other.nodes
            && self.edges == other.edges
    }
}

fn check_unit(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { what, value })
    }
}

impl GraphSnapshot {
    pub fn new(timestamp: f64, mut nodes: Vec<NodeAttrs>, mut edges: Vec<Edge>) -> Result<Self> {
        if !timestamp.is_finite() {
            return Err(Error::OutOfRange { what: "timestamp", value: timestamp });
        }
        nodes.sort_by_key(|n| n.id);
        for w in nodes.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::DuplicateNode(w[0].id));
            }
        }
        for n in &nodes {
            check_unit("load", n.load)?;
            check_unit("fitness", n.fitness)?;
        }
        let index_of = |id: NodeId| nodes.binary_search_by_key(&id, |n| n.id).map_err(|_| Error::UnknownNode(id));

        edges.sort_by_key(|e| (e.src, e.dst));
        for w in edges.windows(2) {
            if w[0].src == w[1].src && w[0].dst == w[1].dst {
                return Err(Error::DuplicateEdge(w[0].src, w[0].dst));
            }
        }
        let n = nodes.len();
        let mut out_adj = alloc::vec![Vec::new(); n];
        let mut in_adj = alloc::vec![Vec::new(); n];
        let mut und_adj = alloc::vec![Vec::new(); n];
        for e in &edges {
            if e.src == e.dst {
                return Err(Error::SelfLoop(e.src));
            }
            check_unit("reliability", e.reliability)?;
            let s = index_of(e.src)?;
            let d = index_of(e.dst)?;
            out_adj[s].push((d, e.reliability));
            in_adj[d].push(s);
            und_adj[s].push(d);
            und_adj[d].push(s);
        }
        for adj in &mut und_adj {
            adj.sort_unstable();
            adj.dedup();
        }
        for adj in &mut in_adj {
            adj.sort_unstable();
        }

        let mut content = Sha256::new();
        let mut structure = Sha256::new();
        content.update(timestamp.to_bits().to_le_bytes());
        for node in &nodes {
            content.update(node.id.0.to_le_bytes());
            content.update(node.load.to_bits().to_le_bytes());
            content.update(node.fitness.to_bits().to_le_bytes());
            structure.update(node.id.0.to_le_bytes());
        }
        structure.update(u64::MAX.to_le_bytes());
        for e in &edges {
            for h in [&mut content, &mut structure] {
                h.update(e.src.0.to_le_bytes());
                h.update(e.dst.0.to_le_bytes());
            }
            content.update(e.reliability.to_bits().to_le_bytes());
        }

        Ok(Self {
            timestamp,
            nodes,
            edges,
            out_adj,
            in_adj,
            und_adj,
            content_hash: digest_u64(content),
            structure_hash: digest_u64(structure),
        })
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> &[NodeAttrs] {
        &self.nodes
    }

    /// Edges in ascending `(src, dst)` order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index_of(id).is_some()
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeAttrs> {
        self.index_of(id).map(|i| &self.nodes[i])
    }

    pub fn load(&self, id: NodeId) -> Option<f64> {
        self.node(id).map(|n| n.load)
    }

    pub fn reliability(&self, src: NodeId, dst: NodeId) -> Option<f64> {
        let s = self.index_of(src)?;
        let d = self.index_of(dst)?;
        self.out_adj[s].iter().find(|(j, _)| *j == d).map(|(_, w)| *w)
    }

    pub fn has_edge(&self, src: NodeId, dst: NodeId) -> bool {
        self.reliability(src, dst).is_some()
    }

    /// Out-neighbours of the node at dense index `i`, with edge reliability.
    pub fn out_neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.out_adj[i]
    }

    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.in_adj[i]
    }

    /// Neighbours of index `i` in the undirected projection (sorted, no repeats).
    pub fn undirected_neighbors(&self, i: usize) -> &[usize] {
        &self.und_adj[i]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out_adj[i].len()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.in_adj[i].len()
    }

    /// Hash over every field, including attributes and timestamp.
    pub fn content_hash(&self) -> u64 {
        self.content_hash
    }

    /// Hash over node ids and directed edges only.
    pub fn structure_hash(&self) -> u64 {
        self.structure_hash
    }

    /// Undirected edge count: reciprocal pairs collapse to one edge.
    pub fn undirected_edge_count(&self) -> usize {
        self.und_adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Copy with a different timestamp.
    pub fn at_time(&self, timestamp: f64) -> Self {
        Self::new(timestamp, self.nodes.clone(), self.edges.clone())
            .expect("re-timing a valid snapshot keeps it valid")
    }
}

pub(crate) fn digest_u64(h: Sha256) -> u64 {
    let out = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&out[..8]);
    u64::from_le_bytes(b)
}

/// Ordered chain of distinct nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Route {
    pub id: RouteId,
    pub nodes: Vec<NodeId>,
}

impl Route {
    pub fn new(id: u32, nodes: Vec<NodeId>) -> Result<Self> {
        let r = Self { id: RouteId(id), nodes };
        r.check_shape()?;
        Ok(r)
    }

    pub fn from_ids(id: u32, ids: &[u32]) -> Result<Self> {
        Self::new(id, ids.iter().copied().map(NodeId).collect())
    }

    fn check_shape(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidRoute("route is empty"));
        }
        let mut sorted = self.nodes.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidRoute("route repeats a node"));
        }
        Ok(())
    }

    /// Checks shape and that every node exists in `g`; returns dense indices in route order.
    pub fn indices_in(&self, g: &GraphSnapshot) -> Result<Vec<usize>> {
        self.check_shape()?;
        self.nodes
            .iter()
            .map(|&v| g.index_of(v).ok_or(Error::RouteNodeMissing(v)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.nodes.contains(&v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum FailureCategory {
    Crash,
    Timeout,
    Error,
    Overload,
    Injected,
    Background,
}

impl FailureCategory {
    pub const ALL: [FailureCategory; 6] = [
        Self::Crash,
        Self::Timeout,
        Self::Error,
        Self::Overload,
        Self::Injected,
        Self::Background,
    ];
}

/// `(τ, v, s, c, r)`: time, node, severity, category and optional route tag.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FailureEvent {
    pub time: f64,
    pub node: NodeId,
    pub severity: f64,
    pub category: FailureCategory,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub route_tag: Option<RouteId>,
}

impl FailureEvent {
    pub fn new(
        time: f64,
        node: NodeId,
        severity: f64,
        category: FailureCategory,
        route_tag: Option<RouteId>,
    ) -> Result<Self> {
        let e = Self { time, node, severity, category, route_tag };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.time.is_finite() || self.time < 0.0 {
            return Err(Error::OutOfRange { what: "event time", value: self.time });
        }
        check_unit("severity", self.severity)
    }

    /// Whether this event counts toward scoring `route`: untagged events count for
    /// every route, tagged ones only for their own.
    pub fn applies_to(&self, route: Option<RouteId>) -> bool {
        match self.route_tag {
            None => true,
            Some(tag) => Some(tag) == route,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_self_loops_duplicates_and_unknown_endpoints() {
        let nodes = vec![NodeAttrs::new(0, 0.0, 1.0), NodeAttrs::new(1, 0.0, 1.0)];
        assert_eq!(
            GraphSnapshot::new(0.0, nodes.clone(), vec![Edge::new(0, 0, 1.0)]),
            Err(Error::SelfLoop(NodeId(0)))
        );
        assert_eq!(
            GraphSnapshot::new(0.0, nodes.clone(), vec![Edge::new(0, 1, 1.0), Edge::new(0, 1, 0.5)]),
            Err(Error::DuplicateEdge(NodeId(0), NodeId(1)))
        );
        assert_eq!(
            GraphSnapshot::new(0.0, nodes.clone(), vec![Edge::new(0, 7, 1.0)]),
            Err(Error::UnknownNode(NodeId(7)))
        );
        assert!(matches!(
            GraphSnapshot::new(0.0, vec![NodeAttrs::new(0, 1.5, 1.0)], vec![]),
            Err(Error::OutOfRange { what: "load", .. })
        ));
        assert_eq!(
            GraphSnapshot::new(0.0, vec![nodes[0], nodes[0]], vec![]),
            Err(Error::DuplicateNode(NodeId(0)))
        );
    }

    #[test]
    fn hashes_track_content_and_structure() {
        let a = GraphSnapshot::new(1.0, vec![NodeAttrs::new(0, 0.1, 1.0), NodeAttrs::new(1, 0.2, 1.0)], vec![Edge::new(0, 1, 0.9)]).unwrap();
        let b = GraphSnapshot::new(1.0, vec![NodeAttrs::new(1, 0.5, 1.0), NodeAttrs::new(0, 0.1, 1.0)], vec![Edge::new(0, 1, 0.9)]).unwrap();
        assert_ne!(a.content_hash(), b.content_hash());
        assert_eq!(a.structure_hash(), b.structure_hash());
        assert_eq!(a.content_hash(), a.clone().content_hash());
    }

    #[test]
    fn route_shape_rules() {
        assert!(Route::from_ids(0, &[]).is_err());
        assert!(Route::from_ids(0, &[1, 2, 1]).is_err());
        let g = GraphSnapshot::new(0.0, vec![NodeAttrs::new(1, 0.0, 1.0)], vec![]).unwrap();
        let r = Route::from_ids(0, &[1, 2]).unwrap();
        assert_eq!(r.indices_in(&g), Err(Error::RouteNodeMissing(NodeId(2))));
    }

    #[test]
    fn route_tag_filter() {
        let e = FailureEvent::new(0.0, NodeId(0), 0.5, FailureCategory::Crash, Some(RouteId(3))).unwrap();
        assert!(e.applies_to(Some(RouteId(3))));
        assert!(!e.applies_to(Some(RouteId(4))));
        assert!(!e.applies_to(None));
        let u = FailureEvent { route_tag: None, ..e };
        assert!(u.applies_to(Some(RouteId(4))) && u.applies_to(None));
        assert!(FailureEvent::new(-1.0, NodeId(0), 0.5, FailureCategory::Crash, None).is_err());
        assert!(FailureEvent::new(0.0, NodeId(0), 1.5, FailureCategory::Crash, None).is_err());
    }
}
