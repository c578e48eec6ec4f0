use crate::error::Result;
use crate::graph::{
    bfs_shells, cycle_rank_norm, reciprocal_ratio, route_subgraph, shell_growth_slope, triangle_density,
    GraphSnapshot, Route,
};
use crate::math;

pub const FEATURE_COUNT: usize = 9;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "edge_surplus",
    "reciprocal",
    "triangle",
    "route_crosslink",
    "route_load_mean",
    "route_length_norm",
    "shell_growth",
    "cycle_rank",
    "curvature_norm",
];

pub const CURVATURE_MIN: f64 = 0.10;
pub const CURVATURE_MAX: f64 = 4.50;

/// The nine structural gate inputs, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
    /// Bit `i` is set when component `i` had to be clamped into `[0, 1]`.
    pub clamped: u16,
}

impl FeatureVector {
    pub fn new(raw: [f64; FEATURE_COUNT]) -> Self {
        let mut clamped = 0u16;
        let mut values = raw;
        for (i, v) in values.iter_mut().enumerate() {
            let c = math::clamp01(*v);
            if c != *v {
                clamped |= 1 << i;
            }
            *v = c;
        }
        Self { values, clamped }
    }

    /// Zeroes every component whose bit is clear in `mask`.
    pub fn masked(mut self, mask: FeatureMask) -> Self {
        for (i, v) in self.values.iter_mut().enumerate() {
            if !mask.keeps(i) {
                *v = 0.0;
            }
        }
        self
    }
}

/// Nine-bit keep-mask over the features; bit `i` set keeps feature `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct FeatureMask(pub u16);

impl FeatureMask {
    pub const ALL: FeatureMask = FeatureMask((1 << FEATURE_COUNT) - 1);

    pub fn new(bits: u16) -> Option<Self> {
        (bits < (1 << FEATURE_COUNT)).then_some(Self(bits))
    }

    pub fn without(self, i: usize) -> Self {
        Self(self.0 & !(1 << i))
    }

    pub fn keeps(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }
}

impl Default for FeatureMask {
    fn default() -> Self {
        Self::ALL
    }
}

pub fn curvature_norm(kappa: f64) -> f64 {
    (kappa - CURVATURE_MIN) / (CURVATURE_MAX - CURVATURE_MIN)
}

/// Feature map for route `r` in snapshot `g`, given the snapshot's fitted curvature.
pub fn extract_features(g: &GraphSnapshot, r: &Route, curvature: f64) -> Result<FeatureVector> {
    let sub = route_subgraph(g, r)?;
    let n = g.node_count() as f64;
    let m = g.edge_count() as f64;
    let rn = sub.node_count() as f64;
    let re = sub.edge_count() as f64;
    let growth = shell_growth_slope(&bfs_shells(g)?);
    let load_mean = sub.nodes().iter().map(|a| a.load).sum::<f64>() / rn;
    Ok(FeatureVector::new([
        (m - (n - 1.0)) / n,
        reciprocal_ratio(g),
        triangle_density(g),
        (re - (rn - 1.0)).max(0.0) / rn,
        load_mean,
        rn / n,
        growth.phi,
        cycle_rank_norm(g),
        curvature_norm(curvature),
    ]))
}
