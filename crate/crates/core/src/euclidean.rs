//! Euclidean diffusion over the induced route subgraph.
//!
//! `x_{t+1}(u) = (1 - ρ_u) x_t(u) + Σ_{(v,u)} η_{vu} x_t(v)` with
//! `ρ_u = recovery_base · (1 - ℓ(u))` and `η_{vu} = diffusion_strength · w(v,u) · (0.5 + 0.5 ℓ(u))`.
//! Updates are synchronous and clamped to `[0, max_risk]`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{route_subgraph, FailureEvent, GraphSnapshot, NodeId, Route};
use crate::math;
use crate::score::RouteScore;
use crate::temporal::{route_intensities, IntensityConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct EuclideanWeights {
    pub infected_mass: f64,
    pub frontier: f64,
    pub tail: f64,
    pub latency: f64,
    pub bottleneck: f64,
}

impl Default for EuclideanWeights {
    fn default() -> Self {
        Self { infected_mass: 1.0, frontier: 1.0, tail: 1.0, latency: 1.0, bottleneck: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct EuclideanConfig {
    pub steps: usize,
    pub recovery_base: f64,
    pub diffusion_strength: f64,
    pub max_risk: f64,
    pub weights: EuclideanWeights,
}

impl Default for EuclideanConfig {
    fn default() -> Self {
        Self {
            steps: 5,
            recovery_base: 0.2,
            diffusion_strength: 0.5,
            max_risk: 10.0,
            weights: EuclideanWeights::default(),
        }
    }
}

impl EuclideanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidInput("euclidean steps must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.recovery_base) {
            return Err(Error::OutOfRange { what: "recovery_base", value: self.recovery_base });
        }
        let w = &self.weights;
        for v in [w.infected_mass, w.frontier, w.tail, w.latency, w.bottleneck] {
            if !(v >= 0.0) {
                return Err(Error::OutOfRange { what: "euclidean weight", value: v });
            }
        }
        Ok(())
    }
}

/// Risk per node of a route subgraph, aligned with the subgraph's node order.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationState {
    pub nodes: Vec<NodeId>,
    pub risk: Vec<f64>,
    pub step: usize,
}

impl PropagationState {
    pub fn get(&self, v: NodeId) -> Option<f64> {
        self.nodes.iter().position(|&n| n == v).map(|i| self.risk[i])
    }

    pub fn mean(&self) -> f64 {
        math::mean(&self.risk)
    }

    pub fn max(&self) -> f64 {
        self.risk.iter().copied().fold(0.0, f64::max)
    }
}

pub fn init_state(sub: &GraphSnapshot, intensities: &BTreeMap<NodeId, f64>) -> Result<PropagationState> {
    let nodes: Vec<NodeId> = sub.nodes().iter().map(|n| n.id).collect();
    let risk = nodes
        .iter()
        .map(|v| intensities.get(v).copied().ok_or(Error::MissingIntensity(*v)))
        .collect::<Result<_>>()?;
    Ok(PropagationState { nodes, risk, step: 0 })
}

pub fn propagate_step(state: &PropagationState, sub: &GraphSnapshot, cfg: &EuclideanConfig) -> PropagationState {
    let attrs = sub.nodes();
    let risk = (0..attrs.len())
        .map(|u| {
            let load = attrs[u].load;
            let recovery = cfg.recovery_base * (1.0 - load);
            let dest_scale = 0.5 + 0.5 * load;
            let inflow: f64 = sub
                .in_neighbors(u)
                .iter()
                .map(|&v| {
                    let w = sub.out_neighbors(v).iter().find(|(d, _)| *d == u).map_or(0.0, |(_, w)| *w);
                    cfg.diffusion_strength * w * dest_scale * state.risk[v]
                })
                .sum();
            ((1.0 - recovery) * state.risk[u] + inflow).clamp(0.0, cfg.max_risk)
        })
        .collect();
    PropagationState { nodes: state.nodes.clone(), risk, step: state.step + 1 }
}

/// Propagates damped intensities for `steps` rounds on the route subgraph and returns
/// `-(w·InfectedMass + w·Frontier + w·Tail + w·Latency + w·Bottleneck)`; higher is safer.
pub fn route_score_euclidean(
    g: &GraphSnapshot,
    r: &Route,
    events: &[FailureEvent],
    t: f64,
    intensity: &IntensityConfig,
    cfg: &EuclideanConfig,
) -> Result<RouteScore> {
    let sub = route_subgraph(g, r)?;
    let seeds = route_intensities(&r.nodes, t, events, Some(r.id), intensity, true);
    let mut state = init_state(&sub, &seeds)?;
    for _ in 0..cfg.steps {
        state = propagate_step(&state, &sub, cfg);
    }

    let infected_mass = state.mean();
    let tail = state.max();

    let n = r.len();
    let frontier_from = n - n.div_ceil(3);
    let frontier_risk: Vec<f64> = r.nodes[frontier_from..]
        .iter()
        .filter(|&&v| {
            let i = g.index_of(v).expect("route validated");
            g.out_neighbors(i).iter().any(|&(j, _)| !r.contains(g.nodes()[j].id))
        })
        .map(|&v| state.get(v).expect("route node in subgraph"))
        .collect();
    let frontier = math::mean(&frontier_risk);

    let latency = if sub.edge_count() == 0 {
        0.0
    } else {
        sub.edges().iter().map(|e| 1.0 - e.reliability).sum::<f64>() / sub.edge_count() as f64
    };
    let bottleneck = sub.nodes().iter().map(|a| a.load).fold(0.0, f64::max);

    let w = &cfg.weights;
    let value = -(w.infected_mass * infected_mass
        + w.frontier * frontier
        + w.tail * tail
        + w.latency * latency
        + w.bottleneck * bottleneck);
    Ok(RouteScore::new(value)
        .with_term("infected_mass", infected_mass)
        .with_term("frontier", frontier)
        .with_term("tail", tail)
        .with_term("latency", latency)
        .with_term("bottleneck", bottleneck))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, FailureCategory, NodeAttrs};
    use alloc::vec;
    use proptest::prelude::*;

    fn graph(loads: &[f64], edges: &[(u32, u32, f64)]) -> GraphSnapshot {
        GraphSnapshot::new(
            0.0,
            loads.iter().enumerate().map(|(i, &l)| NodeAttrs::new(i as u32, l, 1.0)).collect(),
            edges.iter().map(|&(s, d, w)| Edge::new(s, d, w)).collect(),
        )
        .unwrap()
    }

    fn seeds(values: &[f64]) -> BTreeMap<NodeId, f64> {
        values.iter().enumerate().map(|(i, &x)| (NodeId(i as u32), x)).collect()
    }

    #[test]
    fn init_state_copies_intensities() {
        let g = graph(&[0.0, 0.0, 0.0], &[]);
        let s = init_state(&g, &seeds(&[0.0, 0.0, 0.0])).unwrap();
        assert!(s.risk.iter().all(|&x| x == 0.0));
        let s = init_state(&g, &seeds(&[0.1, 0.2, 0.3])).unwrap();
        assert_eq!(s.risk, vec![0.1, 0.2, 0.3]);
        assert_eq!(s.step, 0);
        let single = graph(&[0.0], &[]);
        assert_eq!(init_state(&single, &seeds(&[0.85])).unwrap().get(NodeId(0)), Some(0.85));
        assert_eq!(init_state(&g, &seeds(&[0.1])), Err(Error::MissingIntensity(NodeId(1))));
    }

    #[test]
    fn edgeless_without_recovery_is_fixed_point() {
        let g = graph(&[0.3, 0.6], &[]);
        let cfg = EuclideanConfig { recovery_base: 0.0, ..Default::default() };
        let s0 = init_state(&g, &seeds(&[0.4, 0.9])).unwrap();
        assert_eq!(propagate_step(&s0, &g, &cfg).risk, s0.risk);
    }

    #[test]
    fn single_edge_unit_diffusion() {
        // load 1 gives ρ = 0 and η = diffusion_strength · w
        let g = graph(&[1.0, 1.0], &[(0, 1, 1.0)]);
        let cfg = EuclideanConfig { diffusion_strength: 1.0, ..Default::default() };
        let s1 = propagate_step(&init_state(&g, &seeds(&[1.0, 0.0])).unwrap(), &g, &cfg);
        assert_eq!(s1.risk, vec![1.0, 1.0]);
    }

    #[test]
    fn chain_two_synchronous_steps() {
        let g = graph(&[1.0, 1.0, 1.0], &[(0, 1, 1.0), (1, 2, 1.0)]);
        let cfg = EuclideanConfig { diffusion_strength: 0.5, ..Default::default() };
        let s1 = propagate_step(&init_state(&g, &seeds(&[1.0, 0.0, 0.0])).unwrap(), &g, &cfg);
        assert_eq!(s1.risk, vec![1.0, 0.5, 0.0]);
        let s2 = propagate_step(&s1, &g, &cfg);
        assert_eq!(s2.risk, vec![1.0, 1.0, 0.25]);
        assert_eq!(s2.step, 2);
    }

    #[test]
    fn full_recovery_without_inflow_clears_risk() {
        let g = graph(&[0.0, 0.0], &[]);
        let cfg = EuclideanConfig { recovery_base: 1.0, ..Default::default() };
        let s = propagate_step(&init_state(&g, &seeds(&[0.7, 3.0])).unwrap(), &g, &cfg);
        assert_eq!(s.risk, vec![0.0, 0.0]);
    }

    #[test]
    fn clean_route_scores_zero() {
        let g = graph(&[0.0, 0.0, 0.0], &[(0, 1, 1.0), (1, 2, 1.0)]);
        let r = Route::from_ids(0, &[0, 1, 2]).unwrap();
        let s = route_score_euclidean(&g, &r, &[], 0.0, &IntensityConfig::default(), &EuclideanConfig::default()).unwrap();
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn attacked_route_scores_lower() {
        let g = graph(&[0.2, 0.3, 0.1, 0.2, 0.3, 0.1], &[(0, 1, 0.9), (1, 2, 0.9), (3, 4, 0.9), (4, 5, 0.9)]);
        let a = Route::from_ids(0, &[0, 1, 2]).unwrap();
        let b = Route::from_ids(1, &[3, 4, 5]).unwrap();
        let events = [FailureEvent::new(9.5, NodeId(2), 0.85, FailureCategory::Injected, Some(a.id)).unwrap()];
        let ic = IntensityConfig::default();
        let cfg = EuclideanConfig::default();
        let sa = route_score_euclidean(&g, &a, &events, 10.0, &ic, &cfg).unwrap();
        let sb = route_score_euclidean(&g, &b, &events, 10.0, &ic, &cfg).unwrap();
        assert!(sb.value > sa.value);
    }

    #[test]
    fn infected_mass_only_closed_form() {
        let g = graph(&[0.0, 0.0], &[]);
        let r = Route::from_ids(0, &[0, 1]).unwrap();
        let t = 10.0;
        let events = [FailureEvent::new(t, NodeId(0), 0.85, FailureCategory::Injected, None).unwrap()];
        let cfg = EuclideanConfig {
            steps: 1,
            recovery_base: 0.0,
            weights: EuclideanWeights { infected_mass: 1.0, frontier: 0.0, tail: 0.0, latency: 0.0, bottleneck: 0.0 },
            ..Default::default()
        };
        let s = route_score_euclidean(&g, &r, &events, t, &IntensityConfig::default(), &cfg).unwrap();
        assert!((s.value + 0.425).abs() < 1e-15);
        assert_eq!(s.term("infected_mass"), Some(0.425));
    }

    #[test]
    fn frontier_counts_exits_from_route_tail() {
        // route 0 -> 1 -> 2 with node 2 delegating outside the route to 3
        let g = graph(&[0.0; 4], &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]);
        let r = Route::from_ids(0, &[0, 1, 2]).unwrap();
        let events = [FailureEvent::new(1.0, NodeId(2), 0.5, FailureCategory::Crash, None).unwrap()];
        let cfg = EuclideanConfig { steps: 1, recovery_base: 0.0, ..Default::default() };
        let s = route_score_euclidean(&g, &r, &events, 1.0, &IntensityConfig::default(), &cfg).unwrap();
        assert_eq!(s.term("frontier"), Some(0.5));
    }

    #[test]
    fn invalid_route_propagates() {
        let g = graph(&[0.0], &[]);
        let r = Route::from_ids(0, &[4]).unwrap();
        let res = route_score_euclidean(&g, &r, &[], 0.0, &IntensityConfig::default(), &EuclideanConfig::default());
        assert_eq!(res, Err(Error::RouteNodeMissing(NodeId(4))));
    }

    fn random_graph() -> impl Strategy<Value = (GraphSnapshot, vec::Vec<f64>)> {
        (2usize..7).prop_flat_map(|n| {
            (
                prop::collection::vec(0.0..=1.0f64, n),
                prop::collection::vec(0.0..=1.0f64, n),
                prop::collection::vec(prop::bool::ANY, n * n),
                prop::collection::vec(0.0..2.0f64, n),
            )
                .prop_map(move |(loads, rel, mask, x)| {
                    let mut edges = vec::Vec::new();
                    for s in 0..n {
                        for d in 0..n {
                            if s != d && mask[s * n + d] {
                                edges.push((s as u32, d as u32, rel[d]));
                            }
                        }
                    }
                    (graph(&loads, &edges), x)
                })
        })
    }

    proptest! {
        #[test]
        fn propagation_is_linear_below_clamp((g, x) in random_graph(), alpha in 0.0..=1.0f64) {
            let cfg = EuclideanConfig { max_risk: f64::INFINITY, ..Default::default() };
            let base = init_state(&g, &seeds(&x)).unwrap();
            let scaled_in: vec::Vec<f64> = x.iter().map(|v| v * alpha).collect();
            let scaled = propagate_step(&init_state(&g, &seeds(&scaled_in)).unwrap(), &g, &cfg);
            let plain = propagate_step(&base, &g, &cfg);
            for (a, b) in scaled.risk.iter().zip(&plain.risk) {
                prop_assert!((a - alpha * b).abs() < 1e-12);
            }
        }

        #[test]
        fn more_seeded_risk_never_raises_score((g, x) in random_graph(), bump in 0.0..1.0f64, which in 0usize..7) {
            let r = Route::new(0, g.nodes().iter().map(|n| n.id).collect()).unwrap();
            let k = which % x.len();
            let t = 100.0;
            let mk = |extra: f64| {
                let mut ev = vec::Vec::new();
                for (i, &s) in x.iter().enumerate() {
                    let sev = (s / 2.0 + if i == k { extra } else { 0.0 }).min(1.0);
                    ev.push(FailureEvent::new(t, NodeId(i as u32), sev, FailureCategory::Crash, None).unwrap());
                }
                ev
            };
            let ic = IntensityConfig::default();
            let cfg = EuclideanConfig::default();
            let lo = route_score_euclidean(&g, &r, &mk(0.0), t, &ic, &cfg).unwrap();
            let hi = route_score_euclidean(&g, &r, &mk(bump), t, &ic, &cfg).unwrap();
            prop_assert!(hi.value <= lo.value + 1e-12);
            let again = route_score_euclidean(&g, &r, &mk(bump), t, &ic, &cfg).unwrap();
            prop_assert_eq!(hi.value.to_bits(), again.value.to_bits());
        }
    }
}
