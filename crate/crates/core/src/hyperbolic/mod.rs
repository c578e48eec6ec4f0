//! Hyperbolic route scoring: Poincaré embedding, fitted curvature and the five-term score.

mod embed;
mod poincare;

use alloc::sync::Arc;
use alloc::vec::Vec;

pub use embed::{
    embed, fit_curvature, golden_section_minimize, CurvatureFit, CurvatureSearch, EmbedConfig, GoldenSection,
    HyperbolicEmbedding,
};
pub use poincare::geodesic_distance;

use crate::error::{Error, Result};
use crate::graph::{FailureEvent, GraphSnapshot, Route};
use crate::math;
use crate::score::RouteScore;
use crate::temporal::{route_intensities, IntensityConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct HyperbolicWeights {
    pub compactness: f64,
    pub tail: f64,
    pub frontier: f64,
    pub bottleneck: f64,
    pub decoder: f64,
}

impl Default for HyperbolicWeights {
    fn default() -> Self {
        Self { compactness: 1.0, tail: 1.0, frontier: 1.0, bottleneck: 1.0, decoder: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct HyperbolicConfig {
    pub embed: EmbedConfig,
    pub search: CurvatureSearch,
    pub weights: HyperbolicWeights,
    /// Drop the burst bonus so that `λ̃ = λ`.
    pub disable_excitation: bool,
}

impl HyperbolicConfig {
    pub fn validate(&self) -> Result<()> {
        let w = &self.weights;
        for v in [w.compactness, w.tail, w.frontier, w.bottleneck, w.decoder] {
            if !(v >= 0.0) {
                return Err(Error::OutOfRange { what: "hyperbolic weight", value: v });
            }
        }
        if !(self.search.lower > 0.0 && self.search.upper >= self.search.lower) {
            return Err(Error::OutOfRange { what: "curvature bracket", value: self.search.lower });
        }
        if self.embed.dimension == 0 {
            return Err(Error::InvalidInput("embedding dimension must be at least 1"));
        }
        Ok(())
    }

    /// Stable fingerprint of the settings that determine a curvature fit.
    pub fn fit_key(&self) -> u64 {
        let e = &self.embed;
        let s = &self.search;
        let mut h = crate::rng::derive_seed(e.dimension as u64, e.iterations as u64);
        for bits in [e.learning_rate, e.init_scale, s.lower, s.upper, s.tolerance].map(f64::to_bits) {
            h = crate::rng::derive_seed(h, bits);
        }
        h = crate::rng::derive_seed(h, s.max_evaluations as u64);
        crate::rng::derive_seed(h, e.seed)
    }
}

/// Source of curvature fits. Implementations may memoize by snapshot structure.
pub trait GeometryCache {
    fn fit(&self, g: &GraphSnapshot, cfg: &HyperbolicConfig) -> Result<Arc<CurvatureFit>>;
}

/// Fits on every call.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoCache;

impl GeometryCache for NoCache {
    fn fit(&self, g: &GraphSnapshot, cfg: &HyperbolicConfig) -> Result<Arc<CurvatureFit>> {
        fit_curvature(g, &cfg.embed, &cfg.search).map(Arc::new)
    }
}

/// Scores a route against an existing fit of `g`:
/// `w1·C − w2·T − w3·F − w4·B + w5·D`, higher is safer.
pub fn route_score_with_fit(
    g: &GraphSnapshot,
    fit: &CurvatureFit,
    r: &Route,
    events: &[FailureEvent],
    t: f64,
    intensity: &IntensityConfig,
    cfg: &HyperbolicConfig,
) -> Result<RouteScore> {
    let idx = r.indices_in(g)?;
    let emb = &fit.embedding;
    if emb.len() != g.node_count() {
        return Err(Error::InvalidInput("embedding does not match snapshot"));
    }
    let lam = route_intensities(&r.nodes, t, events, Some(r.id), intensity, !cfg.disable_excitation);

    let mut pair_sum = 0.0;
    let mut pair_count = 0usize;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            pair_sum += emb.distance(i, j);
            pair_count += 1;
        }
    }
    let mean_pair = if pair_count == 0 { 0.0 } else { pair_sum / pair_count as f64 };
    let compactness = 1.0 / (1.0 + mean_pair);

    let mut tail: f64 = 0.0;
    let mut frontier = 0.0;
    let mut bottleneck: f64 = 0.0;
    for (v, &i) in r.nodes.iter().zip(&idx) {
        let l = lam[v];
        tail = tail.max(l * math::exp(emb.radial(i)));
        let exits = g.out_neighbors(i).iter().filter(|&&(j, _)| !r.contains(g.nodes()[j].id)).count();
        frontier += l * exits as f64;
        bottleneck = bottleneck.max(g.nodes()[i].load);
    }

    let errors: Vec<f64> = idx
        .windows(2)
        .filter_map(|w| emb.hops(w[0], w[1]).map(|h| math::abs(emb.distance(w[0], w[1]) - h as f64)))
        .collect();
    let decoder = 1.0 / (1.0 + math::mean(&errors));

    let w = &cfg.weights;
    let value = w.compactness * compactness - w.tail * tail - w.frontier * frontier - w.bottleneck * bottleneck
        + w.decoder * decoder;
    Ok(RouteScore::new(value)
        .with_term("compactness", compactness)
        .with_term("tail", tail)
        .with_term("frontier", frontier)
        .with_term("bottleneck", bottleneck)
        .with_term("decoder", decoder)
        .with_term("curvature", fit.curvature))
}

/// Fits (or fetches) the snapshot geometry and scores the route.
pub fn route_score_hyperbolic(
    g: &GraphSnapshot,
    r: &Route,
    events: &[FailureEvent],
    t: f64,
    intensity: &IntensityConfig,
    cfg: &HyperbolicConfig,
    cache: &dyn GeometryCache,
) -> Result<RouteScore> {
    r.indices_in(g)?;
    let fit = cache.fit(g, cfg)?;
    route_score_with_fit(g, &fit, r, events, t, intensity, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, FailureCategory, NodeAttrs, NodeId};
    use alloc::vec;
    use proptest::prelude::*;

    fn two_paths(loads: f64) -> GraphSnapshot {
        // 0-1-2 and 3-4-5 joined through hub 6
        GraphSnapshot::new(
            0.0,
            (0..7).map(|i| NodeAttrs::new(i, loads, 1.0)).collect(),
            vec![
                Edge::new(6, 0, 1.0),
                Edge::new(0, 1, 1.0),
                Edge::new(1, 2, 1.0),
                Edge::new(6, 3, 1.0),
                Edge::new(3, 4, 1.0),
                Edge::new(4, 5, 1.0),
            ],
        )
        .unwrap()
    }

    fn quick() -> HyperbolicConfig {
        HyperbolicConfig { search: CurvatureSearch { tolerance: 0.5, ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn clean_route_keeps_only_positive_terms() {
        let g = two_paths(0.0);
        let r = Route::from_ids(0, &[0, 1, 2]).unwrap();
        let s = route_score_hyperbolic(&g, &r, &[], 10.0, &IntensityConfig::default(), &quick(), &NoCache).unwrap();
        assert_eq!(s.term("tail"), Some(0.0));
        assert_eq!(s.term("frontier"), Some(0.0));
        let c = s.term("compactness").unwrap();
        let d = s.term("decoder").unwrap();
        assert!((s.value - (c + d)).abs() < 1e-15);
        assert!(s.value > 0.0);
    }

    #[test]
    fn attacked_twin_scores_lower() {
        let g = two_paths(0.2);
        let a = Route::from_ids(0, &[0, 1, 2]).unwrap();
        let b = Route::from_ids(1, &[3, 4, 5]).unwrap();
        let ev = [FailureEvent::new(9.0, NodeId(1), 0.85, FailureCategory::Injected, Some(a.id)).unwrap()];
        let ic = IntensityConfig::default();
        let cfg = quick();
        let fit = NoCache.fit(&g, &cfg).unwrap();
        let sa = route_score_with_fit(&g, &fit, &a, &ev, 10.0, &ic, &cfg).unwrap();
        let sb = route_score_with_fit(&g, &fit, &b, &ev, 10.0, &ic, &cfg).unwrap();
        let sa_clean = route_score_with_fit(&g, &fit, &a, &[], 10.0, &ic, &cfg).unwrap();
        assert!(sa.value < sa_clean.value);
        assert!(sb.value > sa.value);
    }

    #[test]
    fn single_node_route_closed_form() {
        let g = GraphSnapshot::new(0.0, vec![NodeAttrs::new(0, 0.35, 1.0)], vec![]).unwrap();
        let r = Route::from_ids(0, &[0]).unwrap();
        let s = route_score_hyperbolic(&g, &r, &[], 0.0, &IntensityConfig::default(), &quick(), &NoCache).unwrap();
        assert_eq!(s.term("compactness"), Some(1.0));
        assert_eq!(s.term("decoder"), Some(1.0));
        assert_eq!(s.term("bottleneck"), Some(0.35));
        assert!((s.value - (2.0 - 0.35)).abs() < 1e-15);
    }

    #[test]
    fn excitation_toggle_only_removes_bonus() {
        let g = two_paths(0.1);
        let r = Route::from_ids(0, &[0, 1, 2]).unwrap();
        let ev = [
            FailureEvent::new(9.0, NodeId(1), 0.5, FailureCategory::Crash, None).unwrap(),
            FailureEvent::new(9.5, NodeId(1), 0.5, FailureCategory::Crash, None).unwrap(),
        ];
        let on = quick();
        let off = HyperbolicConfig { disable_excitation: true, ..on };
        let fit = NoCache.fit(&g, &on).unwrap();
        let ic = IntensityConfig::default();
        let s_on = route_score_with_fit(&g, &fit, &r, &ev, 10.0, &ic, &on).unwrap();
        let s_off = route_score_with_fit(&g, &fit, &r, &ev, 10.0, &ic, &off).unwrap();
        assert!(s_on.value < s_off.value);
        assert_eq!(on.fit_key(), off.fit_key());
    }

    #[test]
    fn missing_route_node_is_reported() {
        let g = two_paths(0.0);
        let r = Route::from_ids(0, &[0, 99]).unwrap();
        let res = route_score_hyperbolic(&g, &r, &[], 0.0, &IntensityConfig::default(), &quick(), &NoCache);
        assert_eq!(res, Err(Error::RouteNodeMissing(NodeId(99))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn more_intensity_never_raises_score(node in 0u32..3, sev in 0.0..=1.0f64, extra in 0.0..=1.0f64, at in 0.0..10.0f64) {
            let g = two_paths(0.3);
            let cfg = quick();
            let fit = NoCache.fit(&g, &cfg).unwrap();
            let r = Route::from_ids(0, &[0, 1, 2]).unwrap();
            let ic = IntensityConfig::default();
            let base = [FailureEvent::new(at, NodeId(node), sev, FailureCategory::Timeout, None).unwrap()];
            let more = [base[0], FailureEvent::new(at, NodeId(node), extra, FailureCategory::Timeout, None).unwrap()];
            let s0 = route_score_with_fit(&g, &fit, &r, &base, 10.0, &ic, &cfg).unwrap();
            let s1 = route_score_with_fit(&g, &fit, &r, &more, 10.0, &ic, &cfg).unwrap();
            prop_assert!(s1.value <= s0.value + 1e-12);
        }
    }
}
