use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::euclidean::{route_score_euclidean, EuclideanConfig};
use crate::gate::{blend, extract_features, FeatureMask, GateModel};
use crate::graph::{cycle_rank_norm, FailureEvent, GraphSnapshot, NodeId, Route};
use crate::hyperbolic::{route_score_with_fit, GeometryCache, HyperbolicConfig};
use crate::score::RouteScore;
use crate::temporal::{route_intensities, IntensityConfig};

/// Everything a scorer may look at for one scenario; both routes of a pair see the same context.
#[derive(Clone, Copy)]
pub struct ScoringContext<'a> {
    pub snapshot: &'a GraphSnapshot,
    pub events: &'a [FailureEvent],
    pub time: f64,
    pub cache: &'a dyn GeometryCache,
}

pub trait RouteScorer {
    fn name(&self) -> &str;
    /// Higher is safer.
    fn score(&self, ctx: &ScoringContext<'_>, r: &Route) -> Result<RouteScore>;
}

/// Configuration shared by the geometry-aware scorers.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct ScoringConfig {
    pub intensity: IntensityConfig,
    pub euclidean: EuclideanConfig,
    pub hyperbolic: HyperbolicConfig,
    /// Cycle-rank threshold of the hand-designed switch.
    pub switch_threshold: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            intensity: IntensityConfig::default(),
            euclidean: EuclideanConfig::default(),
            hyperbolic: HyperbolicConfig::default(),
            switch_threshold: 0.05,
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<()> {
        self.intensity.validate()?;
        self.euclidean.validate()?;
        self.hyperbolic.validate()
    }
}

/// `f_team(r)·(1 − 0.5·ℓ̄(r))`: mean route fitness discounted by mean load.
pub fn native_score(g: &GraphSnapshot, r: &Route) -> Result<f64> {
    let idx = r.indices_in(g)?;
    let n = idx.len() as f64;
    let fitness = idx.iter().map(|&i| g.nodes()[i].fitness).sum::<f64>() / n;
    let load = idx.iter().map(|&i| g.nodes()[i].load).sum::<f64>() / n;
    Ok(fitness * (1.0 - 0.5 * load))
}

/// Parameter-free structural baseline:
/// `−Σ_v [deg(v)/max_deg · λ̃(v) + 0.5·ℓ(v) + mean_{u ∈ N≤2(v)} λ̃(u)]`, with degrees on the
/// undirected projection and `N≤2` the two-hop out-neighborhood excluding `v`.
pub fn structural_baseline_score(
    g: &GraphSnapshot,
    r: &Route,
    events: &[FailureEvent],
    t: f64,
    intensity: &IntensityConfig,
) -> Result<RouteScore> {
    let idx = r.indices_in(g)?;
    let max_deg = (0..g.node_count()).map(|i| g.undirected_neighbors(i).len()).max().unwrap_or(0);
    let hoods: Vec<Vec<usize>> = idx
        .iter()
        .map(|&i| {
            let mut hood = BTreeSet::new();
            for &(j, _) in g.out_neighbors(i) {
                hood.insert(j);
                for &(k, _) in g.out_neighbors(j) {
                    hood.insert(k);
                }
            }
            hood.remove(&i);
            hood.into_iter().collect()
        })
        .collect();
    let mut needed: BTreeSet<NodeId> = r.nodes.iter().copied().collect();
    hoods.iter().flatten().for_each(|&j| {
        needed.insert(g.nodes()[j].id);
    });
    let needed: Vec<NodeId> = needed.into_iter().collect();
    let lam = route_intensities(&needed, t, events, Some(r.id), intensity, true);

    let (mut centrality, mut load, mut neighborhood) = (0.0, 0.0, 0.0);
    for (&i, hood) in idx.iter().zip(&hoods) {
        let v = g.nodes()[i].id;
        if max_deg > 0 {
            centrality += g.undirected_neighbors(i).len() as f64 / max_deg as f64 * lam[&v];
        }
        load += 0.5 * g.nodes()[i].load;
        if !hood.is_empty() {
            neighborhood += hood.iter().map(|&j| lam[&g.nodes()[j].id]).sum::<f64>() / hood.len() as f64;
        }
    }
    Ok(RouteScore::new(-(centrality + load + neighborhood))
        .with_term("centrality", centrality)
        .with_term("load", load)
        .with_term("neighborhood", neighborhood))
}

/// Hyperbolic score below the cycle-rank threshold, Euclidean otherwise.
pub fn hand_switching_score(ctx: &ScoringContext<'_>, r: &Route, cfg: &ScoringConfig, threshold: f64) -> Result<RouteScore> {
    if cycle_rank_norm(ctx.snapshot) < threshold {
        let fit = ctx.cache.fit(ctx.snapshot, &cfg.hyperbolic)?;
        route_score_with_fit(ctx.snapshot, &fit, r, ctx.events, ctx.time, &cfg.intensity, &cfg.hyperbolic)
    } else {
        route_score_euclidean(ctx.snapshot, r, ctx.events, ctx.time, &cfg.intensity, &cfg.euclidean)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NativeScorer;

impl RouteScorer for NativeScorer {
    fn name(&self) -> &str {
        "native"
    }

    fn score(&self, ctx: &ScoringContext<'_>, r: &Route) -> Result<RouteScore> {
        native_score(ctx.snapshot, r).map(RouteScore::new)
    }
}

#[derive(Debug, Clone, Default)]
pub struct EuclideanScorer(pub ScoringConfig);

impl RouteScorer for EuclideanScorer {
    fn name(&self) -> &str {
        "euclidean"
    }

    fn score(&self, ctx: &ScoringContext<'_>, r: &Route) -> Result<RouteScore> {
        route_score_euclidean(ctx.snapshot, r, ctx.events, ctx.time, &self.0.intensity, &self.0.euclidean)
    }
}

/// Fixed hyperbolic prior; with excitation disabled it is the "no excitation" comparator.
#[derive(Debug, Clone, Default)]
pub struct HyperbolicScorer(pub ScoringConfig);

impl RouteScorer for HyperbolicScorer {
    fn name(&self) -> &str {
        if self.0.hyperbolic.disable_excitation {
            "hyperbolic_no_excitation"
        } else {
            "hyperbolic"
        }
    }

    fn score(&self, ctx: &ScoringContext<'_>, r: &Route) -> Result<RouteScore> {
        r.indices_in(ctx.snapshot)?;
        let fit = ctx.cache.fit(ctx.snapshot, &self.0.hyperbolic)?;
        route_score_with_fit(ctx.snapshot, &fit, r, ctx.events, ctx.time, &self.0.intensity, &self.0.hyperbolic)
    }
}

#[derive(Debug, Clone, Default)]
pub struct StructuralScorer(pub IntensityConfig);

impl RouteScorer for StructuralScorer {
    fn name(&self) -> &str {
        "structural"
    }

    fn score(&self, ctx: &ScoringContext<'_>, r: &Route) -> Result<RouteScore> {
        structural_baseline_score(ctx.snapshot, r, ctx.events, ctx.time, &self.0)
    }
}

#[derive(Debug, Clone, Default)]
pub struct HandSwitchingScorer(pub ScoringConfig);

impl RouteScorer for HandSwitchingScorer {
    fn name(&self) -> &str {
        "hand_switching"
    }

    fn score(&self, ctx: &ScoringContext<'_>, r: &Route) -> Result<RouteScore> {
        hand_switching_score(ctx, r, &self.0, self.0.switch_threshold)
    }
}

/// The learned sidecar: `π·R_Hyp + (1 − π)·R_Euc` with `π` from the gate.
#[derive(Debug, Clone)]
pub struct BlendedScorer {
    pub config: ScoringConfig,
    pub model: GateModel,
    pub mask: FeatureMask,
}

impl BlendedScorer {
    pub fn new(config: ScoringConfig, model: GateModel) -> Self {
        Self { config, model, mask: FeatureMask::ALL }
    }

    pub fn with_mask(mut self, mask: FeatureMask) -> Self {
        self.mask = mask;
        self
    }
}

impl RouteScorer for BlendedScorer {
    fn name(&self) -> &str {
        "blended"
    }

    fn score(&self, ctx: &ScoringContext<'_>, r: &Route) -> Result<RouteScore> {
        let cfg = &self.config;
        let fit = ctx.cache.fit(ctx.snapshot, &cfg.hyperbolic)?;
        let phi = extract_features(ctx.snapshot, r, fit.curvature)?.masked(self.mask);
        let pi = self.model.forward(&phi)?;
        let hyp = route_score_with_fit(ctx.snapshot, &fit, r, ctx.events, ctx.time, &cfg.intensity, &cfg.hyperbolic)?;
        let euc = route_score_euclidean(ctx.snapshot, r, ctx.events, ctx.time, &cfg.intensity, &cfg.euclidean)?;
        Ok(blend(pi, &hyp, &euc))
    }
}

/// Knows the answer: `−1` for a route that has events tagged with it, `0` otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleScorer;

impl RouteScorer for OracleScorer {
    fn name(&self) -> &str {
        "oracle"
    }

    fn score(&self, ctx: &ScoringContext<'_>, r: &Route) -> Result<RouteScore> {
        r.indices_in(ctx.snapshot)?;
        let hit = ctx.events.iter().any(|e| e.route_tag == Some(r.id));
        Ok(RouteScore::new(if hit { -1.0 } else { 0.0 }))
    }
}

#[derive(Debug, Clone)]
pub struct ConstantScorer(pub f64, pub String);

impl RouteScorer for ConstantScorer {
    fn name(&self) -> &str {
        &self.1
    }

    fn score(&self, _ctx: &ScoringContext<'_>, _r: &Route) -> Result<RouteScore> {
        if self.0.is_finite() {
            Ok(RouteScore::new(self.0))
        } else {
            Err(Error::InvalidInput("constant score must be finite"))
        }
    }
}
