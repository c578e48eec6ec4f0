//! Per-node temporal failure statistics.
//!
//! The base intensity decays each event exponentially; the damped intensity adds
//! a bounded burstiness bonus driven by inter-arrival gaps. Neither is a full
//! Hawkes intensity.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{FailureCategory, FailureEvent, NodeId, RouteId};
use crate::math;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct IntensityConfig {
    /// Decay time `h` in seconds. The kernel is `exp(-Δt/h)`, so this is an
    /// e-folding time despite the name.
    pub half_life: f64,
    /// Gap scale `δ` of the burst statistic, seconds.
    pub excitation_decay: f64,
    /// `α(c)`; categories not listed use 1.0.
    pub category_multiplier: BTreeMap<FailureCategory, f64>,
    pub burst_coefficient: f64,
    /// `λ0`, above which the overload factor starts damping the bonus.
    pub baseline_threshold: f64,
}

impl Default for IntensityConfig {
    fn default() -> Self {
        Self {
            half_life: 30.0,
            excitation_decay: 5.0,
            category_multiplier: BTreeMap::new(),
            burst_coefficient: 0.14,
            baseline_threshold: 1.0,
        }
    }
}

impl IntensityConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |what, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::OutOfRange { what, value: v })
            }
        };
        positive("half_life", self.half_life)?;
        positive("excitation_decay", self.excitation_decay)?;
        for &a in self.category_multiplier.values() {
            positive("category_multiplier", a)?;
        }
        if !(self.burst_coefficient >= 0.0) {
            return Err(Error::OutOfRange { what: "burst_coefficient", value: self.burst_coefficient });
        }
        Ok(())
    }

    pub fn multiplier(&self, c: FailureCategory) -> f64 {
        self.category_multiplier.get(&c).copied().unwrap_or(1.0)
    }
}

/// All temporal components for one node at one scoring time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeIntensity {
    /// `λ`: decayed, category-weighted severity sum.
    pub base: f64,
    /// `b`: mean of `exp(-gap/δ)` over consecutive event gaps.
    pub burst: f64,
    /// `λ̄`: mean decayed severity of the included events.
    pub mean_decayed: f64,
    /// `λ̃ = λ + c·b·tanh(λ̄)·m^{-1/2}·(1 + max(0, λ - λ0))^{-1}`.
    pub damped: f64,
    pub event_count: usize,
}

fn relevant<'a>(
    v: NodeId,
    t: f64,
    events: &'a [FailureEvent],
    route: Option<RouteId>,
) -> impl Iterator<Item = &'a FailureEvent> + 'a {
    events.iter().filter(move |e| e.node == v && e.time <= t && e.applies_to(route))
}

fn decayed(e: &FailureEvent, t: f64, cfg: &IntensityConfig) -> f64 {
    e.severity * math::exp(-(t - e.time) / cfg.half_life) * cfg.multiplier(e.category)
}

/// `λ_t(v; r)`: events after `t` and events tagged with another route are skipped.
pub fn base_intensity(
    v: NodeId,
    t: f64,
    events: &[FailureEvent],
    route: Option<RouteId>,
    cfg: &IntensityConfig,
) -> f64 {
    relevant(v, t, events, route).map(|e| decayed(e, t, cfg)).sum()
}

/// `b_t(v; r)` in `[0, 1]`; zero with fewer than two events.
pub fn burst_statistic(
    v: NodeId,
    t: f64,
    events: &[FailureEvent],
    route: Option<RouteId>,
    cfg: &IntensityConfig,
) -> f64 {
    let mut times: Vec<f64> = relevant(v, t, events, route).map(|e| e.time).collect();
    burst_from_times(&mut times, cfg.excitation_decay)
}

fn burst_from_times(times: &mut [f64], excitation_decay: f64) -> f64 {
    if times.len() < 2 {
        return 0.0;
    }
    times.sort_by(f64::total_cmp);
    let sum: f64 = times.windows(2).map(|w| math::exp(-(w[1] - w[0]) / excitation_decay)).sum();
    sum / (times.len() - 1) as f64
}

pub fn damped_intensity(
    v: NodeId,
    t: f64,
    events: &[FailureEvent],
    route: Option<RouteId>,
    cfg: &IntensityConfig,
) -> NodeIntensity {
    let mut times = Vec::new();
    let mut base = 0.0;
    for e in relevant(v, t, events, route) {
        base += decayed(e, t, cfg);
        times.push(e.time);
    }
    let m = times.len();
    if m == 0 {
        return NodeIntensity::default();
    }
    let burst = burst_from_times(&mut times, cfg.excitation_decay);
    let mean_decayed = base / m as f64;
    let saturation = math::tanh(mean_decayed);
    let diversity = 1.0 / math::sqrt(m as f64);
    let overload = 1.0 / (1.0 + (base - cfg.baseline_threshold).max(0.0));
    let damped = base + cfg.burst_coefficient * burst * saturation * diversity * overload;
    NodeIntensity { base, burst, mean_decayed, damped, event_count: m }
}

/// Damped intensities for several nodes, skipping the burst bonus when
/// `excitation` is off (then `λ̃ = λ`).
pub fn route_intensities(
    nodes: &[NodeId],
    t: f64,
    events: &[FailureEvent],
    route: Option<RouteId>,
    cfg: &IntensityConfig,
    excitation: bool,
) -> BTreeMap<NodeId, f64> {
    nodes
        .iter()
        .map(|&v| {
            let ni = damped_intensity(v, t, events, route, cfg);
            (v, if excitation { ni.damped } else { ni.base })
        })
        .collect()
}
