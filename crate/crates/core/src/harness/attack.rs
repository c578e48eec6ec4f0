use alloc::vec::Vec;

use rand::Rng;

use super::{AttackProfile, AttackProtocol, Scenario};
use crate::error::{Error, Result};
use crate::graph::{FailureCategory, FailureEvent, NodeId, Route};
use crate::rng;

/// Severities of the injected events, in target order.
pub const INJECTED_SEVERITIES: [f64; 3] = [0.85, 0.73, 0.61];

/// Even/odd pairing over a route enumeration: `(0, 1), (2, 3), ...`; a trailing odd route is dropped.
pub fn route_pairs(route_count: usize) -> Vec<(usize, usize)> {
    (0..route_count / 2).map(|k| (2 * k, 2 * k + 1)).collect()
}

/// The scenario's `(attacked, safe)` routes.
pub fn pair_routes(s: &Scenario) -> Result<(&Route, &Route)> {
    if s.candidate_routes.len() < 2 || s.attacked_index == s.safe_index {
        return Err(Error::DegenerateScenario);
    }
    Ok((s.attacked(), s.safe()))
}

fn mean_load(s: &Scenario, r: &Route) -> f64 {
    r.nodes.iter().map(|&v| s.snapshot.load(v).unwrap_or(0.0)).sum::<f64>() / r.len() as f64
}

/// Replaces the scenario's injected events according to `profile`. Up to three attacked-route
/// nodes receive events tagged with the attacked route, severities `0.85, 0.73, 0.61` (scaled,
/// capped at 1) and times uniform in `[t − 2, t]`.
///
/// `load_matched` first makes the higher mean-load route of the pair the attacked one, then
/// targets its highest-load nodes.
pub fn inject_attack(s: &Scenario, profile: AttackProfile, seed: u64) -> Result<Scenario> {
    pair_routes(s)?;
    if !(profile.severity_scale >= 0.0) {
        return Err(Error::OutOfRange { what: "severity scale", value: profile.severity_scale });
    }
    let mut out = s.clone();
    out.profile = profile;
    out.injected_events.clear();
    let (lo, hi) = (s.attacked_index.min(s.safe_index), s.attacked_index.max(s.safe_index));
    out.attacked_index = lo;
    out.safe_index = hi;
    if profile.protocol == AttackProtocol::LoadMatched
        && mean_load(s, &s.candidate_routes[hi]) > mean_load(s, &s.candidate_routes[lo])
    {
        out.attacked_index = hi;
        out.safe_index = lo;
    }

    let route = out.attacked().clone();
    let k = route.len().min(INJECTED_SEVERITIES.len());
    let mut r = rng::rng(seed);
    let targets: Vec<NodeId> = match profile.protocol {
        AttackProtocol::SeverityLoad => route.nodes[route.len() - k..].to_vec(),
        AttackProtocol::LoadMatched => {
            let mut by_load = route.nodes.clone();
            by_load.sort_by(|a, b| {
                let (la, lb) = (s.snapshot.load(*a).unwrap_or(0.0), s.snapshot.load(*b).unwrap_or(0.0));
                lb.total_cmp(&la)
            });
            by_load.truncate(k);
            by_load
        }
        AttackProtocol::Random => {
            rand::seq::index::sample(&mut r, route.len(), k).into_iter().map(|i| route.nodes[i]).collect()
        }
    };
    for (v, sev) in targets.into_iter().zip(INJECTED_SEVERITIES) {
        let time = s.time - r.random_range(0.0..=2.0);
        let severity = (sev * profile.severity_scale).min(1.0);
        out.injected_events.push(FailureEvent::new(time, v, severity, FailureCategory::Injected, Some(route.id))?);
    }
    out.validate()?;
    Ok(out)
}
