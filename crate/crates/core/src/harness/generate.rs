use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::attack::{inject_attack, route_pairs};
use super::{AttackProfile, Family, Regime, Scenario, ScenarioKind, Split};
use crate::error::{Error, Result};
use crate::graph::{Edge, FailureCategory, FailureEvent, GraphSnapshot, NodeAttrs, NodeId, Route};
use crate::rng::{self, derive_seed, DetRng};

/// Scoring time `t` of every generated scenario, in seconds.
pub const SCORING_TIME: f64 = 100.0;
/// Node count of the cross-family graphs.
pub const FAMILY_NODES: usize = 7;

const MAX_GRAPH_ATTEMPTS: u64 = 64;

/// Parameters of the synthetic scenario generators.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct GeneratorConfig {
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub min_branching: usize,
    pub max_branching: usize,
    pub max_load: f64,
    pub min_reliability: f64,
    pub min_fitness: f64,
    pub noise_events_min: usize,
    pub noise_events_max: usize,
    pub noise_max_severity: f64,
    /// Background events fall uniformly in `[t − noise_window, t]`.
    pub noise_window: f64,
    pub churn_fraction: f64,
    pub mixed_extra_fraction: f64,
    pub non_tree_edge_prob: f64,
    pub non_tree_reciprocal: f64,
    pub ws_rewire: f64,
    pub er_edge_prob: f64,
    pub routes_per_snapshot: usize,
    pub min_route_len: usize,
    pub max_route_len: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            min_nodes: 20,
            max_nodes: 60,
            min_branching: 2,
            max_branching: 3,
            max_load: 0.6,
            min_reliability: 0.7,
            min_fitness: 0.5,
            noise_events_min: 5,
            noise_events_max: 10,
            noise_max_severity: 0.3,
            noise_window: 30.0,
            churn_fraction: 0.2,
            mixed_extra_fraction: 0.3,
            non_tree_edge_prob: 0.35,
            non_tree_reciprocal: 0.5,
            ws_rewire: 0.3,
            er_edge_prob: 0.5,
            routes_per_snapshot: 9,
            min_route_len: 3,
            max_route_len: 7,
        }
    }
}

fn build(n: usize, edges: &[(u32, u32)], cfg: &GeneratorConfig, r: &mut DetRng) -> Result<GraphSnapshot> {
    let nodes = (0..n as u32)
        .map(|i| NodeAttrs::new(i, r.random_range(0.0..=cfg.max_load), r.random_range(cfg.min_fitness..=1.0)))
        .collect();
    let edges = edges.iter().map(|&(s, d)| Edge::new(s, d, r.random_range(cfg.min_reliability..=1.0))).collect();
    GraphSnapshot::new(SCORING_TIME, nodes, edges)
}

/// Parent-to-child edges of a random tree where each internal node gets 2–3 children.
fn tree_edges(n: usize, cfg: &GeneratorConfig, r: &mut DetRng) -> Vec<(u32, u32)> {
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut next = 1usize;
    let mut parent = 0usize;
    while next < n {
        let k = r.random_range(cfg.min_branching..=cfg.max_branching);
        for _ in 0..k {
            if next >= n {
                break;
            }
            edges.push((parent as u32, next as u32));
            next += 1;
        }
        parent += 1;
    }
    edges
}

fn rewire(edges: &mut [(u32, u32)], n: usize, fraction: f64, r: &mut DetRng) {
    let k = crate::math::round(fraction * edges.len() as f64) as usize;
    let mut present: BTreeSet<(u32, u32)> = edges.iter().copied().collect();
    for i in rand::seq::index::sample(r, edges.len(), k.min(edges.len())).into_vec() {
        let (s, d) = edges[i];
        for _ in 0..32 {
            let nd = r.random_range(0..n as u32);
            if nd != s && nd != d && !present.contains(&(s, nd)) {
                present.remove(&(s, d));
                present.insert((s, nd));
                edges[i] = (s, nd);
                break;
            }
        }
    }
}

fn add_cross_edges(edges: &mut Vec<(u32, u32)>, n: usize, count: usize, r: &mut DetRng) {
    let mut present: BTreeSet<(u32, u32)> = edges.iter().copied().collect();
    let mut added = 0;
    let mut attempts = 0;
    while added < count && attempts < 100 * (count + 1) {
        attempts += 1;
        let a = r.random_range(0..n as u32);
        let b = r.random_range(0..n as u32);
        if a == b || present.contains(&(a, b)) || present.contains(&(b, a)) {
            continue;
        }
        present.insert((a, b));
        edges.push((a, b));
        added += 1;
    }
}

/// The snapshot routes are enumerated on and the snapshot they are scored on. The two
/// differ only under churn, where part of the edges move after enumeration.
pub fn regime_graph(regime: Regime, cfg: &GeneratorConfig, seed: u64) -> Result<(GraphSnapshot, GraphSnapshot)> {
    let mut r = rng::rng(seed);
    let n = r.random_range(cfg.min_nodes..=cfg.max_nodes);
    let edges = match regime {
        Regime::Clean | Regime::Noise | Regime::Churn => tree_edges(n, cfg, &mut r),
        Regime::Mixed => {
            let mut e = tree_edges(n, cfg, &mut r);
            let extra = crate::math::round(cfg.mixed_extra_fraction * (n - 1) as f64) as usize;
            add_cross_edges(&mut e, n, extra, &mut r);
            e
        }
        Regime::NonTree => {
            let mut e = Vec::new();
            for a in 0..n as u32 {
                for b in a + 1..n as u32 {
                    if r.random_bool(cfg.non_tree_edge_prob) {
                        let (s, d) = if r.random_bool(0.5) { (a, b) } else { (b, a) };
                        e.push((s, d));
                        if r.random_bool(cfg.non_tree_reciprocal) {
                            e.push((d, s));
                        }
                    }
                }
            }
            e
        }
    };
    let g = build(n, &edges, cfg, &mut r)?;
    if regime != Regime::Churn {
        return Ok((g.clone(), g));
    }
    let mut moved = edges;
    rewire(&mut moved, n, cfg.churn_fraction, &mut r);
    let by_pair: alloc::collections::BTreeMap<(NodeId, NodeId), f64> =
        g.edges().iter().map(|e| ((e.src, e.dst), e.reliability)).collect();
    let rewired = moved
        .iter()
        .map(|&(s, d)| {
            let w = by_pair.get(&(NodeId(s), NodeId(d))).copied();
            Edge::new(s, d, w.unwrap_or_else(|| r.random_range(cfg.min_reliability..=1.0)))
        })
        .collect();
    let scored = GraphSnapshot::new(SCORING_TIME, g.nodes().to_vec(), rewired)?;
    Ok((g, scored))
}

/// BA (m = 1, edges old → new), WS (ring k = 2, rewired) or ER (random orientation) on 7 nodes.
pub fn family_graph(family: Family, cfg: &GeneratorConfig, seed: u64) -> Result<GraphSnapshot> {
    let mut r = rng::rng(seed);
    let n = FAMILY_NODES;
    let mut edges: Vec<(u32, u32)> = Vec::new();
    match family {
        Family::Ba => {
            let mut degree = alloc::vec![0usize; n];
            edges.push((0, 1));
            degree[0] = 1;
            degree[1] = 1;
            for i in 2..n {
                let total: usize = degree[..i].iter().sum();
                let mut pick = r.random_range(0..total);
                let mut target = 0;
                for (j, &d) in degree[..i].iter().enumerate() {
                    if pick < d {
                        target = j;
                        break;
                    }
                    pick -= d;
                }
                edges.push((target as u32, i as u32));
                degree[target] += 1;
                degree[i] = 1;
            }
        }
        Family::Ws => {
            let mut present: BTreeSet<(u32, u32)> = BTreeSet::new();
            let ring: Vec<(u32, u32)> = (0..n as u32).map(|i| (i, (i + 1) % n as u32)).collect();
            ring.iter().for_each(|&(a, b)| {
                present.insert((a.min(b), a.max(b)));
            });
            for (a, b) in ring {
                let mut edge = (a, b);
                if r.random_bool(cfg.ws_rewire) {
                    let options: Vec<u32> =
                        (0..n as u32).filter(|&c| c != a && !present.contains(&(a.min(c), a.max(c)))).collect();
                    if !options.is_empty() {
                        let c = options[r.random_range(0..options.len())];
                        present.remove(&(a.min(b), a.max(b)));
                        present.insert((a.min(c), a.max(c)));
                        edge = (a, c);
                    }
                }
                edges.push(edge);
            }
        }
        Family::Er => {
            for a in 0..n as u32 {
                for b in a + 1..n as u32 {
                    if r.random_bool(cfg.er_edge_prob) {
                        edges.push(if r.random_bool(0.5) { (a, b) } else { (b, a) });
                    }
                }
            }
        }
    }
    build(n, &edges, cfg, &mut r)
}

/// Up to `cfg.routes_per_snapshot` distinct simple paths from seeded random walks along
/// out-edges. Walks of at least `min_route_len` nodes are preferred; shorter ones fill in
/// only when long ones run out.
pub fn enumerate_routes(g: &GraphSnapshot, cfg: &GeneratorConfig, seed: u64) -> Vec<Route> {
    let mut r = rng::rng(seed);
    let n = g.node_count();
    let mut seen: BTreeSet<Vec<NodeId>> = BTreeSet::new();
    let mut routes: Vec<Route> = Vec::new();
    if n == 0 {
        return routes;
    }
    let max_len = cfg.max_route_len.max(1);
    for min_len in (1..=cfg.min_route_len.max(1)).rev() {
        let mut attempts = 0;
        while routes.len() < cfg.routes_per_snapshot && attempts < 40 * cfg.routes_per_snapshot {
            attempts += 1;
            let target = r.random_range(min_len.min(max_len)..=max_len);
            let mut path = alloc::vec![r.random_range(0..n)];
            while path.len() < target {
                let u = *path.last().unwrap();
                let options: Vec<usize> =
                    g.out_neighbors(u).iter().map(|&(v, _)| v).filter(|v| !path.contains(v)).collect();
                if options.is_empty() {
                    break;
                }
                path.push(options[r.random_range(0..options.len())]);
            }
            if path.len() < min_len {
                continue;
            }
            let ids: Vec<NodeId> = path.iter().map(|&i| g.nodes()[i].id).collect();
            if seen.insert(ids.clone()) {
                routes.push(Route::new(routes.len() as u32, ids).expect("walk visits distinct nodes"));
            }
        }
        if routes.len() >= cfg.routes_per_snapshot {
            break;
        }
    }
    routes
}

fn background_events(
    g: &GraphSnapshot,
    exclude: &[&Route],
    cfg: &GeneratorConfig,
    r: &mut DetRng,
) -> Result<Vec<FailureEvent>> {
    let pool: Vec<NodeId> =
        g.nodes().iter().map(|a| a.id).filter(|v| exclude.iter().all(|route| !route.contains(*v))).collect();
    if pool.is_empty() {
        return Ok(Vec::new());
    }
    let count = r.random_range(cfg.noise_events_min..=cfg.noise_events_max);
    let mut events = (0..count)
        .map(|_| {
            let v = pool[r.random_range(0..pool.len())];
            let time = SCORING_TIME - r.random_range(0.0..=cfg.noise_window);
            let sev = r.random_range(0.0..=cfg.noise_max_severity);
            FailureEvent::new(time, v, sev, FailureCategory::Background, None)
        })
        .collect::<Result<Vec<_>>>()?;
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(events)
}

const ATTACK_STREAM: u64 = 0xA77A_C4;
const ROUTE_STREAM: u64 = 0x0207_E5;
const NOISE_STREAM: u64 = 0x4015_E0;

/// `n_scenarios` scenarios of one regime. Scenario `j` uses seed index `j mod 10` (which fixes
/// its split) and replicate `j div 10`; each gets its own snapshot.
pub fn generate_regime_scenarios(
    regime: Regime,
    n_scenarios: usize,
    seed: u64,
    profile: AttackProfile,
    cfg: &GeneratorConfig,
) -> Result<Vec<Scenario>> {
    if n_scenarios == 0 {
        return Err(Error::InvalidInput("scenario count must be at least 1"));
    }
    let regime_seed = derive_seed(seed, 1 + regime as u64);
    (0..n_scenarios)
        .map(|j| {
            let seed_index = (j % 10) as u32;
            let replicate = (j / 10) as u32;
            let sseed = derive_seed(derive_seed(regime_seed, seed_index as u64), replicate as u64);
            let mut found = None;
            for attempt in 0..MAX_GRAPH_ATTEMPTS {
                let gseed = derive_seed(sseed, attempt);
                let (enumerated, scored) = regime_graph(regime, cfg, gseed)?;
                let routes = enumerate_routes(&enumerated, cfg, derive_seed(gseed, ROUTE_STREAM));
                if routes.len() >= 2 {
                    found = Some((scored, routes));
                    break;
                }
            }
            let (snapshot, routes) = found.ok_or(Error::DegenerateScenario)?;
            let pairs = route_pairs(routes.len());
            let (a, s) = pairs[replicate as usize % pairs.len()];
            let background = if regime == Regime::Noise {
                let mut r = rng::rng(derive_seed(sseed, NOISE_STREAM));
                background_events(&snapshot, &[&routes[a], &routes[s]], cfg, &mut r)?
            } else {
                Vec::new()
            };
            let base = Scenario {
                id: format!("{}-s{}-r{}", regime.as_str(), seed_index, replicate),
                kind: ScenarioKind::Regime(regime),
                profile,
                seed_index,
                replicate,
                split: Split::of_seed(seed_index),
                seed: sseed,
                time: SCORING_TIME,
                snapshot,
                candidate_routes: routes,
                attacked_index: a,
                safe_index: s,
                background_events: background,
                injected_events: Vec::new(),
            };
            inject_attack(&base, profile, derive_seed(sseed, ATTACK_STREAM))
        })
        .collect()
}

/// `seed_count` graphs of one family, each attacked under every profile (seed-major order).
pub fn generate_family_scenarios(
    family: Family,
    seed_count: usize,
    profiles: &[AttackProfile],
    seed: u64,
    cfg: &GeneratorConfig,
) -> Result<Vec<Scenario>> {
    let family_seed = derive_seed(seed, 100 + family as u64);
    let mut out = Vec::with_capacity(seed_count * profiles.len());
    for si in 0..seed_count {
        let sseed = derive_seed(family_seed, si as u64);
        let mut found = None;
        for attempt in 0..MAX_GRAPH_ATTEMPTS {
            let gseed = derive_seed(sseed, attempt);
            let g = family_graph(family, cfg, gseed)?;
            let routes = enumerate_routes(&g, cfg, derive_seed(gseed, ROUTE_STREAM));
            if routes.len() >= 2 {
                found = Some((g, routes));
                break;
            }
        }
        let (snapshot, routes) = found.ok_or(Error::DegenerateScenario)?;
        for (pi, profile) in profiles.iter().enumerate() {
            let base = Scenario {
                id: format!("{}-s{}-{}", family.as_str(), si, profile.label()),
                kind: ScenarioKind::Family(family),
                profile: *profile,
                seed_index: si as u32,
                replicate: pi as u32,
                split: Split::of_seed(si as u32),
                seed: sseed,
                time: SCORING_TIME,
                snapshot: snapshot.clone(),
                candidate_routes: routes.clone(),
                attacked_index: 0,
                safe_index: 1,
                background_events: Vec::new(),
                injected_events: Vec::new(),
            };
            out.push(inject_attack(&base, *profile, derive_seed(sseed, ATTACK_STREAM + pi as u64))?);
        }
    }
    Ok(out)
}
