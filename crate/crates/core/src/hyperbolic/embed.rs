//! Stress-minimizing Poincaré embedding and golden-section curvature search.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::poincare::{distance_unchecked, norm_sq, project};
use crate::error::{Error, Result};
use crate::graph::{all_pairs_hops, connected_components, GraphSnapshot, NodeId};
use crate::math;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct EmbedConfig {
    pub dimension: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    /// Initial coordinates are uniform in `[-init_scale, init_scale]/√κ` per axis.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self { dimension: 2, iterations: 120, learning_rate: 0.05, init_scale: 0.05, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct CurvatureSearch {
    pub lower: f64,
    pub upper: f64,
    pub tolerance: f64,
    pub max_evaluations: usize,
}

impl Default for CurvatureSearch {
    fn default() -> Self {
        Self { lower: 0.10, upper: 4.50, tolerance: 0.01, max_evaluations: 40 }
    }
}

/// Node coordinates in the Poincaré ball together with the graph distances they were fitted to.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicEmbedding {
    pub dimension: usize,
    pub curvature: f64,
    pub nodes: Vec<NodeId>,
    coords: Vec<f64>,
    hops: Vec<usize>,
    pub initial_stress: f64,
    pub final_stress: f64,
    /// The undirected projection had more than one component; stress only counts connected pairs.
    pub disconnected: bool,
}

impl HyperbolicEmbedding {
    fn empty(curvature: f64, dimension: usize) -> Self {
        Self {
            dimension,
            curvature,
            nodes: Vec::new(),
            coords: Vec::new(),
            hops: Vec::new(),
            initial_stress: 0.0,
            final_stress: 0.0,
            disconnected: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Coordinates of the `i`-th node (snapshot order).
    pub fn coord(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn coord_of(&self, v: NodeId) -> Option<&[f64]> {
        self.nodes.binary_search(&v).ok().map(|i| self.coord(i))
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        distance_unchecked(self.coord(i), self.coord(j), self.curvature)
    }

    /// Unweighted hop distance on the undirected projection, `None` when unreachable.
    pub fn hops(&self, i: usize, j: usize) -> Option<usize> {
        let h = self.hops[i * self.nodes.len() + j];
        (h != usize::MAX).then_some(h)
    }

    /// `√κ·‖z‖`, the position between the origin (0) and the boundary (1).
    pub fn radial(&self, i: usize) -> f64 {
        math::sqrt(self.curvature * norm_sq(self.coord(i)))
    }
}

fn norms(coords: &[f64], d: usize, kappa: f64, out: &mut [f64]) {
    for (o, z) in out.iter_mut().zip(coords.chunks_exact(d)) {
        *o = 1.0 - kappa * norm_sq(z);
    }
}

#[inline]
fn pair_dist_sq(coords: &[f64], d: usize, u: usize, v: usize) -> f64 {
    let (zu, zv) = (&coords[u * d..(u + 1) * d], &coords[v * d..(v + 1) * d]);
    zu.iter().zip(zv).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `Σ (geodesic − target)²`; `conf[i] = 1 − κ‖z_i‖²` must be current.
fn stress(coords: &[f64], conf: &[f64], pairs: &[(usize, usize, f64)], d: usize, kappa: f64) -> f64 {
    let inv_sk = 1.0 / math::sqrt(kappa);
    pairs
        .iter()
        .map(|&(u, v, target)| {
            let x = 2.0 * kappa * pair_dist_sq(coords, d, u, v) / (conf[u] * conf[v]);
            let e = math::acosh_1p(x) * inv_sk - target;
            e * e
        })
        .sum()
}

/// Riemannian stress gradient (Euclidean gradient scaled by `(1 − κ‖z‖²)²/4`).
fn stress_gradient(
    coords: &[f64],
    conf: &[f64],
    pairs: &[(usize, usize, f64)],
    d: usize,
    kappa: f64,
    grad: &mut [f64],
) {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let sk = math::sqrt(kappa);
    for &(u, v, target) in pairs {
        let (a, b) = (conf[u], conf[v]);
        let dd = pair_dist_sq(coords, d, u, v);
        if dd < 1e-28 {
            continue;
        }
        let x = 2.0 * kappa * dd / (a * b);
        let dist = math::acosh_1p(x) / sk;
        // d(dist)/dx scaled by the residual
        let s = 2.0 * (dist - target) / (sk * math::sqrt(x * (x + 2.0)));
        let cu = s * 2.0 * kappa / b;
        let cv = s * 2.0 * kappa / a;
        for k in 0..d {
            let (zu, zv) = (coords[u * d + k], coords[v * d + k]);
            let diff = zu - zv;
            grad[u * d + k] += cu * (2.0 * diff / a + dd * 2.0 * kappa * zu / (a * a));
            grad[v * d + k] += cv * (-2.0 * diff / b + dd * 2.0 * kappa * zv / (b * b));
        }
    }
    for (i, &c) in conf.iter().enumerate() {
        let s = c * c / 4.0;
        grad[i * d..(i + 1) * d].iter_mut().for_each(|g| *g *= s);
    }
}

/// Embeds the undirected projection of `g` into the Poincaré ball of curvature `-κ` by
/// backtracking gradient descent on `Σ_{u<v} (geodesic(z_u, z_v) - hops(u, v))²`.
/// Stress never increases across accepted steps.
pub fn embed(g: &GraphSnapshot, kappa: f64, cfg: &EmbedConfig) -> Result<HyperbolicEmbedding> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::OutOfRange { what: "curvature", value: kappa });
    }
    if cfg.dimension == 0 {
        return Err(Error::InvalidInput("embedding dimension must be at least 1"));
    }
    let d = cfg.dimension;
    let n = g.node_count();
    let nodes: Vec<NodeId> = g.nodes().iter().map(|a| a.id).collect();
    if n == 0 {
        return Ok(HyperbolicEmbedding::empty(kappa, d));
    }
    let hops = all_pairs_hops(g);
    let (_, components) = connected_components(g);
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            let h = hops[u * n + v];
            if h != usize::MAX {
                pairs.push((u, v, h as f64));
            }
        }
    }

    let scale = cfg.init_scale / math::sqrt(kappa);
    let mut r = rng::rng(cfg.seed);
    let mut coords: Vec<f64> = (0..n * d).map(|_| r.random_range(-scale..=scale)).collect();
    for z in coords.chunks_exact_mut(d) {
        project(z, kappa);
    }

    let mut conf = vec![0.0; n];
    let mut trial_conf = vec![0.0; n];
    norms(&coords, d, kappa, &mut conf);
    let initial = stress(&coords, &conf, &pairs, d, kappa);
    let mut current = initial;
    let mut lr = cfg.learning_rate;
    let mut grad = vec![0.0; n * d];
    let mut trial = vec![0.0; n * d];
    if !pairs.is_empty() {
        for _ in 0..cfg.iterations {
            stress_gradient(&coords, &conf, &pairs, d, kappa, &mut grad);
            let mut accepted = false;
            for _ in 0..30 {
                for ((t, z), g) in trial.iter_mut().zip(&coords).zip(&grad) {
                    *t = z - lr * g;
                }
                for z in trial.chunks_exact_mut(d) {
                    project(z, kappa);
                }
                norms(&trial, d, kappa, &mut trial_conf);
                let s = stress(&trial, &trial_conf, &pairs, d, kappa);
                if s <= current {
                    core::mem::swap(&mut coords, &mut trial);
                    core::mem::swap(&mut conf, &mut trial_conf);
                    current = s;
                    lr *= 1.1;
                    accepted = true;
                    break;
                }
                lr *= 0.5;
            }
            if !accepted {
                break;
            }
        }
    }

    Ok(HyperbolicEmbedding {
        dimension: d,
        curvature: kappa,
        nodes,
        coords,
        hops,
        initial_stress: initial,
        final_stress: current,
        disconnected: components > 1,
    })
}

/// Result of a golden-section minimization: the best point seen and its value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenSection {
    pub x: f64,
    pub fx: f64,
    pub evaluations: usize,
}

/// Golden-section search on `[lo, hi]`. Both endpoints are evaluated; the search stops once the
/// bracket is narrower than `tol` or `max_evals` evaluations were spent, and returns the best
/// point evaluated (ties resolve to the earliest).
pub fn golden_section_minimize<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    max_evals: usize,
) -> GoldenSection {
    let inv_phi = (math::sqrt(5.0) - 1.0) / 2.0;
    let mut best = GoldenSection { x: lo, fx: f64::INFINITY, evaluations: 0 };
    let mut eval = |x: f64, best: &mut GoldenSection| {
        let fx = f(x);
        best.evaluations += 1;
        if fx < best.fx {
            best.x = x;
            best.fx = fx;
        }
        fx
    };
    eval(lo, &mut best);
    if hi > lo && best.evaluations < max_evals {
        eval(hi, &mut best);
    }
    let (mut a, mut b) = (lo, hi);
    if b - a < tol || best.evaluations + 2 > max_evals {
        return best;
    }
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c, &mut best);
    let mut fd = eval(d, &mut best);
    while b - a >= tol && best.evaluations < max_evals {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d, &mut best);
        }
    }
    best
}

/// Fitted curvature with the embedding found at that curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureFit {
    pub curvature: f64,
    pub embedding: HyperbolicEmbedding,
    /// Every `(κ, stress)` pair evaluated, in evaluation order.
    pub evaluations: Vec<(f64, f64)>,
    /// Fewer than two nodes in the largest component; curvature pinned to the lower bracket.
    pub degenerate: bool,
}

/// Picks the curvature in the search bracket whose embedding has the lowest stress.
pub fn fit_curvature(g: &GraphSnapshot, embed_cfg: &EmbedConfig, search: &CurvatureSearch) -> Result<CurvatureFit> {
    if !(search.lower > 0.0 && search.upper >= search.lower) {
        return Err(Error::OutOfRange { what: "curvature bracket", value: search.lower });
    }
    let (labels, count) = connected_components(g);
    let largest = (0..count).map(|c| labels.iter().filter(|&&l| l == c).count()).max().unwrap_or(0);
    if largest < 2 {
        let embedding = if g.is_empty() {
            HyperbolicEmbedding::empty(search.lower, embed_cfg.dimension)
        } else {
            embed(g, search.lower, embed_cfg)?
        };
        return Ok(CurvatureFit { curvature: search.lower, embedding, evaluations: Vec::new(), degenerate: true });
    }

    let mut evaluations = Vec::new();
    let mut best: Option<HyperbolicEmbedding> = None;
    let mut failure = None;
    golden_section_minimize(
        |kappa| match embed(g, kappa, embed_cfg) {
            Ok(e) => {
                let s = e.final_stress;
                evaluations.push((kappa, s));
                if best.as_ref().map_or(true, |b| s < b.final_stress) {
                    best = Some(e);
                }
                s
            }
            Err(err) => {
                failure.get_or_insert(err);
                f64::INFINITY
            }
        },
        search.lower,
        search.upper,
        search.tolerance,
        search.max_evaluations,
    );
    if let Some(err) = failure {
        return Err(err);
    }
    let embedding = best.ok_or(Error::DegenerateScenario)?;
    Ok(CurvatureFit { curvature: embedding.curvature, embedding, evaluations, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, NodeAttrs};

    fn undirected(n: u32, pairs: &[(u32, u32)]) -> GraphSnapshot {
        GraphSnapshot::new(
            0.0,
            (0..n).map(|i| NodeAttrs::new(i, 0.0, 1.0)).collect(),
            pairs.iter().map(|&(a, b)| Edge::new(a, b, 1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_node_sits_at_origin_region_with_zero_stress() {
        let g = undirected(1, &[]);
        let e = embed(&g, 1.0, &EmbedConfig::default()).unwrap();
        assert_eq!(e.final_stress, 0.0);
        assert_eq!(e.len(), 1);
        let fit = fit_curvature(&g, &EmbedConfig::default(), &CurvatureSearch::default()).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.curvature, 0.10);
    }

    #[test]
    fn one_edge_converges_to_unit_distance() {
        let g = undirected(2, &[(0, 1)]);
        for kappa in [0.1, 1.0, 4.5] {
            let e = embed(&g, kappa, &EmbedConfig::default()).unwrap();
            let d = e.distance(0, 1);
            assert!((d - 1.0).abs() < 0.05, "κ={kappa} d={d}");
            assert!(e.final_stress <= e.initial_stress);
        }
    }

    fn spread(xs: &[f64]) -> f64 {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(0.0, f64::max);
        (hi - lo) / hi
    }

    #[test]
    fn star_leaves_are_symmetric() {
        let g = undirected(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        let leaf_pairs = |e: &HyperbolicEmbedding| {
            let mut ds = Vec::new();
            for i in 1..5 {
                for j in i + 1..5 {
                    ds.push(e.distance(i, j));
                }
            }
            ds
        };
        // four mutually equidistant leaves need three dimensions
        let e3 = embed(&g, 1.0, &EmbedConfig { dimension: 3, iterations: 400, ..Default::default() }).unwrap();
        let ds = leaf_pairs(&e3);
        assert!(spread(&ds) < 0.10, "{ds:?}");
        // in the plane the optimum is a square: hub distances agree, leaf pairs split into sides and diagonals
        let e2 = embed(&g, 1.0, &EmbedConfig { iterations: 400, ..Default::default() }).unwrap();
        let hub: Vec<f64> = (1..5).map(|i| e2.distance(0, i)).collect();
        assert!(spread(&hub) < 0.10, "{hub:?}");
        let mut ds = leaf_pairs(&e2);
        ds.sort_by(f64::total_cmp);
        assert!(spread(&ds[..4]) < 0.10 && spread(&ds[4..]) < 0.10, "{ds:?}");
    }

    #[test]
    fn stress_gradient_matches_central_differences() {
        let mut r = rng::rng(3);
        let (n, d) = (5usize, 2usize);
        let pairs: Vec<(usize, usize, f64)> =
            (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v, (v - u) as f64))).collect();
        for kappa in [0.1, 1.0, 3.7] {
            let s = 0.8 / math::sqrt(kappa);
            let coords: Vec<f64> = (0..n * d).map(|_| r.random_range(-s..s) / 1.5).collect();
            let mut conf = vec![0.0; n];
            norms(&coords, d, kappa, &mut conf);
            let mut grad = vec![0.0; n * d];
            stress_gradient(&coords, &conf, &pairs, d, kappa, &mut grad);
            for k in 0..n * d {
                let h = 1e-6 * s;
                let eval = |delta: f64| {
                    let mut c = coords.clone();
                    c[k] += delta;
                    let mut cf = vec![0.0; n];
                    norms(&c, d, kappa, &mut cf);
                    stress(&c, &cf, &pairs, d, kappa)
                };
                let fd = (eval(h) - eval(-h)) / (2.0 * h);
                let scale = conf[k / d] * conf[k / d] / 4.0;
                let analytic = grad[k] / scale;
                assert!((fd - analytic).abs() <= 1e-5 * fd.abs().max(1.0), "κ={kappa} k={k} fd={fd} an={analytic}");
            }
        }
    }

    #[test]
    fn coordinates_stay_inside_ball() {
        let g = undirected(8, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7)]);
        for kappa in [0.1, 2.0, 4.5] {
            let e = embed(&g, kappa, &EmbedConfig::default()).unwrap();
            for i in 0..e.len() {
                assert!(math::sqrt(norm_sq(e.coord(i))) <= 0.999 / math::sqrt(kappa) + 1e-12);
                assert!(e.radial(i) < 1.0);
            }
        }
    }

    #[test]
    fn disconnected_graph_is_flagged() {
        let g = undirected(4, &[(0, 1), (2, 3)]);
        let e = embed(&g, 1.0, &EmbedConfig::default()).unwrap();
        assert!(e.disconnected);
        assert_eq!(e.hops(0, 2), None);
        assert_eq!(e.hops(0, 1), Some(1));
    }

    #[test]
    fn golden_section_surrogate() {
        let r = golden_section_minimize(|k| (k - 2.0) * (k - 2.0), 0.10, 4.50, 1e-6, 200);
        assert!((r.x - 2.0).abs() < 1e-3);
        let capped = golden_section_minimize(|k| (k - 2.0) * (k - 2.0), 0.10, 4.50, 0.01, 40);
        assert!(capped.evaluations <= 40);
        assert!((capped.x - 2.0).abs() < 0.01);
        let edge = golden_section_minimize(|k| k, 0.10, 4.50, 0.01, 40);
        assert_eq!(edge.x, 0.10);
        let hi_edge = golden_section_minimize(|k| -k, 0.10, 4.50, 0.01, 40);
        assert_eq!(hi_edge.x, 4.50);
    }

    #[test]
    fn fit_stays_in_bracket_and_beats_endpoints() {
        let path = undirected(8, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7)]);
        let mut dense_edges = Vec::new();
        let mut r = rng::rng(7);
        for a in 0..8u32 {
            for b in a + 1..8 {
                if r.random_bool(0.8) {
                    dense_edges.push((a, b));
                }
            }
        }
        let dense = undirected(8, &dense_edges);
        let cfg = EmbedConfig::default();
        let search = CurvatureSearch::default();
        for g in [&path, &dense] {
            let fit = fit_curvature(g, &cfg, &search).unwrap();
            assert!((0.10..=4.50).contains(&fit.curvature));
            let lo = fit.evaluations.iter().find(|e| e.0 == 0.10).unwrap().1;
            let hi = fit.evaluations.iter().find(|e| e.0 == 4.50).unwrap().1;
            assert!(fit.embedding.final_stress <= lo && fit.embedding.final_stress <= hi);
            assert!(fit.evaluations.len() <= 40);
            let again = fit_curvature(g, &cfg, &search).unwrap();
            assert_eq!(fit, again);
        }
    }
}
