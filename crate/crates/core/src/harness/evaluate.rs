use alloc::string::{String, ToString};
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use super::scorers::{RouteScorer, ScoringConfig, ScoringContext};
use super::{Scenario, Split};
use crate::error::{Error, Result};
use crate::euclidean::route_score_euclidean;
use crate::gate::{extract_features, GateExample};
use crate::graph::{digest_u64, FailureEvent, GraphSnapshot};
use crate::hyperbolic::{route_score_with_fit, GeometryCache};
use crate::score::RouteScore;
use crate::stats::{bootstrap_ci, exact_sign_test, SignTest};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct EvalOptions {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { resamples: 400, level: 0.95, seed: 0 }
    }
}

/// Margin and win for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRow {
    pub id: String,
    pub group: &'static str,
    pub profile: String,
    pub split: Split,
    pub safe: RouteScore,
    pub attacked: RouteScore,
    /// `R(safe) − R(attacked)`.
    pub margin: f64,
    pub win: bool,
    /// Hash of the snapshot and event state both routes were scored against.
    pub state_hash: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Aggregate {
    pub group: String,
    pub count: usize,
    pub mean_margin: f64,
    pub win_rate: f64,
    pub margin_ci: Option<(f64, f64)>,
    pub win_ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFailure {
    pub id: String,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationResult {
    pub scorer: String,
    pub rows: Vec<ScenarioRow>,
    /// Per regime or family, in order of first appearance.
    pub groups: Vec<Aggregate>,
    pub overall: Aggregate,
    pub failures: Vec<ScenarioFailure>,
}

impl EvaluationResult {
    pub fn group(&self, name: &str) -> Option<&Aggregate> {
        self.groups.iter().find(|g| g.group == name)
    }

    /// Exact sign test of this scorer's wins against `other`'s on the scenarios both scored.
    /// Scenarios where exactly one of the two wins are the discordant pairs.
    pub fn sign_test_against(&self, other: &EvaluationResult) -> SignTest {
        let (mut plus, mut minus) = (0u64, 0u64);
        for row in &self.rows {
            if let Some(o) = other.rows.iter().find(|o| o.id == row.id) {
                match (row.win, o.win) {
                    (true, false) => plus += 1,
                    (false, true) => minus += 1,
                    _ => {}
                }
            }
        }
        exact_sign_test(plus, minus)
    }
}

/// Content hash of a snapshot plus an event list.
pub fn events_hash(snapshot: &GraphSnapshot, events: &[FailureEvent]) -> u64 {
    let mut h = Sha256::new();
    h.update(snapshot.content_hash().to_le_bytes());
    for e in events {
        h.update(e.time.to_bits().to_le_bytes());
        h.update(e.node.0.to_le_bytes());
        h.update(e.severity.to_bits().to_le_bytes());
        h.update([e.category as u8]);
        h.update(e.route_tag.map_or(u32::MAX, |t| t.0).to_le_bytes());
    }
    digest_u64(h)
}

/// Scores both routes of `s` against one shared context.
pub fn evaluate_scenario(scorer: &dyn RouteScorer, s: &Scenario, cache: &dyn GeometryCache) -> Result<ScenarioRow> {
    let events = s.events();
    let ctx = ScoringContext { snapshot: &s.snapshot, events: &events, time: s.time, cache };
    let safe = scorer.score(&ctx, s.safe())?;
    let attacked = scorer.score(&ctx, s.attacked())?;
    let margin = safe.value - attacked.value;
    if !margin.is_finite() {
        return Err(Error::OutOfRange { what: "margin", value: margin });
    }
    Ok(ScenarioRow {
        id: s.id.clone(),
        group: s.kind.label(),
        profile: s.profile.label(),
        split: s.split,
        safe,
        attacked,
        margin,
        win: margin > 0.0,
        state_hash: events_hash(ctx.snapshot, ctx.events),
    })
}

pub fn aggregate(group: &str, rows: &[&ScenarioRow], opts: &EvalOptions) -> Aggregate {
    let margins: Vec<f64> = rows.iter().map(|r| r.margin).collect();
    let wins: Vec<f64> = rows.iter().map(|r| if r.win { 1.0 } else { 0.0 }).collect();
    let n = rows.len();
    let mean = |xs: &[f64]| if n == 0 { 0.0 } else { xs.iter().sum::<f64>() / n as f64 };
    Aggregate {
        group: group.to_string(),
        count: n,
        mean_margin: mean(&margins),
        win_rate: mean(&wins),
        margin_ci: bootstrap_ci(&margins, opts.resamples, opts.level, opts.seed),
        win_ci: bootstrap_ci(&wins, opts.resamples, opts.level, opts.seed),
    }
}

/// Scores every scenario; scenarios whose scoring fails are recorded and left out of the aggregates.
pub fn evaluate(
    scorer: &dyn RouteScorer,
    scenarios: &[Scenario],
    cache: &dyn GeometryCache,
    opts: &EvalOptions,
) -> Result<EvaluationResult> {
    if scenarios.is_empty() {
        return Err(Error::InvalidInput("no scenarios to evaluate"));
    }
    let mut rows = Vec::with_capacity(scenarios.len());
    let mut failures = Vec::new();
    for s in scenarios {
        match evaluate_scenario(scorer, s, cache) {
            Ok(row) => rows.push(row),
            Err(error) => failures.push(ScenarioFailure { id: s.id.clone(), error }),
        }
    }
    Ok(summarize(scorer.name(), rows, failures, opts))
}

/// Builds aggregates from already computed rows.
pub fn summarize(
    scorer: &str,
    rows: Vec<ScenarioRow>,
    failures: Vec<ScenarioFailure>,
    opts: &EvalOptions,
) -> EvaluationResult {
    let mut names: Vec<&'static str> = Vec::new();
    for r in &rows {
        if !names.contains(&r.group) {
            names.push(r.group);
        }
    }
    let groups = names
        .iter()
        .map(|&name| {
            let members: Vec<&ScenarioRow> = rows.iter().filter(|r| r.group == name).collect();
            aggregate(name, &members, opts)
        })
        .collect();
    let all: Vec<&ScenarioRow> = rows.iter().collect();
    let overall = aggregate("overall", &all, opts);
    EvaluationResult { scorer: scorer.to_string(), rows, groups, overall, failures }
}

/// Gate training example for a scenario: features of the attacked route, labelled by whether the
/// hyperbolic margin is at least the Euclidean one.
pub fn gate_example(s: &Scenario, cfg: &ScoringConfig, cache: &dyn GeometryCache) -> Result<GateExample> {
    let events = s.events();
    let g = &s.snapshot;
    let fit = cache.fit(g, &cfg.hyperbolic)?;
    let hyp = |r| route_score_with_fit(g, &fit, r, &events, s.time, &cfg.intensity, &cfg.hyperbolic);
    let euc = |r| route_score_euclidean(g, r, &events, s.time, &cfg.intensity, &cfg.euclidean);
    let m_hyp = hyp(s.safe())?.value - hyp(s.attacked())?.value;
    let m_euc = euc(s.safe())?.value - euc(s.attacked())?.value;
    let features = extract_features(g, s.attacked(), fit.curvature)?;
    Ok(GateExample::from_margins(features, m_hyp, m_euc))
}
