//! Benchmark harness: scenario generators, attack protocols, comparator scorers and
//! margin/win evaluation.

mod attack;
mod evaluate;
mod generate;
mod scorers;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use attack::{inject_attack, pair_routes, route_pairs, INJECTED_SEVERITIES};
pub use evaluate::{
    aggregate, evaluate, evaluate_scenario, events_hash, gate_example, summarize, Aggregate, EvalOptions,
    EvaluationResult, ScenarioFailure, ScenarioRow,
};
pub use generate::{
    enumerate_routes, family_graph, generate_family_scenarios, generate_regime_scenarios, regime_graph,
    GeneratorConfig, FAMILY_NODES, SCORING_TIME,
};
pub use scorers::{
    hand_switching_score, native_score, structural_baseline_score, BlendedScorer, ConstantScorer, EuclideanScorer,
    HandSwitchingScorer, HyperbolicScorer, NativeScorer, OracleScorer, RouteScorer, ScoringConfig, ScoringContext,
    StructuralScorer,
};

use crate::graph::{FailureEvent, GraphSnapshot, Route};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum Regime {
    Clean,
    Noise,
    Churn,
    Mixed,
    NonTree,
}

impl Regime {
    pub const ALL: [Regime; 5] = [Self::Clean, Self::Noise, Self::Churn, Self::Mixed, Self::NonTree];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Clean => "clean",
            Self::Noise => "noise",
            Self::Churn => "churn",
            Self::Mixed => "mixed",
            Self::NonTree => "non_tree",
        }
    }

    /// The three regimes built on tree backbones without cross edges.
    pub fn is_tree_like(self) -> bool {
        matches!(self, Self::Clean | Self::Noise | Self::Churn)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Family {
    #[cfg_attr(feature = "serde", serde(rename = "BA"))]
    Ba,
    #[cfg_attr(feature = "serde", serde(rename = "WS"))]
    Ws,
    #[cfg_attr(feature = "serde", serde(rename = "ER"))]
    Er,
}

impl Family {
    pub const ALL: [Family; 3] = [Self::Ba, Self::Ws, Self::Er];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ba => "BA",
            Self::Ws => "WS",
            Self::Er => "ER",
        }
    }
}

/// Error for unrecognized regime, family or protocol names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownName(pub String);

impl fmt::Display for UnknownName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown name `{}`", self.0)
    }
}

impl FromStr for Regime {
    type Err = UnknownName;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|r| r.as_str() == s).ok_or_else(|| UnknownName(s.into()))
    }
}

impl FromStr for Family {
    type Err = UnknownName;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|r| r.as_str().eq_ignore_ascii_case(s)).ok_or_else(|| UnknownName(s.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum ScenarioKind {
    Regime(Regime),
    Family(Family),
}

impl ScenarioKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Regime(r) => r.as_str(),
            Self::Family(f) => f.as_str(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum AttackProtocol {
    /// The attacked route's last three nodes.
    SeverityLoad,
    /// The three highest-load nodes of the higher-load route in the pair.
    LoadMatched,
    /// Three route nodes drawn uniformly.
    Random,
}

impl AttackProtocol {
    pub const ALL: [AttackProtocol; 3] = [Self::SeverityLoad, Self::LoadMatched, Self::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SeverityLoad => "severity_load",
            Self::LoadMatched => "load_matched",
            Self::Random => "random",
        }
    }
}

impl FromStr for AttackProtocol {
    type Err = UnknownName;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| UnknownName(s.into()))
    }
}

/// Attack protocol plus a multiplier on the injected severities.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttackProfile {
    pub protocol: AttackProtocol,
    pub severity_scale: f64,
}

impl AttackProfile {
    pub const fn new(protocol: AttackProtocol) -> Self {
        Self { protocol, severity_scale: 1.0 }
    }

    /// The five cross-family profiles: three protocols and two severity scalings of `severity_load`.
    pub const FAMILY_PROFILES: [AttackProfile; 5] = [
        Self::new(AttackProtocol::SeverityLoad),
        Self::new(AttackProtocol::LoadMatched),
        Self::new(AttackProtocol::Random),
        Self { protocol: AttackProtocol::SeverityLoad, severity_scale: 0.5 },
        Self { protocol: AttackProtocol::SeverityLoad, severity_scale: 1.5 },
    ];

    pub fn label(&self) -> String {
        if self.severity_scale == 1.0 {
            self.protocol.as_str().into()
        } else {
            alloc::format!("{}_x{}", self.protocol.as_str(), self.severity_scale)
        }
    }
}

impl Default for AttackProfile {
    fn default() -> Self {
        Self::new(AttackProtocol::SeverityLoad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "snake_case"))]
pub enum Split {
    Train,
    Eval,
}

impl Split {
    /// Seeds 0–4 train, 5–9 evaluate (taken modulo 10).
    pub fn of_seed(seed_index: u32) -> Self {
        if seed_index % 10 < 5 {
            Self::Train
        } else {
            Self::Eval
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Eval => "eval",
        }
    }
}

/// One benchmark case: a snapshot, its candidate routes, the attacked/safe pair and the
/// failure history seen at scoring time.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub kind: ScenarioKind,
    pub profile: AttackProfile,
    pub seed_index: u32,
    pub replicate: u32,
    pub split: Split,
    /// Seed all randomness of this scenario derives from.
    pub seed: u64,
    pub time: f64,
    pub snapshot: GraphSnapshot,
    pub candidate_routes: Vec<Route>,
    pub attacked_index: usize,
    pub safe_index: usize,
    pub background_events: Vec<FailureEvent>,
    pub injected_events: Vec<FailureEvent>,
}

impl Scenario {
    pub fn attacked(&self) -> &Route {
        &self.candidate_routes[self.attacked_index]
    }

    pub fn safe(&self) -> &Route {
        &self.candidate_routes[self.safe_index]
    }

    /// Background and injected events merged in time order.
    pub fn events(&self) -> Vec<FailureEvent> {
        let mut all: Vec<FailureEvent> =
            self.background_events.iter().chain(&self.injected_events).copied().collect();
        all.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.node.cmp(&b.node)));
        all
    }

    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        if self.attacked_index == self.safe_index {
            return Err(Error::DegenerateScenario);
        }
        if self.attacked_index.max(self.safe_index) >= self.candidate_routes.len() {
            return Err(Error::InvalidInput("route index out of range"));
        }
        for r in &self.candidate_routes {
            r.indices_in(&self.snapshot)?;
        }
        let attacked = self.attacked();
        for e in self.background_events.iter().chain(&self.injected_events) {
            e.validate()?;
            if !self.snapshot.contains(e.node) {
                return Err(Error::UnknownNode(e.node));
            }
        }
        if self.injected_events.iter().any(|e| !attacked.contains(e.node)) {
            return Err(Error::InvalidInput("injected event outside the attacked route"));
        }
        Ok(())
    }
}
