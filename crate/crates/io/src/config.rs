//! Run configuration: one TOML file covering every subcommand. Missing keys take defaults.

use std::fs;
use std::path::{Path, PathBuf};

use georoute_core::gate::{FeatureMask, TrainConfig};
use georoute_core::harness::{AttackProtocol, EvalOptions, Family, GeneratorConfig, Regime, ScoringConfig, Split};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed for scenario generation.
    pub seed: u64,
    pub paths: Paths,
    pub generate: GenerateSection,
    pub scoring: ScoringConfig,
    pub train: TrainConfig,
    pub eval: EvalSection,
    pub cascade: CascadeSection,
    pub bench: BenchSection,
}

/// Output locations. Unset entries live under `out_dir`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub out_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regimes: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub families: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cascade: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bench: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            regimes: None,
            families: None,
            gate: None,
            eval_dir: None,
            cascade: None,
            bench: None,
        }
    }
}

impl Paths {
    fn or_out(&self, p: &Option<PathBuf>, default: &str) -> PathBuf {
        p.clone().unwrap_or_else(|| self.out_dir.join(default))
    }

    pub fn regimes(&self) -> PathBuf {
        self.or_out(&self.regimes, "scenarios/regimes.jsonl")
    }

    pub fn families(&self) -> PathBuf {
        self.or_out(&self.families, "scenarios/families.jsonl")
    }

    pub fn gate(&self) -> PathBuf {
        self.or_out(&self.gate, "gate.json")
    }

    /// Per-example margins and labels written next to the gate weights.
    pub fn gate_labels(&self) -> PathBuf {
        self.gate().with_extension("labels.csv")
    }

    pub fn eval_dir(&self) -> PathBuf {
        self.or_out(&self.eval_dir, "eval")
    }

    pub fn cascade(&self) -> PathBuf {
        self.or_out(&self.cascade, "criticality.csv")
    }

    pub fn bench(&self) -> PathBuf {
        self.or_out(&self.bench, "bench.csv")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    pub regimes: Vec<Regime>,
    pub scenarios_per_regime: usize,
    pub families: Vec<Family>,
    /// Graphs per family; each is attacked under all five profiles.
    pub family_seeds: usize,
    /// Protocol for the regime scenarios.
    pub protocol: AttackProtocol,
    pub generator: GeneratorConfig,
}

impl Default for GenerateSection {
    fn default() -> Self {
        Self {
            regimes: Regime::ALL.to_vec(),
            scenarios_per_regime: 50,
            families: Family::ALL.to_vec(),
            family_seeds: 20,
            protocol: AttackProtocol::SeverityLoad,
            generator: GeneratorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitFilter {
    Train,
    Eval,
    All,
}

impl SplitFilter {
    pub fn admits(self, s: Split) -> bool {
        match self {
            Self::All => true,
            Self::Train => s == Split::Train,
            Self::Eval => s == Split::Eval,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Any of: native, euclidean, hyperbolic, hyperbolic_no_excitation, structural,
    /// hand_switching, blended, oracle.
    pub scorers: Vec<String>,
    pub split: SplitFilter,
    pub include_families: bool,
    /// Nine-bit mask of gate inputs; cleared bits are zeroed (feature ablation).
    pub feature_mask: u16,
    /// 4-tuples sampled per snapshot for the δ diagnostic; 0 disables it.
    pub delta_samples: usize,
    pub options: EvalOptions,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            scorers: ["native", "euclidean", "hyperbolic", "structural", "hand_switching", "blended"]
                .map(String::from)
                .to_vec(),
            split: SplitFilter::Eval,
            include_families: true,
            feature_mask: FeatureMask::ALL.0,
            delta_samples: 200,
            options: EvalOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CascadeSection {
    pub branching: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub depth: usize,
    pub trials: u64,
    pub seed: u64,
}

impl Default for CascadeSection {
    fn default() -> Self {
        Self {
            branching: vec![2.0, 3.0],
            p_grid: (1..=19).map(|i| i as f64 * 0.05).collect(),
            depth: 6,
            trials: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub scorers: Vec<String>,
    /// Timed calls per scorer.
    pub calls: usize,
    /// Distinct snapshots cycled through.
    pub snapshots: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            scorers: ["native", "structural", "euclidean", "hand_switching", "blended"].map(String::from).to_vec(),
            calls: 1000,
            snapshots: 10,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> CliResult<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        if FeatureMask::new(self.eval.feature_mask).is_none() {
            return usage(format!("feature_mask {:#x} has bits beyond the nine features", self.eval.feature_mask));
        }
        for name in self.eval.scorers.iter().chain(&self.bench.scorers) {
            if !crate::commands::SCORER_NAMES.contains(&name.as_str()) {
                return usage(format!("unknown scorer `{name}`"));
            }
        }
        if self.cascade.p_grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return usage("cascade p_grid values must lie in [0, 1]".into());
        }
        self.scoring.validate().map_err(|e| CliError::Usage(format!("scoring: {e}")))?;
        Ok(())
    }
}
