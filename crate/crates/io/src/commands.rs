//! The five subcommands as library functions; `main` only parses flags and prints.

use std::path::PathBuf;
use std::thread;
use std::time::Instant;

use georoute_core::cascade::{
    generate_expansion_tree, growth_slope, simulate_range, threshold_crossing, CascadeConfig, CascadePlan,
    CascadeTally, Criticality, CriticalityReport, CriticalityRow,
};
use georoute_core::gate::{gate_diagnostics, train_gate, FeatureMask, GateDiagnostics, GateExample, GateModel};
use georoute_core::graph::gromov_delta;
use georoute_core::harness::*;
use georoute_core::hyperbolic::GeometryCache;
use georoute_core::rng::derive_seed;
use georoute_core::stats::{correlations, Correlations, SignTest};
use georoute_core::NodeId;
use serde::{Deserialize, Serialize};

use crate::cache::SharedCache;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::formats::{self, CriticalityCsvRow, ScenarioCsvRow};

pub const SCORER_NAMES: [&str; 8] = [
    "native",
    "euclidean",
    "hyperbolic",
    "hyperbolic_no_excitation",
    "structural",
    "hand_switching",
    "blended",
    "oracle",
];

/// Instantiates a scorer by name; `blended` needs gate weights.
pub fn build_scorer(
    name: &str,
    cfg: &RunConfig,
    gate: Option<&GateModel>,
) -> CliResult<Box<dyn RouteScorer + Send + Sync>> {
    let sc = cfg.scoring.clone();
    Ok(match name {
        "native" => Box::new(NativeScorer),
        "euclidean" => Box::new(EuclideanScorer(sc)),
        "hyperbolic" => Box::new(HyperbolicScorer(sc)),
        "hyperbolic_no_excitation" => {
            let mut sc = sc;
            sc.hyperbolic.disable_excitation = true;
            Box::new(HyperbolicScorer(sc))
        }
        "structural" => Box::new(StructuralScorer(sc.intensity)),
        "hand_switching" => Box::new(HandSwitchingScorer(sc)),
        "blended" => {
            let model = gate.ok_or_else(|| {
                CliError::Data(format!(
                    "scorer `blended` needs gate weights at {} (run `georoute train` first)",
                    cfg.paths.gate().display()
                ))
            })?;
            let mask = FeatureMask::new(cfg.eval.feature_mask)
                .ok_or_else(|| CliError::Usage("feature mask wider than nine bits".into()))?;
            Box::new(BlendedScorer::new(sc, model.clone()).with_mask(mask))
        }
        "oracle" => Box::new(OracleScorer),
        other => return Err(CliError::Usage(format!("unknown scorer `{other}`"))),
    })
}

#[derive(Debug, Clone)]
pub struct GenOutput {
    pub regimes: Vec<Scenario>,
    pub families: Vec<Scenario>,
    pub written: Vec<PathBuf>,
}

/// Generates the regime and family scenario sets and writes them as JSON lines.
pub fn cmd_gen(cfg: &RunConfig) -> CliResult<GenOutput> {
    let g = &cfg.generate;
    let mut regimes = Vec::new();
    for &r in &g.regimes {
        regimes.extend(generate_regime_scenarios(
            r,
            g.scenarios_per_regime,
            cfg.seed,
            AttackProfile::new(g.protocol),
            &g.generator,
        )?);
    }
    let mut families = Vec::new();
    for &f in &g.families {
        families.extend(generate_family_scenarios(
            f,
            g.family_seeds,
            &AttackProfile::FAMILY_PROFILES,
            cfg.seed,
            &g.generator,
        )?);
    }
    let mut written = Vec::new();
    if !regimes.is_empty() {
        let p = cfg.paths.regimes();
        formats::write_scenarios(&p, &regimes)?;
        written.push(p);
    }
    if !families.is_empty() {
        let p = cfg.paths.families();
        formats::write_scenarios(&p, &families)?;
        written.push(p);
    }
    Ok(GenOutput { regimes, families, written })
}

fn read_required(path: PathBuf) -> CliResult<Vec<Scenario>> {
    if !path.exists() {
        return Err(CliError::Data(format!(
            "no scenarios at {} (run `georoute gen` first)",
            path.display()
        )));
    }
    formats::read_scenarios(&path)
}

/// Regime scenarios, plus family scenarios when asked for and present.
pub fn load_scenarios(cfg: &RunConfig, with_families: bool) -> CliResult<Vec<Scenario>> {
    let mut all = read_required(cfg.paths.regimes())?;
    let fam = cfg.paths.families();
    if with_families && fam.exists() {
        all.extend(formats::read_scenarios(&fam)?);
    }
    Ok(all)
}

/// Gate training row as written to the audit CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub id: String,
    pub split: Split,
    pub label: u8,
    pub margin_hyp: f64,
    pub margin_euc: f64,
    pub features: String,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: GateModel,
    pub examples: Vec<(String, GateExample)>,
    pub gate_path: PathBuf,
    pub labels_path: PathBuf,
}

pub fn gate_examples(
    scenarios: &[&Scenario],
    cfg: &RunConfig,
    cache: &dyn GeometryCache,
) -> CliResult<Vec<(String, GateExample)>> {
    scenarios
        .iter()
        .map(|s| Ok((s.id.clone(), gate_example(s, &cfg.scoring, cache)?)))
        .collect()
}

/// Trains the gate on the train split of the regime scenarios.
pub fn cmd_train(cfg: &RunConfig, cache: &SharedCache) -> CliResult<TrainOutput> {
    let scenarios = read_required(cfg.paths.regimes())?;
    let train: Vec<&Scenario> = scenarios.iter().filter(|s| s.split == Split::Train).collect();
    if train.is_empty() {
        return Err(CliError::Data("no train-split scenarios to learn from".into()));
    }
    let examples = gate_examples(&train, cfg, cache)?;
    let data: Vec<GateExample> = examples.iter().map(|(_, e)| *e).collect();
    let model = train_gate(&data, &cfg.train)?;

    let gate_path = cfg.paths.gate();
    let labels_path = cfg.paths.gate_labels();
    formats::write_gate(&gate_path, &model)?;
    formats::write_csv(
        &labels_path,
        examples.iter().map(|(id, e)| LabelRow {
            id: id.clone(),
            split: Split::Train,
            label: e.label as u8,
            margin_hyp: e.margin_hyp,
            margin_euc: e.margin_euc,
            features: e.features.values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
        }),
    )?;
    Ok(TrainOutput { model, examples, gate_path, labels_path })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerSummary {
    pub scorer: String,
    pub overall: Aggregate,
    pub groups: Vec<Aggregate>,
    pub failures: Vec<String>,
    /// Wins of this scorer against the native comparator on discordant scenarios.
    pub sign_test_vs_native: Option<SignTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRow {
    pub component: String,
    pub model: String,
    pub win_rate: f64,
    pub mean_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaCorrelations {
    pub scenarios: usize,
    pub shell_growth: Correlations,
    pub cycle_rank: Correlations,
    pub curvature: Correlations,
    pub hyperbolic_margin: Correlations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenarios: usize,
    pub split: crate::config::SplitFilter,
    pub scorers: Vec<ScorerSummary>,
    pub gate: Option<GateDiagnostics>,
    pub components: Vec<ComponentRow>,
    pub delta_correlations: Option<DeltaCorrelations>,
}

#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub results: Vec<EvaluationResult>,
    pub summary: Summary,
    pub dir: PathBuf,
}

const COMPONENTS: [(&str, &str); 4] = [
    ("neither", "native"),
    ("temporal_only", "euclidean"),
    ("spatial_only", "structural"),
    ("spatio_temporal", "blended"),
];

fn delta_correlations(
    scenarios: &[&Scenario],
    cfg: &RunConfig,
    cache: &dyn GeometryCache,
) -> CliResult<Option<DeltaCorrelations>> {
    if cfg.eval.delta_samples == 0 || scenarios.len() < 3 {
        return Ok(None);
    }
    let mut cols: [Vec<f64>; 5] = Default::default();
    for s in scenarios {
        let ex = gate_example(s, &cfg.scoring, cache)?;
        let delta = gromov_delta(&s.snapshot, cfg.eval.delta_samples, derive_seed(s.seed, 0xDE17A));
        cols[0].push(delta.delta);
        cols[1].push(ex.features.values[6]);
        cols[2].push(ex.features.values[7]);
        cols[3].push(ex.features.values[8]);
        cols[4].push(ex.margin_hyp);
    }
    Ok(Some(DeltaCorrelations {
        scenarios: scenarios.len(),
        shell_growth: correlations(&cols[0], &cols[1]),
        cycle_rank: correlations(&cols[0], &cols[2]),
        curvature: correlations(&cols[0], &cols[3]),
        hyperbolic_margin: correlations(&cols[0], &cols[4]),
    }))
}

/// Evaluates the configured scorers on the configured split and writes
/// `scenarios.csv`, `summary.json` and `components.csv` into the eval directory.
pub fn cmd_eval(cfg: &RunConfig, cache: &SharedCache) -> CliResult<EvalOutput> {
    let all = load_scenarios(cfg, cfg.eval.include_families)?;
    let selected: Vec<Scenario> = all.into_iter().filter(|s| cfg.eval.split.admits(s.split)).collect();
    if selected.is_empty() {
        return Err(CliError::Data("no scenarios in the selected split".into()));
    }
    let gate_path = cfg.paths.gate();
    let needs_gate = cfg.eval.scorers.iter().any(|s| s == "blended");
    let gate = if needs_gate {
        if !gate_path.exists() {
            return Err(CliError::Data(format!(
                "scorer `blended` needs gate weights at {} (run `georoute train` first)",
                gate_path.display()
            )));
        }
        Some(formats::read_gate(&gate_path)?)
    } else {
        None
    };

    let mut results = Vec::new();
    for name in &cfg.eval.scorers {
        let scorer = build_scorer(name, cfg, gate.as_ref())?;
        results.push(evaluate(scorer.as_ref(), &selected, cache, &cfg.eval.options)?);
    }

    let native = results.iter().find(|r| r.scorer == "native");
    let scorers = results
        .iter()
        .map(|r| ScorerSummary {
            scorer: r.scorer.clone(),
            overall: r.overall.clone(),
            groups: r.groups.clone(),
            failures: r.failures.iter().map(|f| format!("{}: {}", f.id, f.error)).collect(),
            sign_test_vs_native: native.filter(|n| n.scorer != r.scorer).map(|n| r.sign_test_against(n)),
        })
        .collect();
    let components = COMPONENTS
        .iter()
        .filter_map(|&(component, model)| {
            results.iter().find(|r| r.scorer == model).map(|r| ComponentRow {
                component: component.into(),
                model: model.into(),
                win_rate: r.overall.win_rate,
                mean_margin: r.overall.mean_margin,
            })
        })
        .collect();

    let gate_set: Vec<&Scenario> = selected.iter().filter(|s| matches!(s.kind, ScenarioKind::Regime(_))).collect();
    let gate_diag = match &gate {
        Some(model) if !gate_set.is_empty() => {
            let mask = FeatureMask::new(cfg.eval.feature_mask).unwrap_or(FeatureMask::ALL);
            let mut preds = Vec::with_capacity(gate_set.len());
            for (_, ex) in gate_examples(&gate_set, cfg, cache)? {
                preds.push((model.forward(&ex.features.masked(mask))?, ex.label));
            }
            Some(gate_diagnostics(&preds))
        }
        _ => None,
    };
    let needs_fits = cfg.eval.scorers.iter().any(|s| s != "native" && s != "oracle" && s != "structural");
    let delta = if needs_fits { delta_correlations(&gate_set, cfg, cache)? } else { None };

    let summary = Summary {
        scenarios: selected.len(),
        split: cfg.eval.split,
        scorers,
        gate: gate_diag,
        components,
        delta_correlations: delta,
    };
    let dir = cfg.paths.eval_dir();
    formats::write_csv(
        &dir.join("scenarios.csv"),
        results.iter().flat_map(|r| r.rows.iter().map(|row| ScenarioCsvRow::new(&r.scorer, row))),
    )?;
    formats::write_json(&dir.join("summary.json"), &summary)?;
    formats::write_csv(&dir.join("components.csv"), &summary.components)?;
    Ok(EvalOutput { results, summary, dir })
}

/// Criticality sweep for one branching factor with trials split across threads.
/// Per-trial seeds and integer tallies make the result independent of the split.
pub fn parallel_criticality(
    b: f64,
    p_grid: &[f64],
    depth: usize,
    trials: u64,
    seed: u64,
    threads: usize,
) -> CliResult<CriticalityReport> {
    let cfg = CascadeConfig { branching: b, depth, p: 0.5, trials, seed };
    cfg.validate()?;
    let tree = generate_expansion_tree(b, depth)?;
    let plan = CascadePlan::new(&tree.graph, NodeId(0))?;
    let threads = threads.max(1) as u64;
    let mut rows = Vec::with_capacity(p_grid.len());
    for (i, &p) in p_grid.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(georoute_core::Error::OutOfRange { what: "transmission probability", value: p }.into());
        }
        let pseed = derive_seed(seed, i as u64);
        let chunk = trials.div_ceil(threads);
        let tally = thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let range = (t * chunk).min(trials)..((t + 1) * chunk).min(trials);
                    let plan = &plan;
                    scope.spawn(move || simulate_range(plan, p, pseed, range))
                })
                .collect();
            let mut total = CascadeTally::default();
            for h in handles {
                total.merge(&h.join().expect("cascade worker panicked"));
            }
            total
        });
        let slope = growth_slope(&tally.stats().mean);
        rows.push(CriticalityRow { b, p, slope, classification: Criticality::classify(slope) });
    }
    Ok(CriticalityReport { empirical_threshold: threshold_crossing(&rows), analytic_threshold: cfg.analytic_threshold(), rows })
}

pub fn cmd_cascade(cfg: &RunConfig) -> CliResult<Vec<CriticalityReport>> {
    let c = &cfg.cascade;
    let threads = thread::available_parallelism().map_or(1, |n| n.get());
    let reports = c
        .branching
        .iter()
        .map(|&b| parallel_criticality(b, &c.p_grid, c.depth, c.trials, c.seed, threads))
        .collect::<CliResult<Vec<_>>>()?;
    let rows: Vec<CriticalityCsvRow> = reports.iter().flat_map(formats::criticality_rows).collect();
    formats::write_csv(&cfg.paths.cascade(), rows)?;
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub scorer: String,
    pub calls: usize,
    pub mean_us: f64,
    pub median_us: f64,
    pub p95_us: f64,
}

/// Mean, median and nearest-rank p95 of per-call times in microseconds.
pub fn timing_row(scorer: &str, mut micros: Vec<f64>) -> BenchRow {
    micros.sort_by(f64::total_cmp);
    let n = micros.len();
    let pick = |q: f64| if n == 0 { 0.0 } else { micros[((q * n as f64).ceil() as usize).clamp(1, n) - 1] };
    let median = if n == 0 {
        0.0
    } else if n % 2 == 1 {
        micros[n / 2]
    } else {
        (micros[n / 2 - 1] + micros[n / 2]) / 2.0
    };
    BenchRow {
        scorer: scorer.into(),
        calls: n,
        mean_us: if n == 0 { 0.0 } else { micros.iter().sum::<f64>() / n as f64 },
        median_us: median,
        p95_us: pick(0.95),
    }
}

/// Per-call latency of each scorer on a spread of stored snapshots, embedding cache warm.
pub fn cmd_bench(cfg: &RunConfig, cache: &SharedCache) -> CliResult<Vec<BenchRow>> {
    let scenarios = read_required(cfg.paths.regimes())?;
    let gate_path = cfg.paths.gate();
    let gate = if gate_path.exists() { Some(formats::read_gate(&gate_path)?) } else { None };
    let take = cfg.bench.snapshots.clamp(1, scenarios.len());
    let step = scenarios.len() / take;
    let picked: Vec<&Scenario> = (0..take).map(|i| &scenarios[i * step]).collect();
    let events: Vec<Vec<_>> = picked.iter().map(|s| s.events()).collect();
    for s in &picked {
        cache.fit(&s.snapshot, &cfg.scoring.hyperbolic)?;
    }
    let mut rows = Vec::new();
    for name in &cfg.bench.scorers {
        let scorer = build_scorer(name, cfg, gate.as_ref())?;
        let mut micros = Vec::with_capacity(cfg.bench.calls);
        for k in 0..cfg.bench.calls {
            let i = k % picked.len();
            let s = picked[i];
            let ctx = ScoringContext { snapshot: &s.snapshot, events: &events[i], time: s.time, cache };
            let route = if (k / picked.len()) % 2 == 0 { s.attacked() } else { s.safe() };
            let t0 = Instant::now();
            let score = scorer.score(&ctx, route)?;
            micros.push(t0.elapsed().as_secs_f64() * 1e6);
            std::hint::black_box(score);
        }
        rows.push(timing_row(scorer.name(), micros));
    }
    formats::write_csv(&cfg.paths.bench(), &rows)?;
    Ok(rows)
}
