//! On-disk formats: snapshot JSON, event and scenario JSON lines, gate weights JSON, CSV tables.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use georoute_core::cascade::CriticalityReport;
use georoute_core::gate::{GateModel, TrainingMetadata, DIMS, FEATURE_COUNT, HIDDEN};
use georoute_core::harness::{AttackProfile, Scenario, ScenarioKind, ScenarioRow, Split};
use georoute_core::{Edge, FailureEvent, GraphSnapshot, NodeAttrs, Route, RouteScore};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const GATE_FORMAT_VERSION: u32 = 1;

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(CliError::io(path))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(CliError::io(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    w.write_all(b"\n").map_err(CliError::io(path))?;
    finish(w, path)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(path, e.line(), e))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> CliResult<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, &item).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        w.write_all(b"\n").map_err(CliError::io(path))?;
    }
    finish(w, path)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let f = File::open(path).map_err(CliError::io(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(CliError::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CliError::parse(path, i + 1, e))?);
    }
    Ok(out)
}

/// A snapshot as stored on disk; loading re-runs all snapshot validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotFile {
    pub timestamp: f64,
    pub nodes: Vec<NodeAttrs>,
    pub edges: Vec<Edge>,
}

impl From<&GraphSnapshot> for SnapshotFile {
    fn from(g: &GraphSnapshot) -> Self {
        Self { timestamp: g.timestamp(), nodes: g.nodes().to_vec(), edges: g.edges().to_vec() }
    }
}

impl TryFrom<SnapshotFile> for GraphSnapshot {
    type Error = georoute_core::Error;

    fn try_from(f: SnapshotFile) -> Result<Self, Self::Error> {
        GraphSnapshot::new(f.timestamp, f.nodes, f.edges)
    }
}

pub fn write_snapshot(path: &Path, g: &GraphSnapshot) -> CliResult<()> {
    write_json(path, &SnapshotFile::from(g))
}

pub fn read_snapshot(path: &Path) -> CliResult<GraphSnapshot> {
    let f: SnapshotFile = read_json(path)?;
    GraphSnapshot::try_from(f).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_events(path: &Path, events: &[FailureEvent]) -> CliResult<()> {
    write_jsonl(path, events)
}

pub fn read_events(path: &Path) -> CliResult<Vec<FailureEvent>> {
    let events: Vec<FailureEvent> = read_jsonl(path)?;
    for (i, e) in events.iter().enumerate() {
        e.validate().map_err(|err| CliError::parse(path, i + 1, err))?;
    }
    Ok(events)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub id: String,
    pub kind: ScenarioKind,
    pub profile: AttackProfile,
    pub seed_index: u32,
    pub replicate: u32,
    pub split: Split,
    pub seed: u64,
    pub time: f64,
    pub snapshot: SnapshotFile,
    pub routes: Vec<Route>,
    pub attacked_index: usize,
    pub safe_index: usize,
    pub background_events: Vec<FailureEvent>,
    pub injected_events: Vec<FailureEvent>,
}

impl From<&Scenario> for ScenarioRecord {
    fn from(s: &Scenario) -> Self {
        Self {
            id: s.id.clone(),
            kind: s.kind,
            profile: s.profile,
            seed_index: s.seed_index,
            replicate: s.replicate,
            split: s.split,
            seed: s.seed,
            time: s.time,
            snapshot: SnapshotFile::from(&s.snapshot),
            routes: s.candidate_routes.clone(),
            attacked_index: s.attacked_index,
            safe_index: s.safe_index,
            background_events: s.background_events.clone(),
            injected_events: s.injected_events.clone(),
        }
    }
}

impl TryFrom<ScenarioRecord> for Scenario {
    type Error = georoute_core::Error;

    fn try_from(r: ScenarioRecord) -> Result<Self, Self::Error> {
        let s = Scenario {
            id: r.id,
            kind: r.kind,
            profile: r.profile,
            seed_index: r.seed_index,
            replicate: r.replicate,
            split: r.split,
            seed: r.seed,
            time: r.time,
            snapshot: r.snapshot.try_into()?,
            candidate_routes: r.routes,
            attacked_index: r.attacked_index,
            safe_index: r.safe_index,
            background_events: r.background_events,
            injected_events: r.injected_events,
        };
        s.validate()?;
        Ok(s)
    }
}

pub fn write_scenarios(path: &Path, scenarios: &[Scenario]) -> CliResult<()> {
    write_jsonl(path, scenarios.iter().map(ScenarioRecord::from))
}

pub fn read_scenarios(path: &Path) -> CliResult<Vec<Scenario>> {
    let records: Vec<ScenarioRecord> = read_jsonl(path)?;
    records
        .into_iter()
        .enumerate()
        .map(|(i, r)| Scenario::try_from(r).map_err(|e| CliError::parse(path, i + 1, e)))
        .collect()
}

/// Gate weights file: `{version, dims, W1, b1, W2, b2, metadata}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateFile {
    pub version: u32,
    pub dims: [usize; 3],
    #[serde(rename = "W1")]
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    #[serde(rename = "W2")]
    pub w2: Vec<f64>,
    pub b2: f64,
    pub metadata: TrainingMetadata,
}

impl From<&GateModel> for GateFile {
    fn from(m: &GateModel) -> Self {
        Self {
            version: GATE_FORMAT_VERSION,
            dims: DIMS,
            w1: m.w1.iter().map(|r| r.to_vec()).collect(),
            b1: m.b1.to_vec(),
            w2: m.w2.to_vec(),
            b2: m.b2,
            metadata: m.metadata.clone(),
        }
    }
}

impl TryFrom<GateFile> for GateModel {
    type Error = String;

    fn try_from(f: GateFile) -> Result<Self, String> {
        if f.version != GATE_FORMAT_VERSION {
            return Err(format!("unsupported gate format version {}", f.version));
        }
        if f.dims != DIMS {
            return Err(format!("gate dims {:?}, expected {:?}", f.dims, DIMS));
        }
        let shape_ok = f.w1.len() == HIDDEN
            && f.w1.iter().all(|r| r.len() == FEATURE_COUNT)
            && f.b1.len() == HIDDEN
            && f.w2.len() == HIDDEN;
        if !shape_ok {
            return Err("gate weight arrays do not match dims".into());
        }
        let mut m = GateModel { metadata: f.metadata, b2: f.b2, ..GateModel::default() };
        for (row, src) in m.w1.iter_mut().zip(&f.w1) {
            row.copy_from_slice(src);
        }
        m.b1.copy_from_slice(&f.b1);
        m.w2.copy_from_slice(&f.w2);
        m.validate().map_err(|e| e.to_string())?;
        Ok(m)
    }
}

pub fn write_gate(path: &Path, m: &GateModel) -> CliResult<()> {
    write_json(path, &GateFile::from(m))
}

pub fn read_gate(path: &Path) -> CliResult<GateModel> {
    let f: GateFile = read_json(path)?;
    GateModel::try_from(f).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

fn terms(s: &RouteScore) -> String {
    s.terms.iter().map(|t| format!("{}={}", t.name, t.value)).collect::<Vec<_>>().join(";")
}

/// One CSV row per (scorer, scenario).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioCsvRow {
    pub scorer: String,
    pub id: String,
    pub group: String,
    pub profile: String,
    pub split: Split,
    pub safe: f64,
    pub attacked: f64,
    pub margin: f64,
    pub win: u8,
    pub state_hash: String,
    pub safe_terms: String,
    pub attacked_terms: String,
}

impl ScenarioCsvRow {
    pub fn new(scorer: &str, r: &ScenarioRow) -> Self {
        Self {
            scorer: scorer.into(),
            id: r.id.clone(),
            group: r.group.into(),
            profile: r.profile.clone(),
            split: r.split,
            safe: r.safe.value,
            attacked: r.attacked.value,
            margin: r.margin,
            win: r.win as u8,
            state_hash: format!("{:016x}", r.state_hash),
            safe_terms: terms(&r.safe),
            attacked_terms: terms(&r.attacked),
        }
    }
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(csv_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityCsvRow {
    pub b: f64,
    pub p: f64,
    pub slope: f64,
    pub classification: String,
    pub analytic_threshold: f64,
}

pub fn criticality_rows(report: &CriticalityReport) -> Vec<CriticalityCsvRow> {
    report
        .rows
        .iter()
        .map(|r| CriticalityCsvRow {
            b: r.b,
            p: r.p,
            slope: r.slope,
            classification: r.classification.as_str().into(),
            analytic_threshold: report.analytic_threshold,
        })
        .collect()
}
