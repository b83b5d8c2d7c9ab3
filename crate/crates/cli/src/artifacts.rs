//! On-disk formats: CSV tables with a hash header, run manifests and result records.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use smcf_core::flow::TimeSeriesRow;
use smcf_core::operator::Problem;
use smcf_core::scenario::{GridSpec, Scenario};
use smcf_core::translator::EpsTraceEntry;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST: &str = "manifest.json";

pub fn scenario_hash(s: &Scenario) -> String {
    hex::encode(Sha256::digest(s.canonical_json().as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Flow,
    Translator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    NotConverged,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub role: String,
    /// Relative to the run directory.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub path: String,
    pub times: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: RunKind,
    pub scenario_hash: String,
    pub tool_version: String,
    pub scenario: Scenario,
    pub status: RunStatus,
    pub error: Option<String>,
    pub outputs: Vec<OutputFile>,
    pub snapshots: Vec<SnapshotRecord>,
    pub wall_seconds: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(kind: RunKind, scenario: &Scenario) -> Self {
        RunManifest {
            kind,
            scenario_hash: scenario_hash(scenario),
            tool_version: TOOL_VERSION.to_string(),
            scenario: scenario.clone(),
            status: RunStatus::Failed,
            error: None,
            outputs: Vec::new(),
            snapshots: Vec::new(),
            wall_seconds: 0.0,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn output(&self, role: &str) -> Option<&str> {
        self.outputs.iter().find(|o| o.role == role).map(|o| o.path.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(MANIFEST), self)
    }

    pub fn read(dir: &Path) -> Result<RunManifest> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// JSON result record of a translator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslatorRecord {
    pub c3: f64,
    pub c3_est: f64,
    pub c3_discrete: f64,
    pub interior_residual: f64,
    pub boundary_residual: f64,
    pub homotopy_used: bool,
    pub grid: GridSpec,
    pub eps_trace: Vec<EpsTraceEntry>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// A numeric table; missing entries are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub hash: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(hash: &str, columns: &[&str]) -> Table {
        Table { hash: hash.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns.iter().position(|c| c == name).with_context(|| format!("missing column `{name}`"))
    }

    /// Header comment, column line, then rows. Floats use the shortest
    /// representation that reads back exactly.
    pub fn write(&self, path: &Path, units: &[(&str, &str)]) -> Result<()> {
        let mut out = String::new();
        let units: Vec<String> = units.iter().map(|(c, u)| format!("{c}:{u}")).collect();
        writeln!(out, "# scenario_sha256={} units={}", self.hash, units.join(","))?;
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.map(|x| format!("{x:?}")).unwrap_or_default()).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        fs::write(path, out).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Table> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let hash = header
            .strip_prefix("# scenario_sha256=")
            .and_then(|r| r.split_whitespace().next())
            .with_context(|| format!("{}: missing scenario hash header", path.display()))?;
        let columns: Vec<String> = lines.next().unwrap_or_default().split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != columns.len() {
                bail!("{}: row {} has {} cells, expected {}", path.display(), k, cells.len(), columns.len());
            }
            let row = cells
                .iter()
                .map(|c| {
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse::<f64>().map(Some).with_context(|| format!("{}: bad number `{c}`", path.display()))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Table { hash: hash.to_string(), columns, rows })
    }
}

pub const SERIES_UNITS: [(&str, &str); 12] = [
    ("t", "time"),
    ("dt", "time"),
    ("sup_ut", "height/time"),
    ("sup_du2", "1"),
    ("mean_ut", "height/time"),
    ("hv_residual", "height/time"),
    ("osc_vs_reference", "height"),
    ("max_abs_vs_reference", "height"),
    ("energy", "area"),
    ("dissipation", "area/time"),
    ("u_min", "height"),
    ("u_max", "height"),
];

pub const NODE_UNITS: [(&str, &str); 4] = [("i", "index"), ("j", "index"), ("x", "chart"), ("y", "chart")];

pub fn series_table(hash: &str, series: &[TimeSeriesRow]) -> Table {
    let mut t = Table::new(hash, &TimeSeriesRow::COLUMNS);
    for r in series {
        t.push(vec![
            Some(r.t),
            Some(r.dt),
            Some(r.sup_ut),
            Some(r.sup_du2),
            Some(r.mean_ut),
            Some(r.hv_residual),
            r.osc_vs_reference,
            r.max_abs_vs_reference,
            Some(r.energy),
            Some(r.dissipation),
            Some(r.u_min),
            Some(r.u_max),
        ]);
    }
    t
}

pub fn read_series(path: &Path) -> Result<(String, Vec<TimeSeriesRow>)> {
    let t = Table::read(path)?;
    if t.columns != TimeSeriesRow::COLUMNS {
        bail!("{}: unexpected time-series columns", path.display());
    }
    let req = |v: Option<f64>, k: usize| v.with_context(|| format!("{}: empty cell in row {k}", path.display()));
    let rows = t
        .rows
        .iter()
        .enumerate()
        .map(|(k, r)| {
            Ok(TimeSeriesRow {
                t: req(r[0], k)?,
                dt: req(r[1], k)?,
                sup_ut: req(r[2], k)?,
                sup_du2: req(r[3], k)?,
                mean_ut: req(r[4], k)?,
                hv_residual: req(r[5], k)?,
                osc_vs_reference: r[6],
                max_abs_vs_reference: r[7],
                energy: req(r[8], k)?,
                dissipation: req(r[9], k)?,
                u_min: req(r[10], k)?,
                u_max: req(r[11], k)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((t.hash, rows))
}

/// Node table over every unknown, ghost ring last: `i, j, x, y` followed by
/// one column per field. Fields shorter than the unknown count (physical
/// nodes only) leave the ghost rows empty.
pub fn node_table(hash: &str, p: &Problem, names: &[&str], fields: &[&[f64]]) -> Table {
    let g = &p.grid;
    let mut columns = vec!["i", "j", "x", "y"];
    columns.extend_from_slice(names);
    let mut t = Table::new(hash, &columns);
    for i in 1..=g.n_r + 1 {
        for j in 0..g.n_a {
            let x = if i <= g.n_r { g.node(i, j).x } else { g.ghost_points[j] };
            let k = g.idx(i, j);
            let mut row = vec![Some(i as f64), Some(j as f64), Some(x[0]), Some(x[1])];
            row.extend(fields.iter().map(|f| f.get(k).copied()));
            t.push(row);
        }
    }
    t
}

/// Reads the named columns of a node table written for `p`; physical-node
/// fields stop at the first empty cell.
pub fn read_node_fields(path: &Path, p: &Problem, names: &[&str]) -> Result<(String, Vec<Vec<f64>>)> {
    let t = Table::read(path)?;
    let g = &p.grid;
    if t.rows.len() != g.n_unknowns() {
        bail!("{}: {} rows, grid has {} unknowns", path.display(), t.rows.len(), g.n_unknowns());
    }
    let mut out = Vec::with_capacity(names.len());
    for name in names {
        let c = t.column(name)?;
        out.push(t.rows.iter().map_while(|r| r[c]).collect());
    }
    Ok((t.hash, out))
}
