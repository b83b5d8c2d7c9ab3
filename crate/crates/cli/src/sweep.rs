//! `sweep` command: a scenario template run over a grid of parameters.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use smcf_core::scenario::Scenario;

use crate::artifacts::{scenario_hash, RunManifest, RunStatus, Table};
use crate::run::{cmd_flow, cmd_translator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// `n_radial = n`, `n_angular = 2 n`
    N,
    NRadial,
    NAngular,
    /// Multiplies the template's contact angle.
    PhiScale,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisValues {
    pub axis: Axis,
    pub values: Vec<f64>,
}

/// Parses `key=v1,v2,...` or `key=start:stop:count`.
pub fn parse_axis(spec: &str) -> Result<AxisValues> {
    let (key, vals) = spec.split_once('=').with_context(|| format!("grid spec `{spec}` is not key=values"))?;
    let axis = match key.trim() {
        "n" => Axis::N,
        "n_radial" => Axis::NRadial,
        "n_angular" => Axis::NAngular,
        "phi_scale" => Axis::PhiScale,
        other => bail!("unknown sweep parameter `{other}` (expected n, n_radial, n_angular or phi_scale)"),
    };
    let vals = vals.trim();
    let values: Vec<f64> = if let [a, b, n] = vals.split(':').collect::<Vec<_>>()[..] {
        let (a, b): (f64, f64) = (a.parse()?, b.parse()?);
        let n: usize = n.parse()?;
        match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
        }
    } else if vals.is_empty() {
        Vec::new()
    } else {
        vals.split(',').map(|v| v.trim().parse::<f64>()).collect::<std::result::Result<_, _>>()?
    };
    if values.is_empty() {
        bail!("sweep parameter `{key}` has no values");
    }
    if matches!(axis, Axis::N | Axis::NRadial | Axis::NAngular) && values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
        bail!("grid sizes must be positive integers");
    }
    Ok(AxisValues { axis, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepRun {
    Flow,
    Translator,
    Both,
}

struct Point {
    scenario: Scenario,
    phi_scale: f64,
}

/// Cartesian product of the axes, first axis outermost.
fn expand(template: &Scenario, axes: &[AxisValues]) -> Vec<Point> {
    let mut points = vec![Point { scenario: template.clone(), phi_scale: 1.0 }];
    for a in axes {
        let mut next = Vec::with_capacity(points.len() * a.values.len());
        for p in &points {
            for &v in &a.values {
                let g = p.scenario.grid;
                let (scenario, phi_scale) = match a.axis {
                    Axis::N => (p.scenario.with_grid(v as usize, 2 * v as usize), p.phi_scale),
                    Axis::NRadial => (p.scenario.with_grid(v as usize, g.n_angular), p.phi_scale),
                    Axis::NAngular => (p.scenario.with_grid(g.n_radial, v as usize), p.phi_scale),
                    Axis::PhiScale => (p.scenario.with_phi(template.phi.scaled(v)), v),
                };
                next.push(Point { scenario, phi_scale });
            }
        }
        points = next;
    }
    for (k, p) in points.iter_mut().enumerate() {
        p.scenario.label = format!("{}#{k}", template.label);
    }
    points
}

const COLUMNS: [&str; 10] = [
    "point",
    "n_radial",
    "n_angular",
    "phi_scale",
    "h",
    "c3",
    "c3_discrete",
    "flow_speed",
    "sup_du2",
    "ok",
];

/// Runs every point (in parallel on the current rayon pool) and writes
/// `summary.csv`, plus `order.csv` when the only axis is a grid size.
pub fn cmd_sweep(template: &Scenario, axes: &[AxisValues], run: SweepRun, dir: &Path) -> Result<Table> {
    if axes.is_empty() {
        bail!("empty parameter grid");
    }
    let points = expand(template, axes);
    for p in &points {
        p.scenario.validate().with_context(|| format!("sweep point {}", p.scenario.label))?;
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let results: Vec<Result<(Option<RunManifest>, Option<RunManifest>)>> = points
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let base = dir.join(format!("point_{k:03}"));
            let flow = match run {
                SweepRun::Flow | SweepRun::Both => Some(cmd_flow(&p.scenario, &base.join("flow"))?),
                SweepRun::Translator => None,
            };
            let translator = match run {
                SweepRun::Translator | SweepRun::Both => Some(cmd_translator(&p.scenario, &base.join("translator"))?),
                SweepRun::Flow => None,
            };
            Ok((flow, translator))
        })
        .collect();
    let hash = scenario_hash(template);
    let mut table = Table::new(&hash, &COLUMNS);
    for (k, (p, r)) in points.iter().zip(results).enumerate() {
        let (flow, translator) = r?;
        let diag = |m: &Option<RunManifest>, key: &str| m.as_ref().and_then(|m| m.diagnostics.get(key).copied());
        let ok = [&flow, &translator].iter().all(|m| m.as_ref().is_none_or(|m| m.status == RunStatus::Converged));
        let g = p.scenario.grid;
        table.push(vec![
            Some(k as f64),
            Some(g.n_radial as f64),
            Some(g.n_angular as f64),
            Some(p.phi_scale),
            diag(&flow, "h").or(diag(&translator, "h")),
            diag(&translator, "c3"),
            diag(&translator, "c3_discrete"),
            diag(&flow, "speed_estimate"),
            diag(&flow, "sup_du2"),
            Some(if ok { 1.0 } else { 0.0 }),
        ]);
    }
    let units = [
        ("point", "index"),
        ("n_radial", "count"),
        ("n_angular", "count"),
        ("phi_scale", "1"),
        ("h", "length"),
        ("c3", "height/time"),
        ("c3_discrete", "height/time"),
        ("flow_speed", "height/time"),
        ("sup_du2", "1"),
        ("ok", "bool"),
    ];
    table.write(&dir.join("summary.csv"), &units)?;
    if axes.len() == 1 && axes[0].axis != Axis::PhiScale {
        order_table(&table)?.write(
            &dir.join("order.csv"),
            &[("h", "length"), ("c3", "height/time"), ("order_c3", "1"), ("flow_speed", "height/time"), ("order_flow_speed", "1")],
        )?;
    }
    Ok(table)
}

/// Observed convergence orders from successive differences of three levels:
/// `log(|q1 - q0| / |q2 - q1|) / log(h0 / h1)`.
fn order_table(summary: &Table) -> Result<Table> {
    let (ch, cc, cf) = (summary.column("h")?, summary.column("c3")?, summary.column("flow_speed")?);
    let mut t = Table::new(&summary.hash, &["h", "c3", "order_c3", "flow_speed", "order_flow_speed"]);
    let rows = &summary.rows;
    let order = |col: usize, k: usize| -> Option<f64> {
        if k < 2 {
            return None;
        }
        let (q0, q1, q2) = (rows[k - 2][col]?, rows[k - 1][col]?, rows[k][col]?);
        let (h0, h1) = (rows[k - 2][ch]?, rows[k - 1][ch]?);
        Some(((q1 - q0).abs() / (q2 - q1).abs()).ln() / (h0 / h1).ln())
    };
    for k in 0..rows.len() {
        t.push(vec![rows[k][ch], rows[k][cc], order(cc, k), rows[k][cf], order(cf, k)]);
    }
    Ok(t)
}
