//! `flow` and `translator` commands: run one scenario and persist its artifacts.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};

use smcf_core::flow::{FlowRun, Integrator};
use smcf_core::scenario::{Scenario, Setup};
use smcf_core::translator::{continuation, TranslatorSolution};
use smcf_core::verify::monitor_constants;

use crate::artifacts::{
    node_table, series_table, write_json, OutputFile, RunKind, RunManifest, RunStatus, SnapshotRecord, Table,
    TranslatorRecord, NODE_UNITS, SERIES_UNITS,
};

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Scenario::from_json(&text)?)
}

fn units_with(extra: &[(&'static str, &'static str)]) -> Vec<(&'static str, &'static str)> {
    NODE_UNITS.iter().chain(extra).copied().collect()
}

fn write_flow_run(dir: &Path, m: &mut RunManifest, setup: &Setup, run: &FlowRun, suffix: &str) -> Result<()> {
    let hash = m.scenario_hash.clone();
    let p = &setup.problem;
    let series = format!("series{suffix}.csv");
    series_table(&hash, &run.series).write(&dir.join(&series), &SERIES_UNITS)?;
    m.outputs.push(OutputFile { role: format!("series{suffix}"), path: series });

    let fin = format!("final{suffix}.csv");
    node_table(&hash, p, &["u", "ut"], &[&run.state.u, &run.state.ut])
        .write(&dir.join(&fin), &units_with(&[("u", "height"), ("ut", "height/time")]))?;
    m.outputs.push(OutputFile { role: format!("final{suffix}"), path: fin });

    for (k, snap) in run.snapshots.iter().enumerate() {
        let path = format!("snapshot{suffix}_{k:02}.csv");
        let [a, b, c] = &snap.states;
        node_table(&hash, p, &["u0", "u1", "u2"], &[a, b, c])
            .write(&dir.join(&path), &units_with(&[("u0", "height"), ("u1", "height"), ("u2", "height")]))?;
        m.outputs.push(OutputFile { role: format!("snapshot{suffix}"), path: path.clone() });
        if suffix.is_empty() {
            m.snapshots.push(SnapshotRecord { path, times: snap.times });
        }
    }
    let d = &mut m.diagnostics;
    let key = |k: &str| format!("{k}{suffix}");
    d.insert(key("speed_estimate"), run.speed_estimate);
    d.insert(key("speed_deviation"), run.deviation);
    d.insert(key("final_time"), run.state.t);
    d.insert(key("steps"), run.state.step_count as f64);
    d.insert(key("rejected_steps"), run.rejected_steps as f64);
    d.insert(key("sup_du2"), run.state.sup_du2);
    d.insert(key("initial_sup_du2"), run.initial_sup_du2);
    Ok(())
}

/// Validates the scenario, then runs the flow; the manifest is written whatever the outcome.
pub fn cmd_flow(scenario: &Scenario, dir: &Path) -> Result<RunManifest> {
    let setup = scenario.setup()?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut m = RunManifest::new(RunKind::Flow, scenario);
    let start = Instant::now();
    let outcome = (|| -> Result<()> {
        let c = monitor_constants(&setup.problem, &setup.u0)?;
        m.diagnostics.insert("c1".into(), c.c1);
        m.diagnostics.insert("c2".into(), c.c2);
        m.diagnostics.insert("kappa0".into(), c.kappa0);
        m.diagnostics.insert("h".into(), setup.problem.grid.h);
        let mut initial = vec![setup.u0.clone()];
        initial.extend(setup.reference_u0.clone());
        let runs = Integrator::new(&setup.problem, scenario.stepper.clone())?.integrate_many(initial)?;
        write_flow_run(dir, &mut m, &setup, &runs[0], "")?;
        if let Some(r) = runs.get(1) {
            write_flow_run(dir, &mut m, &setup, r, "_reference")?;
        }
        m.status = if runs.iter().all(|r| r.converged) { RunStatus::Converged } else { RunStatus::NotConverged };
        Ok(())
    })();
    finish(dir, m, start, outcome)
}

fn finish(dir: &Path, mut m: RunManifest, start: Instant, outcome: Result<()>) -> Result<RunManifest> {
    m.wall_seconds = start.elapsed().as_secs_f64();
    if let Err(e) = &outcome {
        m.status = RunStatus::Failed;
        m.error = Some(format!("{e:#}"));
    }
    m.write(dir)?;
    Ok(m)
}

pub fn translator_record(scenario: &Scenario, sol: &TranslatorSolution) -> TranslatorRecord {
    TranslatorRecord {
        c3: sol.c3,
        c3_est: sol.c3_est,
        c3_discrete: sol.c3_discrete,
        interior_residual: sol.interior_residual,
        boundary_residual: sol.boundary_residual,
        homotopy_used: sol.homotopy_used,
        grid: scenario.grid,
        eps_trace: sol.eps_trace.clone(),
    }
}

/// Validates the scenario, then runs the continuation; Newton failures are recorded in the manifest.
pub fn cmd_translator(scenario: &Scenario, dir: &Path) -> Result<RunManifest> {
    let setup = scenario.setup()?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut m = RunManifest::new(RunKind::Translator, scenario);
    let start = Instant::now();
    let outcome = (|| -> Result<()> {
        let p = &setup.problem;
        let sol = continuation(p, &scenario.continuation)?;
        let hash = m.scenario_hash.clone();

        write_json(&dir.join("translator.json"), &translator_record(scenario, &sol))?;
        m.outputs.push(OutputFile { role: "record".into(), path: "translator.json".into() });

        node_table(&hash, p, &["u"], &[&sol.profile]).write(&dir.join("profile.csv"), &units_with(&[("u", "height")]))?;
        m.outputs.push(OutputFile { role: "profile".into(), path: "profile.csv".into() });

        let cols = ["eps", "c3_est", "mean_deviation", "max_deviation", "newton_iterations"];
        let mut t = Table::new(&hash, &cols);
        for e in &sol.eps_trace {
            t.push(vec![
                Some(e.eps),
                Some(e.c3_est),
                Some(e.mean_deviation),
                Some(e.max_deviation),
                Some(e.newton_iterations as f64),
            ]);
        }
        let units = [
            ("eps", "1/time"),
            ("c3_est", "height/time"),
            ("mean_deviation", "height/time"),
            ("max_deviation", "height/time"),
            ("newton_iterations", "count"),
        ];
        t.write(&dir.join("eps_trace.csv"), &units)?;
        m.outputs.push(OutputFile { role: "eps_trace".into(), path: "eps_trace.csv".into() });

        let d = &mut m.diagnostics;
        d.insert("c3".into(), sol.c3);
        d.insert("c3_est".into(), sol.c3_est);
        d.insert("c3_discrete".into(), sol.c3_discrete);
        d.insert("interior_residual".into(), sol.interior_residual);
        d.insert("boundary_residual".into(), sol.boundary_residual);
        d.insert("h".into(), p.grid.h);
        m.status = RunStatus::Converged;
        Ok(())
    })();
    finish(dir, m, start, outcome)
}
