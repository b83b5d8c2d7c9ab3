//! `verify` command: reload run artifacts and execute every applicable check.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use smcf_core::flow::{FlowRun, FlowState, Snapshot};
use smcf_core::scenario::{Scenario, Setup};
use smcf_core::translator::TranslatorSolution;
use smcf_core::verify::{
    check_evo_du_conventions, check_evo_du_residual, check_maximal_limit, check_osc_decay,
    check_spacelike_bound, check_spacelike_refinement, check_translator_agreement, check_translator_residuals,
    check_ut_max_principle, check_ut_monotone, monitor_constants, CheckReport, SpacelikeLevel, VerificationReport,
};
use smcf_core::Error;

use crate::artifacts::{
    read_json, read_node_fields, read_series, scenario_hash, RunKind, RunManifest, RunStatus, Table, TranslatorRecord,
};

/// Energy-identity constant in `|dE - dt D| <= C (dt^2 + h^2)`.
pub const ENERGY_CONSTANT: f64 = 1.0;
/// Relative tolerance on translator residuals.
pub const RESIDUAL_TOL: f64 = 1e-8;

struct Loaded {
    label: String,
    manifest: RunManifest,
    setup: Setup,
    flow: Option<(FlowRun, Option<FlowRun>)>,
    translator: Option<TranslatorSolution>,
}

fn label_of(dir: &Path, m: &RunManifest) -> String {
    let kind = match m.kind {
        RunKind::Flow => "flow",
        RunKind::Translator => "translator",
    };
    let n = m.scenario.grid.n_radial;
    if m.scenario.label.is_empty() {
        format!("{}@{n}:{kind}", dir.display())
    } else {
        format!("{}@{n}:{kind}", m.scenario.label)
    }
}

fn prefixed(label: &str, mut c: CheckReport) -> CheckReport {
    c.name = format!("{label}/{}", c.name);
    c
}

/// Every listed output exists and carries the manifest's hash, and the echoed
/// scenario hashes to the same value.
fn check_artifacts(dir: &Path, m: &RunManifest) -> CheckReport {
    let mut problems = Vec::new();
    let rehash = scenario_hash(&m.scenario);
    if rehash != m.scenario_hash {
        problems.push(format!("scenario rehashes to {rehash}"));
    }
    for o in &m.outputs {
        let path = dir.join(&o.path);
        if o.path.ends_with(".csv") {
            match Table::read(&path) {
                Ok(t) if t.hash == m.scenario_hash => {}
                Ok(_) => problems.push(format!("{}: hash mismatch", o.path)),
                Err(e) => problems.push(format!("{e:#}")),
            }
        } else if !path.is_file() {
            problems.push(format!("{}: missing", o.path));
        }
    }
    CheckReport::new("artifacts", problems.is_empty(), problems.len() as f64, 0.0).note(problems.join("; "))
}

fn load_flow_run(dir: &Path, m: &RunManifest, setup: &Setup, suffix: &str) -> Result<FlowRun> {
    let path = |role: &str| -> Result<PathBuf> {
        let r = format!("{role}{suffix}");
        Ok(dir.join(m.output(&r).with_context(|| format!("{}: manifest lists no `{r}` output", dir.display()))?))
    };
    let (_, series) = read_series(&path("series")?)?;
    let p = &setup.problem;
    let (_, mut fin) = read_node_fields(&path("final")?, p, &["u", "ut"])?;
    let ut = fin.pop().unwrap();
    let u = fin.pop().unwrap();
    if u.len() != p.grid.n_unknowns() || ut.len() != p.grid.n_nodes() {
        bail!("{}: final state does not match the grid", dir.display());
    }
    let mut snapshots = Vec::new();
    if suffix.is_empty() {
        for s in &m.snapshots {
            let (_, mut f) = read_node_fields(&dir.join(&s.path), p, &["u0", "u1", "u2"])?;
            let c = f.pop().unwrap();
            let b = f.pop().unwrap();
            let a = f.pop().unwrap();
            snapshots.push(Snapshot { times: s.times, states: [a, b, c] });
        }
    }
    let diag = |k: &str| m.diagnostics.get(&format!("{k}{suffix}")).copied().unwrap_or(f64::NAN);
    let last = series.last().with_context(|| format!("{}: empty time series", dir.display()))?;
    let state = FlowState {
        u,
        t: last.t,
        ut,
        sup_du2: series.iter().map(|r| r.sup_du2).fold(0.0, f64::max),
        sup_ut: series.iter().map(|r| r.sup_ut).fold(0.0, f64::max),
        step_count: diag("steps") as usize,
        dt: last.dt,
    };
    Ok(FlowRun {
        state,
        speed_estimate: diag("speed_estimate"),
        deviation: diag("speed_deviation"),
        converged: m.status == RunStatus::Converged,
        series,
        snapshots,
        rejected_steps: diag("rejected_steps") as usize,
        initial_sup_du2: diag("initial_sup_du2"),
    })
}

fn load_translator(dir: &Path, m: &RunManifest, setup: &Setup) -> Result<TranslatorSolution> {
    let record: TranslatorRecord =
        read_json(&dir.join(m.output("record").context("manifest lists no translator record")?))?;
    let (_, mut f) =
        read_node_fields(&dir.join(m.output("profile").context("manifest lists no profile")?), &setup.problem, &["u"])?;
    Ok(TranslatorSolution {
        profile: f.pop().unwrap(),
        c3: record.c3,
        c3_est: record.c3_est,
        c3_discrete: record.c3_discrete,
        eps_trace: record.eps_trace,
        interior_residual: record.interior_residual,
        boundary_residual: record.boundary_residual,
        homotopy_used: record.homotopy_used,
    })
}

fn load(dir: &Path, checks: &mut Vec<CheckReport>) -> Result<Option<Loaded>> {
    let manifest = RunManifest::read(dir)?;
    let label = label_of(dir, &manifest);
    checks.push(prefixed(&label, check_artifacts(dir, &manifest)));
    // a run stopped at max_time is still checked; its properties hold on the computed interval
    let (status_ok, note) = match manifest.status {
        RunStatus::Converged => (true, String::new()),
        RunStatus::NotConverged => (true, "stopped at max_time before convergence".to_string()),
        RunStatus::Failed => (false, manifest.error.clone().unwrap_or_default()),
    };
    checks.push(prefixed(
        &label,
        CheckReport::new("run_status", status_ok, if status_ok { 0.0 } else { 1.0 }, 0.0).note(note),
    ));
    if manifest.status == RunStatus::Failed {
        return Ok(None);
    }
    let setup = manifest.scenario.setup()?;
    let (flow, translator) = match manifest.kind {
        RunKind::Flow => {
            let run = load_flow_run(dir, &manifest, &setup, "")?;
            let reference = match manifest.output("series_reference") {
                Some(_) => Some(load_flow_run(dir, &manifest, &setup, "_reference")?),
                None => None,
            };
            (Some((run, reference)), None)
        }
        RunKind::Translator => (None, Some(load_translator(dir, &manifest, &setup)?)),
    };
    Ok(Some(Loaded { label, manifest, setup, flow, translator }))
}

fn flow_checks(l: &Loaded, run: &FlowRun, reference: Option<&FlowRun>) -> Result<Vec<CheckReport>> {
    let s = &l.manifest.scenario;
    let p = &l.setup.problem;
    let constants = monitor_constants(p, &l.setup.u0)?;
    let mut out = vec![
        check_spacelike_bound(&run.series, &constants, p.grid.h, s.stepper.delta_space),
        check_ut_max_principle(&run.series, !s.compatible_u0),
    ];
    if s.compatible_u0 {
        out.push(check_ut_monotone(&run.series, 1e-8));
    }
    if let Some(r) = reference {
        out.push(check_osc_decay(run, r)?);
    }
    match check_maximal_limit(p, run, ENERGY_CONSTANT) {
        Ok(c) => out.push(c),
        Err(Error::CheckPrecondition(_)) => {}
        Err(e) => return Err(e.into()),
    }
    Ok(out)
}

/// The scenario with its grid blanked: runs sharing this key form a refinement study.
fn study_key(s: &Scenario) -> String {
    s.with_grid(0, 0).canonical_json()
}

pub fn cmd_verify(dirs: &[PathBuf]) -> Result<VerificationReport> {
    if dirs.is_empty() {
        bail!("no run directories given");
    }
    let mut checks = Vec::new();
    let mut runs = Vec::new();
    for d in dirs {
        if let Some(l) = load(d, &mut checks).with_context(|| format!("loading {}", d.display()))? {
            runs.push(l);
        }
    }
    for l in &runs {
        if let Some((run, reference)) = &l.flow {
            for c in flow_checks(l, run, reference.as_ref())? {
                checks.push(prefixed(&l.label, c));
            }
        }
        if let Some(sol) = &l.translator {
            checks.push(prefixed(&l.label, check_translator_residuals(sol, RESIDUAL_TOL)));
        }
    }
    // flow against translator of the same scenario
    for f in runs.iter().filter(|l| l.flow.is_some()) {
        for t in runs.iter().filter(|l| l.translator.is_some()) {
            if f.manifest.scenario_hash == t.manifest.scenario_hash {
                let (run, _) = f.flow.as_ref().unwrap();
                let c = check_translator_agreement(&f.setup.problem, run, t.translator.as_ref().unwrap());
                checks.push(prefixed(&format!("{}+{}", f.label, t.label), c));
            }
        }
    }
    // refinement studies over flow runs that differ only in grid
    let mut studies: BTreeMap<String, Vec<&Loaded>> = BTreeMap::new();
    for l in runs.iter().filter(|l| l.flow.is_some()) {
        studies.entry(study_key(&l.manifest.scenario)).or_default().push(l);
    }
    let mut evo_studies = Vec::new();
    for group in studies.values_mut() {
        group.sort_by_key(|l| l.manifest.scenario.grid.n_radial);
        group.dedup_by_key(|l| l.manifest.scenario.grid.n_radial);
        if group.len() < 2 {
            continue;
        }
        let sizes: Vec<String> = group.iter().map(|l| l.manifest.scenario.grid.n_radial.to_string()).collect();
        let name = format!("{}[n={}]", group[0].manifest.scenario.label, sizes.join(","));
        let mut levels = Vec::new();
        for l in group.iter() {
            let (run, _) = l.flow.as_ref().unwrap();
            let c = monitor_constants(&l.setup.problem, &l.setup.u0)?;
            let initial = run.series.first().map(|r| r.sup_du2).unwrap_or(f64::NAN);
            let sup = run.series.iter().map(|r| r.sup_du2).fold(0.0, f64::max);
            levels.push(SpacelikeLevel { h: l.setup.problem.grid.h, sup_du2: sup, bound: initial.max(c.c1) });
        }
        checks.push(prefixed(&name, check_spacelike_refinement(&levels)));
        if group.iter().all(|l| !l.flow.as_ref().unwrap().0.snapshots.is_empty()) {
            let pairs: Vec<_> = group.iter().map(|l| (&l.setup.problem, &l.flow.as_ref().unwrap().0)).collect();
            let (report, study) = check_evo_du_residual(&pairs)?;
            checks.push(prefixed(&name, report));
            evo_studies.push(study);
        }
    }
    if evo_studies.len() >= 2 {
        checks.push(check_evo_du_conventions(&evo_studies));
    }
    Ok(VerificationReport { checks, evo_du_studies: evo_studies })
}
