//! Executable checks of the qualitative properties of the flow and of
//! translating solutions, evaluated on recorded run data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{FlowRun, Snapshot, TimeSeriesRow};
use crate::graph::{evo_du_rhs, EvoDuConvention, EvoDuInputs};
use crate::operator::Problem;
use crate::translator::{EpsTraceEntry, TranslatorSolution};

/// Constants of the a-priori estimates, evaluated for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorConstants {
    /// `max |u_t|^2` at `t = 0`.
    pub c0: f64,
    pub kappa0: f64,
    /// `min phi`
    pub phi0: f64,
    /// `max phi`
    pub phi1: f64,
    /// `max |D_T phi|`
    pub phi2: f64,
    /// `Phi sqrt(c0) + 3 phi2` with `Phi = max(|phi0|, |phi1|)`.
    pub c2: f64,
    /// Bound for `|Du|^2`.
    pub c1: f64,
    /// `max |u - c3 t|` once measured.
    pub c8: Option<f64>,
}

/// `c1 = (sqrt(c2^4 + 4 c2^2 kappa0^2) - c2^2) / (2 kappa0^2)`
pub fn c1_bound(c2: f64, kappa0: f64) -> Result<f64> {
    if !(kappa0 > 0.0) {
        return Err(Error::CheckPrecondition(format!("kappa0 must be positive, got {kappa0}")));
    }
    if !(c2 >= 0.0) {
        return Err(Error::CheckPrecondition(format!("c2 must be nonnegative, got {c2}")));
    }
    // rationalized form, accurate for small and large c2
    Ok(2.0 * c2 / ((c2 * c2 + 4.0 * kappa0 * kappa0).sqrt() + c2))
}

pub fn monitor_constants(p: &Problem, u0: &[f64]) -> Result<MonitorConstants> {
    let kappa0 = p.grid.domain.kappa0;
    if !(kappa0 > 0.0) {
        return Err(Error::CheckPrecondition(format!("kappa0 must be positive, got {kappa0}")));
    }
    let q = p.flow_speed(u0)?;
    let c0 = q.iter().map(|x| x * x).fold(0.0, f64::max);
    let phi = &p.phi;
    let big_phi = phi.phi0.abs().max(phi.phi1.abs());
    let c2 = big_phi * c0.sqrt() + 3.0 * phi.phi2;
    Ok(MonitorConstants {
        c0,
        kappa0,
        phi0: phi.phi0,
        phi1: phi.phi1,
        phi2: phi.phi2,
        c2,
        c1: c1_bound(c2, kappa0)?,
        c8: None,
    })
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    /// The extremum compared against `threshold`.
    pub measured: f64,
    pub threshold: f64,
    /// Series row and time where `measured` was attained.
    pub at_row: Option<usize>,
    pub at_time: Option<f64>,
    /// Further measured quantities.
    pub values: BTreeMap<String, f64>,
    pub note: String,
}

impl CheckReport {
    pub fn new(name: &str, passed: bool, measured: f64, threshold: f64) -> Self {
        CheckReport {
            name: name.to_string(),
            passed,
            measured,
            threshold,
            at_row: None,
            at_time: None,
            values: BTreeMap::new(),
            note: String::new(),
        }
    }

    pub fn at(mut self, series: &[TimeSeriesRow], row: Option<usize>) -> Self {
        self.at_row = row;
        self.at_time = row.map(|k| series[k].t);
        self
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

/// All checks run for a set of artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckReport>,
    /// Per-convention residual tables behind the evolution-identity checks.
    #[serde(default)]
    pub evo_du_studies: Vec<EvoDuStudy>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Fixed-width table, one line per check.
    pub fn summary_table(&self) -> String {
        let mut out = format!("{:<34} {:<6} {:>14} {:>14}\n", "check", "result", "measured", "threshold");
        for c in &self.checks {
            out.push_str(&format!(
                "{:<34} {:<6} {:>14.6e} {:>14.6e}\n",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.measured,
                c.threshold
            ));
        }
        out
    }
}

fn argmax(v: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    v.enumerate().fold(None, |best, (k, x)| match best {
        Some((_, b)) if b >= x => best,
        _ => Some((k, x)),
    })
}

/// `sup |u_t|(t) <= sup |u_t|(0) (1 + 1e-6) + 1e-8`. With `allow_transient`
/// the first step also counts as initial, for data violating the boundary
/// condition.
pub fn check_ut_max_principle(series: &[TimeSeriesRow], allow_transient: bool) -> CheckReport {
    let name = "ut_max_principle";
    if series.is_empty() {
        return CheckReport::new(name, false, f64::NAN, f64::NAN).note("empty series");
    }
    let skip = if allow_transient { 2.min(series.len()) } else { 1 };
    let reference = series[..skip].iter().map(|r| r.sup_ut).fold(0.0, f64::max);
    let threshold = reference * (1.0 + 1e-6) + 1e-8;
    let worst = argmax(series.iter().skip(skip).map(|r| r.sup_ut));
    let (row, measured) = worst.map(|(k, x)| (Some(k + skip), x)).unwrap_or((None, reference));
    CheckReport::new(name, measured <= threshold, measured, threshold)
        .at(series, row)
        .with("initial_sup_ut", reference)
}

/// `sup |u_t|` nonincreasing in time: every increase between consecutive
/// rows is at most `rate_tol` times the elapsed time.
pub fn check_ut_monotone(series: &[TimeSeriesRow], rate_tol: f64) -> CheckReport {
    let name = "ut_monotone";
    let worst = argmax(series.windows(2).map(|w| (w[1].sup_ut - w[0].sup_ut) / (w[1].t - w[0].t)));
    let (row, measured) = worst.map(|(k, x)| (Some(k + 1), x)).unwrap_or((None, 0.0));
    CheckReport::new(name, measured <= rate_tol, measured, rate_tol).at(series, row)
}

/// `sup |Du|^2(t) <= max(sup |Du_0|^2, c1) + 5 h^2` and `< 1 - delta_space`.
pub fn check_spacelike_bound(
    series: &[TimeSeriesRow],
    constants: &MonitorConstants,
    h: f64,
    delta_space: f64,
) -> CheckReport {
    let name = "spacelike_bound";
    if series.is_empty() {
        return CheckReport::new(name, false, f64::NAN, f64::NAN).note("empty series");
    }
    let base = series[0].sup_du2.max(constants.c1);
    let threshold = (base + 5.0 * h * h).min(1.0 - delta_space);
    let (k, measured) = argmax(series.iter().map(|r| r.sup_du2)).unwrap();
    CheckReport::new(name, measured <= threshold && measured < 1.0 - delta_space, measured, threshold)
        .at(series, Some(k))
        .with("c1", constants.c1)
        .with("initial_sup_du2", series[0].sup_du2)
        .with("violation", (measured - base).max(0.0))
}

/// One grid of a space-like refinement study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacelikeLevel {
    pub h: f64,
    pub sup_du2: f64,
    /// `max(sup |Du_0|^2, c1)` on that grid.
    pub bound: f64,
}

impl SpacelikeLevel {
    pub fn violation(&self) -> f64 {
        (self.sup_du2 - self.bound).max(0.0)
    }
}

/// The amount by which `sup |Du|^2` exceeds its bound must shrink at least
/// like `h^2` between consecutive grids (zero counts as shrinking).
pub fn check_spacelike_refinement(levels: &[SpacelikeLevel]) -> CheckReport {
    let name = "spacelike_refinement";
    if levels.len() < 2 {
        return CheckReport::new(name, false, f64::NAN, 2.0).note("need at least two grids");
    }
    let mut passed = true;
    let mut worst_order = f64::INFINITY;
    let mut report = CheckReport::new(name, true, 0.0, 2.0);
    for (k, l) in levels.iter().enumerate() {
        report = report.with(&format!("violation_{k}"), l.violation()).with(&format!("h_{k}"), l.h);
    }
    for w in levels.windows(2) {
        let (a, b) = (w[0].violation(), w[1].violation());
        let ratio = (w[0].h / w[1].h).powi(2);
        if b > 0.0 {
            let order = (a / b).ln() / (w[0].h / w[1].h).ln();
            worst_order = worst_order.min(order);
            passed &= b <= a / ratio * (1.0 + 1e-9);
        }
    }
    report.passed = passed;
    report.measured = worst_order;
    if worst_order.is_infinite() {
        report = report.note("no grid exceeds its bound");
    }
    report
}

/// `osc(u_1 - u_2)` nonincreasing, decayed below `1e-4` of its initial value,
/// and `max |u_1 - u_2|` never above its initial value.
pub fn check_osc_decay(a: &FlowRun, b: &FlowRun) -> Result<CheckReport> {
    let (sa, sb) = (&a.series, &b.series);
    let same_steps = sa.len() == sb.len() && sa.iter().zip(sb).all(|(x, y)| x.t == y.t);
    if !same_steps || sa.is_empty() || sa.iter().any(|r| r.osc_vs_reference.is_none()) {
        return Err(Error::CheckPrecondition(
            "oscillation check needs two runs integrated in lockstep with reference columns".into(),
        ));
    }
    let osc: Vec<f64> = sa.iter().map(|r| r.osc_vs_reference.unwrap()).collect();
    let maxabs: Vec<f64> = sa.iter().map(|r| r.max_abs_vs_reference.unwrap_or(f64::NAN)).collect();
    let (k, worst_increase) = argmax(osc.windows(2).map(|w| w[1] - w[0])).unwrap_or((0, 0.0));
    let initial = osc[0];
    let last = *osc.last().unwrap();
    let decay_threshold = 1e-4 * initial + 1e-12;
    let max_excess = maxabs.iter().skip(1).map(|m| m - maxabs[0]).fold(f64::NEG_INFINITY, f64::max);
    let passed = worst_increase <= 1e-8 && last < decay_threshold && !(max_excess > 1e-8);
    Ok(CheckReport::new("osc_decay", passed, last, decay_threshold)
        .at(sa, Some(k + 1))
        .with("initial_osc", initial)
        .with("worst_increase", worst_increase)
        .with("max_abs_excess", max_excess.max(0.0))
        .with("final_time", sa.last().unwrap().t))
}

/// Flow run against a translating solution of the same scenario: asymptotic
/// speed, aligned final profile, and the drift `max |u - c3 t|` (`c8`).
pub fn check_translator_agreement(p: &Problem, run: &FlowRun, sol: &TranslatorSolution) -> CheckReport {
    let g = &p.grid;
    let nn = g.n_nodes();
    let speed_tol = 1e-4f64.max(5.0 * g.h * g.h);
    let speed_err = (run.speed_estimate - sol.c3).abs();
    let t = run.state.t;
    let diff: Vec<f64> = (0..nn).map(|k| run.state.u[k] - sol.c3 * t - sol.profile[k]).collect();
    let lo = diff.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = diff.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let aligned = 0.5 * (hi - lo);
    let drift: Vec<f64> =
        run.series.iter().map(|r| (r.u_max - sol.c3 * r.t).abs().max((r.u_min - sol.c3 * r.t).abs())).collect();
    let c8 = drift.iter().copied().fold(0.0, f64::max);
    // the drift must have settled over the final tenth of the run
    let t_tail = 0.9 * t;
    let tail: Vec<f64> = run.series.iter().zip(&drift).filter(|(r, _)| r.t >= t_tail).map(|(_, d)| *d).collect();
    let tail_spread = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - tail.iter().copied().fold(f64::INFINITY, f64::min);
    let drift_ok = c8.is_finite() && tail_spread < 1e-3 * c8.max(1.0);
    let passed = speed_err < speed_tol && aligned < 1e-3 && drift_ok;
    CheckReport::new("translator_agreement", passed, aligned, 1e-3)
        .with("speed_error", speed_err)
        .with("speed_tolerance", speed_tol)
        .with("c8", c8)
        .with("drift_tail_spread", tail_spread)
        .with("flow_speed", run.speed_estimate)
        .with("c3", sol.c3)
}

/// Interior and boundary residuals of a translator solution, against
/// `tol` relative to `1 + |c3|`.
pub fn check_translator_residuals(sol: &TranslatorSolution, tol: f64) -> CheckReport {
    let threshold = tol * (1.0 + sol.c3_discrete.abs());
    let measured = sol.interior_residual.max(sol.boundary_residual);
    CheckReport::new("translator_residuals", measured <= threshold, measured, threshold)
        .with("interior_residual", sol.interior_residual)
        .with("boundary_residual", sol.boundary_residual)
        .with("c3", sol.c3)
        .with("c3_discrete", sol.c3_discrete)
}

/// Distance of `eps mean(u_eps)` to the limit speed: strictly decreasing over
/// the entries with `eps <= eps_cap`, and below `tol` at some `eps >= eps_reach`.
pub fn check_eps_trace(trace: &[EpsTraceEntry], eps_cap: f64, tol: f64, eps_reach: f64) -> CheckReport {
    let name = "eps_trace";
    let tail: Vec<&EpsTraceEntry> = trace.iter().filter(|e| e.eps <= eps_cap * (1.0 + 1e-12)).collect();
    if tail.len() < 2 {
        return CheckReport::new(name, false, f64::NAN, tol).note("fewer than two continuation steps below the cap");
    }
    let mut monotone = true;
    let mut worst_ratio: f64 = 0.0;
    for w in tail.windows(2) {
        // rounding level differences near the limit do not count as increases
        let floor = 1e-13 * (1.0 + w[0].c3_est.abs());
        if w[1].mean_deviation >= w[0].mean_deviation && w[0].mean_deviation > floor {
            monotone = false;
        }
        if w[0].mean_deviation > 0.0 {
            worst_ratio = worst_ratio.max(w[1].mean_deviation / w[0].mean_deviation);
        }
    }
    let reached = tail.iter().find(|e| e.mean_deviation < tol).map(|e| e.eps);
    let reached_in_time = reached.is_some_and(|e| e >= eps_reach * (1.0 - 1e-12));
    let measured = tail
        .iter()
        .filter(|e| e.eps >= eps_reach * (1.0 - 1e-12))
        .map(|e| e.mean_deviation)
        .fold(f64::INFINITY, f64::min);
    let mut r = CheckReport::new(name, monotone && reached_in_time, measured, tol)
        .with("worst_ratio", worst_ratio)
        .with("steps_below_cap", tail.len() as f64);
    if let Some(e) = reached {
        r = r.with("eps_reached", e);
    }
    if !monotone {
        r = r.note("deviation increased between consecutive eps");
    }
    r
}

/// Zero-speed limit for `int phi = 0`: final `max |H|` and the per-step
/// energy identity `E(t + dt) - E(t) = dt int u_t^2 / v`, up to
/// `c_energy (dt^2 + h^2)`.
pub fn check_maximal_limit(p: &Problem, run: &FlowRun, c_energy: f64) -> Result<CheckReport> {
    let g = &p.grid;
    let scale = g.boundary_length() * p.phi.max_abs().max(1.0);
    if p.phi.boundary_integral.abs() > 1e-10 * scale {
        return Err(Error::CheckPrecondition(format!(
            "needs int phi = 0 on the boundary, got {:.3e}",
            p.phi.boundary_integral
        )));
    }
    let h_max = p.mean_curvature(&run.state.u)?.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let s = &run.series;
    let h2 = g.h * g.h;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_row = None;
    for k in 1..s.len() {
        let dt = s[k].t - s[k - 1].t;
        let defect = (s[k].energy - s[k - 1].energy - dt * s[k].dissipation).abs();
        let ratio = defect / (dt * dt + h2);
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_row = Some(k);
        }
    }
    let passed = h_max < 5e-3 && worst_ratio <= c_energy;
    Ok(CheckReport::new("maximal_limit", passed, h_max, 5e-3)
        .at(s, worst_row)
        .with("energy_defect_ratio", worst_ratio)
        .with("energy_constant", c_energy)
        .with("final_speed", run.speed_estimate))
}

/// Radial window, in the computational coordinate, where the evolution
/// residual is sampled: away from the center and from the boundary ring.
const EVO_WINDOW: (f64, f64) = (0.25, 0.6);

/// Maximum over interior nodes of `|d_t |Du|^2 - rhs|` at the middle state of
/// a snapshot, for each convention.
pub fn evo_du_residuals(p: &Problem, snap: &Snapshot, conventions: &[EvoDuConvention]) -> Result<Vec<f64>> {
    let g = &p.grid;
    let [t0, t1, t2] = snap.times;
    let (h1, h2) = (t1 - t0, t2 - t1);
    if !(h1 > 0.0 && h2 > 0.0) {
        return Err(Error::CheckPrecondition("snapshot times must increase".into()));
    }
    let du2_field = |u: &[f64]| -> Vec<f64> {
        let mut f = p.du2(u);
        f.extend(std::iter::repeat(0.0).take(g.n_a));
        f
    };
    let f0 = du2_field(&snap.states[0]);
    let f1 = du2_field(&snap.states[1]);
    let f2 = du2_field(&snap.states[2]);
    let (a0, a1, a2) = (-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2)));
    let u = &snap.states[1];
    let mut worst = vec![0.0f64; conventions.len()];
    for i in 1..g.n_r - 1 {
        let rho = (i as f64 - 0.5) * g.d_rho;
        if rho < EVO_WINDOW.0 || rho > EVO_WINDOW.1 {
            continue;
        }
        for j in 0..g.n_a {
            let k = (i - 1) * g.n_a + j;
            let lhs = a0 * f0[k] + a1 * f1[k] + a2 * f2[k];
            let (du, hessian) = g.derivatives(u, i, j);
            let (grad_du2, hessian_du2) = g.derivatives(&f1, i, j);
            let input = EvoDuInputs { du, hessian, grad_du2, hessian_du2 };
            let m = &g.node(i, j).metric;
            for (w, c) in worst.iter_mut().zip(conventions) {
                *w = w.max((lhs - evo_du_rhs(m, &input, c)?).abs());
            }
        }
    }
    Ok(worst)
}

/// Residuals of one convention across a refinement study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionResiduals {
    pub convention: EvoDuConvention,
    pub label: String,
    pub residuals: Vec<f64>,
    /// `log2` of consecutive residual ratios, per grid halving.
    pub orders: Vec<f64>,
    pub converges: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvoDuStudy {
    pub h: Vec<f64>,
    pub dt: Vec<f64>,
    pub conventions: Vec<ConventionResiduals>,
}

impl EvoDuStudy {
    pub fn validated(&self) -> Vec<EvoDuConvention> {
        self.conventions.iter().filter(|c| c.converges).map(|c| c.convention).collect()
    }
}

/// A convention converges when every refinement reduces its residual at an
/// observed order of at least this (nominal 2 for `h^2 + dt` with `dt ~ h^2`).
const EVO_MIN_ORDER: f64 = 1.5;

/// Evolution residual over a refinement study: `levels` are runs of the same
/// scenario on successively finer grids, each with at least one snapshot; the
/// first snapshot of each run is used.
pub fn check_evo_du_residual(levels: &[(&Problem, &FlowRun)]) -> Result<(CheckReport, EvoDuStudy)> {
    if levels.len() < 2 {
        return Err(Error::CheckPrecondition("evolution residual study needs at least two grids".into()));
    }
    let candidates = EvoDuConvention::candidates();
    let mut table = Vec::with_capacity(levels.len());
    let mut h = Vec::new();
    let mut dt = Vec::new();
    for (p, run) in levels {
        let snap = run
            .snapshots
            .first()
            .ok_or_else(|| Error::CheckPrecondition("run has no stored snapshots".into()))?;
        table.push(evo_du_residuals(p, snap, &candidates)?);
        h.push(p.grid.h);
        dt.push(snap.times[2] - snap.times[1]);
    }
    let conventions: Vec<ConventionResiduals> = candidates
        .iter()
        .enumerate()
        .map(|(c, conv)| {
            let residuals: Vec<f64> = table.iter().map(|r| r[c]).collect();
            let orders: Vec<f64> = residuals
                .windows(2)
                .zip(h.windows(2))
                .map(|(r, hh)| (r[0] / r[1]).ln() / (hh[0] / hh[1]).ln())
                .collect();
            let converges = orders.iter().all(|o| *o >= EVO_MIN_ORDER);
            ConventionResiduals { convention: *conv, label: conv.label(), residuals, orders, converges }
        })
        .collect();
    let study = EvoDuStudy { h, dt, conventions };
    let validated = study.validated();
    let best = study
        .conventions
        .iter()
        .filter(|c| c.converges)
        .map(|c| c.orders.iter().copied().fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max);
    let labels: Vec<String> = validated.iter().map(|c| c.label()).collect();
    let report = CheckReport::new("evo_du_residual", !validated.is_empty(), best, EVO_MIN_ORDER)
        .with("validated_count", validated.len() as f64)
        .note(if labels.is_empty() { "no convention converges".to_string() } else { labels.join("; ") });
    Ok((report, study))
}

/// Conventions validated by every study. Passes when exactly one remains;
/// the note names it.
pub fn check_evo_du_conventions(studies: &[EvoDuStudy]) -> CheckReport {
    let name = "evo_du_convention";
    let mut common = EvoDuConvention::candidates();
    for s in studies {
        let v = s.validated();
        common.retain(|c| v.contains(c));
    }
    let passed = !studies.is_empty() && common.len() == 1;
    let mut report = CheckReport::new(name, passed, common.len() as f64, 1.0);
    for (k, s) in studies.iter().enumerate() {
        report = report.with(&format!("validated_count_{k}"), s.validated().len() as f64);
    }
    let labels: Vec<String> = common.iter().map(|c| c.label()).collect();
    report.note(if labels.is_empty() { "no common convention".to_string() } else { labels.join("; ") })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, sup_ut: f64, sup_du2: f64) -> TimeSeriesRow {
        TimeSeriesRow {
            t,
            dt: 0.1,
            sup_ut,
            sup_du2,
            mean_ut: 0.0,
            hv_residual: 0.0,
            osc_vs_reference: None,
            max_abs_vs_reference: None,
            energy: 0.0,
            dissipation: 0.0,
            u_min: 0.0,
            u_max: 0.0,
        }
    }

    #[test]
    fn c1_closed_form() {
        assert!((c1_bound(1.0, 1.0).unwrap() - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        assert_eq!(c1_bound(0.0, 1.0).unwrap(), 0.0);
        assert!(c1_bound(1.0, 0.0).is_err());
        assert!(c1_bound(1e4, 1.0).unwrap() < 1.0);
    }

    #[test]
    fn stationary_series_passes_and_injected_growth_fails() {
        let flat: Vec<_> = (0..5).map(|k| row(k as f64, 0.0, 0.0)).collect();
        assert!(check_ut_max_principle(&flat, false).passed);
        assert!(check_ut_monotone(&flat, 1e-8).passed);
        let growing: Vec<_> = (0..5).map(|k| row(k as f64, 1.0 + 0.01 * k as f64, 0.0)).collect();
        let r = check_ut_max_principle(&growing, false);
        assert!(!r.passed);
        assert_eq!(r.at_row, Some(4));
        assert!(!check_ut_monotone(&growing, 1e-8).passed);
    }

    #[test]
    fn transient_is_tolerated_only_when_asked() {
        let s = vec![row(0.0, 1.0, 0.0), row(0.1, 1.5, 0.0), row(0.2, 1.2, 0.0)];
        assert!(!check_ut_max_principle(&s, false).passed);
        assert!(check_ut_max_principle(&s, true).passed);
    }

    #[test]
    fn lightlike_node_fails_spacelike_bound() {
        let k = MonitorConstants { c0: 0.0, kappa0: 1.0, phi0: 0.0, phi1: 0.0, phi2: 0.0, c2: 0.0, c1: 0.0, c8: None };
        let ok = vec![row(0.0, 0.0, 0.1), row(1.0, 0.0, 0.1)];
        assert!(check_spacelike_bound(&ok, &k, 0.05, 1e-3).passed);
        let bad = vec![row(0.0, 0.0, 0.1), row(1.0, 0.0, 1.0)];
        let r = check_spacelike_bound(&bad, &k, 0.05, 1e-3);
        assert!(!r.passed);
        assert_eq!(r.at_row, Some(1));
    }

    #[test]
    fn refinement_needs_second_order_shrinking() {
        let lv = |h: f64, v: f64| SpacelikeLevel { h, sup_du2: 0.5 + v, bound: 0.5 };
        assert!(check_spacelike_refinement(&[lv(0.1, 0.0), lv(0.05, 0.0), lv(0.025, 0.0)]).passed);
        assert!(check_spacelike_refinement(&[lv(0.1, 4e-3), lv(0.05, 1e-3), lv(0.025, 2e-4)]).passed);
        assert!(!check_spacelike_refinement(&[lv(0.1, 4e-3), lv(0.05, 2e-3)]).passed);
        assert!(!check_spacelike_refinement(&[lv(0.1, 0.0)]).passed);
    }

    fn study(converging: &[usize]) -> EvoDuStudy {
        let conventions = EvoDuConvention::candidates()
            .into_iter()
            .enumerate()
            .map(|(k, c)| ConventionResiduals {
                convention: c,
                label: c.label(),
                residuals: vec![1.0, 0.25],
                orders: vec![2.0],
                converges: converging.contains(&k),
            })
            .collect();
        EvoDuStudy { h: vec![0.1, 0.05], dt: vec![1e-3, 2.5e-4], conventions }
    }

    #[test]
    fn convention_intersection_must_be_a_single_entry() {
        let r = check_evo_du_conventions(&[study(&[5, 7]), study(&[7])]);
        assert!(r.passed);
        assert_eq!(r.note, EvoDuConvention::candidates()[7].label());
        assert!(!check_evo_du_conventions(&[study(&[5, 7]), study(&[5, 7])]).passed);
        assert!(!check_evo_du_conventions(&[study(&[5]), study(&[7])]).passed);
        assert!(!check_evo_du_conventions(&[]).passed);
    }

    fn entry(eps: f64, dev: f64) -> EpsTraceEntry {
        EpsTraceEntry { eps, c3_est: -0.4 + dev, mean_deviation: dev, max_deviation: dev, newton_iterations: 3 }
    }

    #[test]
    fn eps_trace_needs_monotone_decay_reaching_the_tolerance() {
        let good: Vec<_> = (0..12).map(|k| entry(0.5f64.powi(k), 0.1 * 0.5f64.powi(k))).collect();
        let r = check_eps_trace(&good, 0.25, 1e-3, 1e-3);
        assert!(r.passed, "{r:?}");
        let mut bumped = good.clone();
        bumped[5].mean_deviation = 0.2;
        assert!(!check_eps_trace(&bumped, 0.25, 1e-3, 1e-3).passed);
        assert!(!check_eps_trace(&good, 0.25, 1e-9, 1e-3).passed);
    }
}
