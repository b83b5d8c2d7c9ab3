//! Time integration of `u_t = g^ij(Du) D_i D_j u` with the contact-angle
//! boundary condition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gmres, FourierPreconditioner, GmresOptions, StencilSystem};
use crate::operator::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Explicit,
    SemiImplicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepperConfig {
    pub scheme: Scheme,
    /// Initial step; defaults to `0.25 diam^2 / n_radial^2`.
    pub dt: Option<f64>,
    /// Accepted steps multiply `dt` by this factor, up to `dt_max`.
    pub dt_growth: f64,
    /// Defaults to `0.05 diam^2`.
    pub dt_max: Option<f64>,
    /// Explicit scheme only.
    pub cfl_number: f64,
    pub tol_speed: f64,
    pub max_time: f64,
    pub max_steps: usize,
    /// Steps pushing `|Du|^2` above `1 - delta_space` are rejected.
    pub delta_space: f64,
    /// Times at which three consecutive states are kept.
    pub sample_times: Vec<f64>,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            scheme: Scheme::SemiImplicit,
            dt: None,
            dt_growth: 1.05,
            dt_max: None,
            cfl_number: 0.4,
            tol_speed: 1e-8,
            max_time: 100.0,
            max_steps: 100_000,
            delta_space: 1e-3,
            sample_times: Vec::new(),
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return bad("dt must be positive");
            }
        }
        if let Some(dt) = self.dt_max {
            if !(dt > 0.0) {
                return bad("dt_max must be positive");
            }
        }
        if !(self.delta_space > 0.0 && self.delta_space <= 1e-2) {
            return bad("delta_space must lie in (0, 1e-2]");
        }
        if !(self.dt_growth >= 1.0) {
            return bad("dt_growth must be at least 1");
        }
        if !(self.cfl_number > 0.0 && self.tol_speed > 0.0 && self.max_time > 0.0) {
            return bad("cfl_number, tol_speed and max_time must be positive");
        }
        Ok(())
    }

    pub fn initial_dt(&self, p: &Problem) -> f64 {
        let d = domain_diameter(p);
        self.dt.unwrap_or(0.25 * d * d / (p.grid.n_r * p.grid.n_r) as f64)
    }

    fn max_dt(&self, p: &Problem) -> f64 {
        let d = domain_diameter(p);
        self.dt_max.unwrap_or(0.05 * d * d).max(self.initial_dt(p))
    }
}

/// Largest sigma-length of a chord between boundary samples.
pub fn domain_diameter(p: &Problem) -> f64 {
    let b = &p.grid.boundary;
    let step = (b.len() / 64).max(1);
    let mut d: f64 = 0.0;
    for a in b.iter().step_by(step) {
        for c in b.iter().step_by(step) {
            let mid = [0.5 * (a.point[0] + c.point[0]), 0.5 * (a.point[1] + c.point[1])];
            if let Ok(m) = p.grid.domain.metric.at(mid) {
                d = d.max(m.norm([c.point[0] - a.point[0], c.point[1] - a.point[1]]));
            }
        }
    }
    d
}

/// Initial data `u_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    Constant { value: f64 },
    /// `sum coef x^px y^py` over `[coef, px, py]` terms in chart coordinates.
    Polynomial { terms: Vec<[f64; 3]> },
    /// Values at the physical nodes, ring-major.
    Sampled { values: Vec<f64> },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Constant { value: 0.0 }
    }
}

impl InitialData {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            InitialData::Constant { value } => *value,
            InitialData::Polynomial { terms } => {
                terms.iter().map(|[c, px, py]| c * x[0].powi(*px as i32) * x[1].powi(*py as i32)).sum()
            }
            InitialData::Sampled { .. } => f64::NAN,
        }
    }
}

/// Width, in `rho`, of the boundary layer used to make initial data compatible.
const COMPAT_WIDTH: f64 = 0.25;

fn compat_profile(rho: f64) -> f64 {
    let x = (1.0 - rho) / COMPAT_WIDTH;
    if x.abs() >= 1.0 {
        0.0
    } else {
        (rho - 1.0) * (1.0 - x * x).powi(3)
    }
}

/// Samples initial data on the grid, optionally corrects it near the boundary
/// so that it satisfies the contact condition, and closes the ghost ring.
pub fn initial_field(p: &Problem, data: &InitialData, compatible: bool) -> Result<Vec<f64>> {
    let g = &p.grid;
    let mut u = match data {
        InitialData::Sampled { values } => {
            if values.len() != g.n_nodes() {
                return Err(Error::InvalidConfig(format!(
                    "sampled initial data has {} values, grid has {} nodes",
                    values.len(),
                    g.n_nodes()
                )));
            }
            let mut u = values.clone();
            for j in 0..g.n_a {
                u.push(2.0 * values[g.idx(g.n_r, j)] - values[g.idx(g.n_r - 1, j)]);
            }
            u
        }
        _ => g.sample(|x| data.eval(x)),
    };
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidConfig("initial data is not finite".into()));
    }
    if compatible {
        let n = g.n_r;
        let rho = |i: usize| (i as f64 - 0.5) * g.d_rho;
        let deta = (compat_profile(rho(n + 1)) - compat_profile(rho(n - 1))) / (2.0 * g.d_rho);
        let mut amp = vec![0.0; g.n_a];
        for (j, a) in amp.iter_mut().enumerate() {
            let (dn, tau) = g.boundary_derivatives(&u, j);
            if tau * tau >= 1.0 {
                return Err(Error::SpacelikeViolation { location: format!("boundary node {j}"), du2: tau * tau });
            }
            let target = Problem::normal_target(p.phi.values[j], tau);
            *a = (target - dn) / (g.normal_coeffs[j][0] * deta);
        }
        for i in 1..=n + 1 {
            let e = compat_profile(rho(i));
            if e != 0.0 {
                for (j, a) in amp.iter().enumerate() {
                    u[g.idx(i, j)] += a * e;
                }
            }
        }
    }
    p.apply_contact_bc(&mut u)?;
    let du2 = p.sup_du2(&u);
    if !(du2 < 1.0) {
        return Err(Error::SpacelikeViolation { location: "initial data".into(), du2 });
    }
    Ok(u)
}

/// Evolving graph and its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    /// Values at all unknowns, ghost ring included.
    pub u: Vec<f64>,
    pub t: f64,
    /// Flow speed at the physical nodes: `Q(u)` initially, then the backward
    /// difference quotient of the last step.
    pub ut: Vec<f64>,
    pub sup_du2: f64,
    pub sup_ut: f64,
    pub step_count: usize,
    /// Step size proposed for the next step.
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesRow {
    pub t: f64,
    pub dt: f64,
    pub sup_ut: f64,
    pub sup_du2: f64,
    pub mean_ut: f64,
    /// `max |H v - u_t|`
    pub hv_residual: f64,
    /// `osc(u - u_ref)` for paired runs.
    pub osc_vs_reference: Option<f64>,
    /// `max |u - u_ref|` for paired runs.
    pub max_abs_vs_reference: Option<f64>,
    /// `int v - int_{dOmega} u phi`
    pub energy: f64,
    /// `int u_t^2 / v`
    pub dissipation: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl TimeSeriesRow {
    pub const COLUMNS: [&'static str; 12] = [
        "t",
        "dt",
        "sup_ut",
        "sup_du2",
        "mean_ut",
        "hv_residual",
        "osc_vs_reference",
        "max_abs_vs_reference",
        "energy",
        "dissipation",
        "u_min",
        "u_max",
    ];
}

/// Three consecutive states around a requested sample time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub times: [f64; 3],
    pub states: [Vec<f64>; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRun {
    pub state: FlowState,
    /// Area-weighted mean of `u_t` at the final state.
    pub speed_estimate: f64,
    /// `max |u_t - mean u_t|` at the final state.
    pub deviation: f64,
    pub converged: bool,
    pub series: Vec<TimeSeriesRow>,
    pub snapshots: Vec<Snapshot>,
    pub rejected_steps: usize,
    pub initial_sup_du2: f64,
}

impl FlowRun {
    pub fn require_converged(self) -> Result<FlowRun> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged { t: self.state.t, deviation: self.deviation })
        }
    }
}

struct Tracker {
    run: FlowRun,
    pending: Vec<([f64; 2], [Vec<f64>; 2])>,
    next_sample: usize,
}

pub struct Integrator<'a> {
    pub problem: &'a Problem,
    pub cfg: StepperConfig,
    gmres: GmresOptions,
}

/// Oscillation and sup norm of `a - b`.
fn osc(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (x, y) in a.iter().zip(b) {
        lo = lo.min(x - y);
        hi = hi.max(x - y);
    }
    (hi - lo, hi.abs().max(lo.abs()))
}

impl<'a> Integrator<'a> {
    pub fn new(problem: &'a Problem, cfg: StepperConfig) -> Result<Self> {
        cfg.validate()?;
        let gmres = GmresOptions { rel_tol: 1e-10, abs_tol: 1e-15, ..GmresOptions::default() };
        Ok(Integrator { problem, cfg, gmres })
    }

    pub fn initial_state(&self, mut u0: Vec<f64>) -> Result<FlowState> {
        let p = self.problem;
        p.apply_contact_bc(&mut u0)?;
        let ut = p.flow_speed(&u0)?;
        let sup_du2 = p.sup_du2(&u0);
        let sup_ut = ut.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        Ok(FlowState { u: u0, t: 0.0, ut, sup_du2, sup_ut, step_count: 0, dt: self.cfg.initial_dt(p) })
    }

    fn explicit_dt(&self, u: &[f64]) -> f64 {
        let g = &self.problem.grid;
        let mut hmin = f64::INFINITY;
        for i in 1..=g.n_r {
            for j in 0..g.n_a {
                let x = g.node(i, j).x;
                let m = &g.node(i, j).metric;
                let y = g.node(i, (j + 1) % g.n_a).x;
                hmin = hmin.min(m.norm([y[0] - x[0], y[1] - x[1]]));
                if i < g.n_r {
                    let z = g.node(i + 1, j).x;
                    hmin = hmin.min(m.norm([z[0] - x[0], z[1] - x[1]]));
                }
            }
        }
        let du2 = self.problem.sup_du2(u).min(1.0 - 1e-6);
        self.cfg.cfl_number * hmin * hmin * (1.0 - du2) / 2.0
    }

    /// One update of `u` over `dt`, boundary closure included. Returns the new
    /// field and its `|Du|^2` supremum.
    pub fn advance(&self, u: &[f64], dt: f64, guess: Option<&[f64]>) -> Result<(Vec<f64>, f64)> {
        let p = self.problem;
        let g = &p.grid;
        let q = p.flow_speed(u)?;
        let mut next = u.to_vec();
        match self.cfg.scheme {
            Scheme::Explicit => {
                for (k, qk) in q.iter().enumerate() {
                    next[k] += dt * qk;
                }
            }
            Scheme::SemiImplicit => {
                // solve for the increment: (I/dt - L(u)) d = Q(u), linearized closure on the ghost ring
                let mut sys = StencilSystem::new(g.n_r + 1, g.n_a);
                p.add_frozen_operator(u, &mut sys, -1.0, 1.0 / dt)?;
                let mut rhs = vec![0.0; g.n_unknowns()];
                rhs[..q.len()].copy_from_slice(&q);
                p.add_bc_rows(u, &mut sys, &mut rhs, false)?;
                let mut d: Vec<f64> = match guess {
                    Some(v) => v.iter().map(|x| x * dt).collect(),
                    None => q.iter().map(|x| x * dt).chain(std::iter::repeat(0.0)).take(g.n_unknowns()).collect(),
                };
                let pc = FourierPreconditioner::new(&sys)?;
                gmres(&|x, y| sys.apply(x, y), &|x, y| pc.apply(x, y), &rhs, &mut d, &self.gmres)?;
                for (n, dk) in next.iter_mut().zip(&d) {
                    *n += dk;
                }
            }
        }
        p.apply_contact_bc(&mut next)?;
        let du2 = p.sup_du2(&next);
        if !du2.is_finite() {
            return Err(Error::SpacelikeViolation { location: "after step".into(), du2 });
        }
        Ok((next, du2))
    }

    fn row(&self, st: &FlowState, dt: f64, osc_ref: Option<(f64, f64)>) -> Result<TimeSeriesRow> {
        let p = self.problem;
        let g = &p.grid;
        let q = p.flow_speed(&st.u)?;
        let phys = p.physical(&st.u);
        let mean_ut = g.integrate(|i, j| st.ut[(i - 1) * g.n_a + j]) / g.area();
        let hv = q.iter().zip(&st.ut).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(TimeSeriesRow {
            t: st.t,
            dt,
            sup_ut: st.ut.iter().fold(0.0f64, |a, b| a.max(b.abs())),
            sup_du2: p.sup_du2(&st.u),
            mean_ut,
            hv_residual: hv,
            osc_vs_reference: osc_ref.map(|o| o.0),
            max_abs_vs_reference: osc_ref.map(|o| o.1),
            energy: p.energy(&st.u)?,
            dissipation: p.dissipation(&st.u, &st.ut)?,
            u_min: phys.iter().copied().fold(f64::INFINITY, f64::min),
            u_max: phys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }

    fn speed_stats(&self, st: &FlowState) -> (f64, f64) {
        let g = &self.problem.grid;
        let mean = g.integrate(|i, j| st.ut[(i - 1) * g.n_a + j]) / g.area();
        let dev = st.ut.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
        (mean, dev)
    }

    /// Integrates several initial data in lockstep with a shared step
    /// sequence until every run has converged or `max_time` is reached.
    pub fn integrate_many(&self, initial: Vec<Vec<f64>>) -> Result<Vec<FlowRun>> {
        if initial.is_empty() {
            return Err(Error::InvalidConfig("no initial data".into()));
        }
        let p = self.problem;
        let nn = p.grid.n_nodes();
        let mut trackers = Vec::with_capacity(initial.len());
        for u0 in initial {
            let st = self.initial_state(u0)?;
            let (mean, dev) = self.speed_stats(&st);
            let initial_sup_du2 = st.sup_du2;
            trackers.push(Tracker {
                run: FlowRun {
                    state: st,
                    speed_estimate: mean,
                    deviation: dev,
                    converged: false,
                    series: Vec::new(),
                    snapshots: Vec::new(),
                    rejected_steps: 0,
                    initial_sup_du2,
                },
                pending: Vec::new(),
                next_sample: 0,
            });
        }
        let osc_of = |tr: &[Tracker], k: usize| -> Option<(f64, f64)> {
            if tr.len() < 2 {
                return None;
            }
            let other = if k == 0 { 1 } else { 0 };
            Some(osc(&tr[k].run.state.u[..nn], &tr[other].run.state.u[..nn]))
        };
        for k in 0..trackers.len() {
            let row = self.row(&trackers[k].run.state, 0.0, osc_of(&trackers, k))?;
            trackers[k].run.series.push(row);
        }
        let mut samples = self.cfg.sample_times.clone();
        samples.sort_by(f64::total_cmp);

        let mut dt = trackers[0].run.state.dt;
        let dt_max = self.cfg.max_dt(p);
        let mut steps = 0;
        loop {
            if trackers.iter().all(|t| t.run.deviation < self.cfg.tol_speed) && steps > 0 {
                for t in trackers.iter_mut() {
                    t.run.converged = true;
                }
                break;
            }
            let t_now = trackers[0].run.state.t;
            if t_now >= self.cfg.max_time || steps >= self.cfg.max_steps {
                break;
            }
            if self.cfg.scheme == Scheme::Explicit {
                dt = trackers.iter().map(|t| self.explicit_dt(&t.run.state.u)).fold(f64::INFINITY, f64::min);
            }
            dt = dt.min(self.cfg.max_time - t_now).max(f64::MIN_POSITIVE);
            // attempt the step for all runs, halving on failure
            let results = loop {
                if dt < 1e-14 {
                    return Err(Error::StepUnderflow { t: t_now, dt });
                }
                let attempt: Result<Vec<(Vec<f64>, f64)>> = trackers
                    .iter()
                    .map(|t| {
                        let guess: Vec<f64> =
                            t.run.state.ut.iter().copied().chain(std::iter::repeat(0.0)).take(p.grid.n_unknowns()).collect();
                        self.advance(&t.run.state.u, dt, Some(&guess))
                    })
                    .collect();
                match attempt {
                    Ok(r) if r.iter().all(|(_, du2)| *du2 <= 1.0 - self.cfg.delta_space) => break r,
                    Ok(_) | Err(Error::SpacelikeViolation { .. }) | Err(Error::LinearSolver { .. }) => {
                        for t in trackers.iter_mut() {
                            t.run.rejected_steps += 1;
                        }
                        dt *= 0.5;
                    }
                    Err(e) => return Err(e),
                }
            };
            steps += 1;
            for (tr, (next, du2)) in trackers.iter_mut().zip(results) {
                let st = &mut tr.run.state;
                let old_t = st.t;
                let old_u = std::mem::replace(&mut st.u, next);
                st.ut = (0..nn).map(|k| (st.u[k] - old_u[k]) / dt).collect();
                st.t = old_t + dt;
                st.sup_du2 = st.sup_du2.max(du2);
                st.sup_ut = st.sup_ut.max(st.ut.iter().fold(0.0f64, |a, b| a.max(b.abs())));
                st.step_count += 1;
                // complete pending snapshots, then open new ones
                for (times, states) in tr.pending.drain(..) {
                    let [a, b] = states;
                    tr.run.snapshots.push(Snapshot { times: [times[0], times[1], st.t], states: [a, b, st.u.clone()] });
                }
                let mut opened = false;
                while tr.next_sample < samples.len() && st.t >= samples[tr.next_sample] {
                    tr.next_sample += 1;
                    opened = true;
                }
                if opened {
                    tr.pending.push(([old_t, st.t], [old_u, st.u.clone()]));
                }
            }
            for k in 0..trackers.len() {
                let row = self.row(&trackers[k].run.state, dt, osc_of(&trackers, k))?;
                let (mean, dev) = self.speed_stats(&trackers[k].run.state);
                let tr = &mut trackers[k];
                tr.run.series.push(row);
                tr.run.speed_estimate = mean;
                tr.run.deviation = dev;
                tr.run.state.dt = dt;
            }
            if self.cfg.scheme == Scheme::SemiImplicit {
                dt = (dt * self.cfg.dt_growth).min(dt_max);
            }
        }
        Ok(trackers.into_iter().map(|t| t.run).collect())
    }

    /// Integrates one initial datum; the run is returned whether or not it
    /// converged.
    pub fn integrate(&self, u0: Vec<f64>) -> Result<FlowRun> {
        Ok(self.integrate_many(vec![u0])?.remove(0))
    }
}

/// Integrates until `max |u_t - mean u_t| < tol_speed`; non-convergence by
/// `max_time` is an error.
pub fn run_to_convergence(problem: &Problem, u0: Vec<f64>, cfg: &StepperConfig) -> Result<FlowRun> {
    Integrator::new(problem, cfg.clone())?.integrate(u0)?.require_converged()
}
