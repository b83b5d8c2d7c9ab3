//! Translating solutions `u + c3 t` through the regularized problems
//! `g^ij D_i D_j u = eps u` as `eps -> 0`.
//!
//! Each regularized problem is solved for `u_eps = lambda / eps + w` with
//! `w` of zero mean: rows `Q(w) - lambda - eps w`, the boundary closure, and
//! the mean of `w`. Then `eps mean(u_eps) = lambda`, and the system stays well
//! conditioned as `eps -> 0`, where it becomes the translator problem itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gmres, Border, FourierPreconditioner, GmresOptions, StencilSystem};
use crate::operator::Problem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationSchedule {
    pub eps0: f64,
    pub ratio: f64,
    pub eps_min: f64,
    /// Consecutive speed estimates closer than this end the continuation.
    pub cauchy_tol: f64,
    pub newton: NewtonConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonConfig {
    pub max_iterations: usize,
    /// Smallest line-search step before giving up.
    pub min_damping: f64,
    pub tolerance: f64,
    /// Iterates must keep `|Du|^2 <= 1 - margin`.
    pub spacelike_margin: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { max_iterations: 50, min_damping: 1.0 / 1024.0, tolerance: 1e-10, spacelike_margin: 1e-3 }
    }
}

impl Default for ContinuationSchedule {
    fn default() -> Self {
        ContinuationSchedule { eps0: 1.0, ratio: 0.5, eps_min: 1e-6, cauchy_tol: 1e-8, newton: NewtonConfig::default() }
    }
}

impl ContinuationSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > self.eps_min && self.eps_min > 0.0) {
            return Err(Error::InvalidConfig("need eps0 > eps_min > 0".into()));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidConfig("ratio must lie in (0, 1)".into()));
        }
        let n = &self.newton;
        if n.max_iterations == 0 || !(n.tolerance > 0.0) || !(n.min_damping > 0.0 && n.min_damping <= 1.0) {
            return Err(Error::InvalidConfig("invalid Newton settings".into()));
        }
        Ok(())
    }
}

/// A solution of one regularized problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Regularized {
    pub eps: f64,
    /// Zero-mean part `w`, ghost ring included.
    pub w: Vec<f64>,
    /// `eps mean(u_eps)`
    pub lambda: f64,
    pub iterations: usize,
    pub residual: f64,
}

impl Regularized {
    /// `u_eps = lambda / eps + w`
    pub fn u_eps(&self) -> Vec<f64> {
        self.w.iter().map(|w| self.lambda / self.eps + w).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsTraceEntry {
    pub eps: f64,
    /// `eps mean(u_eps)`
    pub c3_est: f64,
    /// `|c3_est - c3_discrete|`, the distance to the limit of the discrete family.
    pub mean_deviation: f64,
    /// `max |eps u_eps - c3_discrete|`
    pub max_deviation: f64,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslatorSolution {
    /// Zero-mean profile, ghost ring included.
    pub profile: Vec<f64>,
    /// Speed from the integral formula on the profile.
    pub c3: f64,
    /// Last continuation estimate `eps mean(u_eps)`.
    pub c3_est: f64,
    /// Speed of the discrete translator problem (the `eps = 0` solve).
    pub c3_discrete: f64,
    pub eps_trace: Vec<EpsTraceEntry>,
    /// `max |g^ij D_i D_j u - c3_discrete|`
    pub interior_residual: f64,
    /// `max |D_N u - phi v|`
    pub boundary_residual: f64,
    pub homotopy_used: bool,
}

/// Increments of the speed estimate below this are never reported as a
/// failure to settle.
const NON_CAUCHY_FLOOR: f64 = 1e-8;

/// A Newton direction is used when GMRES stalls below this fraction of the
/// right-hand side norm.
const INEXACT_FORCING: f64 = 1e-6;

/// `F(w, lambda)` for the regularized problem; the last entry is the mean row.
fn residual(p: &Problem, eps: f64, w: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let q = p.flow_speed(w)?;
    let mut r = Vec::with_capacity(w.len() + 1);
    for (k, qk) in q.iter().enumerate() {
        r.push(qk - lambda - eps * w[k]);
    }
    r.extend(p.bc_residual(w)?);
    r.push(p.grid.mean(w));
    Ok(r)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

/// Damped Newton iteration for one regularized problem.
pub fn solve_regularized(
    p: &Problem,
    eps: f64,
    init_w: &[f64],
    init_lambda: f64,
    cfg: &NewtonConfig,
) -> Result<Regularized> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidConfig("eps must be nonnegative".into()));
    }
    let g = &p.grid;
    let n = g.n_unknowns();
    let mut w = init_w.to_vec();
    let mut lambda = init_lambda;
    p.apply_contact_bc(&mut w)?;
    let area = g.area();
    let mut row: Vec<f64> = g.area_weights.iter().map(|a| a / area).collect();
    row.resize(n, 0.0);
    let opts = GmresOptions { rel_tol: 1e-10, abs_tol: 1e-14, ..GmresOptions::default() };

    let mut r = residual(p, eps, &w, lambda)?;
    let mut rn = max_abs(&r);
    let mut damped_run: Vec<f64> = Vec::new();
    for it in 0..cfg.max_iterations {
        if rn < cfg.tolerance {
            return Ok(Regularized { eps, w, lambda, iterations: it, residual: rn });
        }
        let mut sys = StencilSystem::new(g.n_r + 1, g.n_a);
        p.add_jacobian(&w, &mut sys, 1.0, -eps)?;
        let mut rhs = vec![0.0; n + 1];
        p.add_bc_rows(&w, &mut sys, &mut rhs, false)?;
        let mut column = vec![-1.0; g.n_nodes()];
        column.resize(n, 0.0);
        sys.border = Some(Border { column, row: row.clone(), corner: 0.0 });
        for (k, rk) in r.iter().enumerate() {
            rhs[k] = -rk;
        }
        let pc = FourierPreconditioner::new(&sys)?;
        let mut delta = vec![0.0; n + 1];
        match gmres(&|x, y| sys.apply(x, y), &|x, y| pc.apply(x, y), &rhs, &mut delta, &opts) {
            Ok(_) => {}
            Err(Error::LinearSolver { residual, .. })
                if residual <= INEXACT_FORCING * rhs.iter().map(|x| x * x).sum::<f64>().sqrt() => {}
            Err(e) => return Err(e),
        }
        // on fine grids the residual can sit at its rounding floor above the
        // tolerance; a negligible Newton step then counts as convergence
        let scale = 1.0 + max_abs(&w) + lambda.abs();
        if max_abs(&delta) <= 1e-12 * scale {
            return Ok(Regularized { eps, w, lambda, iterations: it, residual: rn });
        }

        // backtracking: keep space-like, require decrease
        let mut alpha = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = w.iter().zip(&delta).map(|(a, d)| a + alpha * d).collect();
            let tl = lambda + alpha * delta[n];
            let ok_space = p.sup_du2(&trial) <= 1.0 - cfg.spacelike_margin;
            if ok_space {
                if let Ok(tr) = residual(p, eps, &trial, tl) {
                    let tn = max_abs(&tr);
                    if tn < (1.0 - 1e-4 * alpha) * rn || tn < cfg.tolerance {
                        break Some((trial, tl, tr, tn));
                    }
                }
            }
            alpha *= 0.5;
            if alpha < cfg.min_damping {
                break None;
            }
        };
        // rounding level of the residual evaluation
        let floor = 8.0 * f64::EPSILON * sys.max_row_sum() * max_abs(&w[..g.n_nodes()]);
        let Some((nw, nl, nr, nrn)) = accepted else {
            if rn <= floor {
                return Ok(Regularized { eps, w, lambda, iterations: it, residual: rn });
            }
            return Err(Error::NewtonStagnation { eps, residual: rn });
        };
        if alpha < 1.0 {
            damped_run.push(rn);
            if damped_run.len() >= 5 {
                let start = damped_run[damped_run.len() - 5];
                if nrn > (1.0 - 1e-3) * start {
                    if nrn <= floor {
                        return Ok(Regularized { eps, w: nw, lambda: nl, iterations: it + 1, residual: nrn });
                    }
                    return Err(Error::NewtonStagnation { eps, residual: nrn });
                }
            }
        } else {
            damped_run.clear();
        }
        w = nw;
        lambda = nl;
        r = nr;
        rn = nrn;
    }
    if rn < cfg.tolerance {
        return Ok(Regularized { eps, w, lambda, iterations: cfg.max_iterations, residual: rn });
    }
    Err(Error::NewtonMaxIterations { eps, iterations: cfg.max_iterations, residual: rn })
}

/// Solves at `eps` from a warm start, falling back to scaling the contact angle
/// up from zero when Newton fails.
fn solve_with_homotopy(
    p: &Problem,
    eps: f64,
    w: &[f64],
    lambda: f64,
    cfg: &NewtonConfig,
) -> Result<(Regularized, bool)> {
    match solve_regularized(p, eps, w, lambda, cfg) {
        Ok(s) => Ok((s, false)),
        Err(first) => {
            let mut w = vec![0.0; w.len()];
            let mut lambda = 0.0;
            let stages = 8;
            for k in 1..=stages {
                let q = p.with_phi_scaled(k as f64 / stages as f64)?;
                let s = solve_regularized(&q, eps, &w, lambda, cfg).map_err(|_| first.clone())?;
                w = s.w;
                lambda = s.lambda;
            }
            let s = solve_regularized(p, eps, &w, lambda, cfg)?;
            Ok((s, true))
        }
    }
}

/// `c3 = -int_{dOmega} phi / int_Omega (1 - |Du|^2)^{-1/2}`
pub fn compute_c3(p: &Problem, profile: &[f64]) -> Result<f64> {
    Ok(-p.phi.boundary_integral / p.weighted_area(profile)?)
}

/// Runs the `eps` continuation, then solves the limit problem and evaluates
/// the speed on its profile.
pub fn continuation(p: &Problem, schedule: &ContinuationSchedule) -> Result<TranslatorSolution> {
    continuation_from(p, schedule, &vec![0.0; p.grid.n_unknowns()])
}

/// Continuation with a given initial guess for the first `w`.
pub fn continuation_from(p: &Problem, schedule: &ContinuationSchedule, init: &[f64]) -> Result<TranslatorSolution> {
    schedule.validate()?;
    let g = &p.grid;
    let mean = g.mean(init);
    let mut w: Vec<f64> = init.iter().map(|x| x - mean).collect();
    let mut lambda = 0.0;
    let mut homotopy_used = false;
    let mut trace: Vec<(f64, f64, Vec<f64>, usize)> = Vec::new();
    let mut eps = schedule.eps0;
    let mut increments: Vec<f64> = Vec::new();
    loop {
        let (s, used) = solve_with_homotopy(p, eps, &w, lambda, &schedule.newton)?;
        homotopy_used |= used;
        if let Some(prev) = trace.last() {
            increments.push((s.lambda - prev.1).abs());
        }
        w = s.w;
        lambda = s.lambda;
        trace.push((eps, lambda, w.clone(), s.iterations));
        if increments.last().is_some_and(|d| *d < schedule.cauchy_tol) {
            break;
        }
        let next = eps * schedule.ratio;
        if next < schedule.eps_min {
            let k = increments.len();
            if k >= 2 && increments[k - 1] >= NON_CAUCHY_FLOOR && increments[k - 1] > 0.9 * increments[k - 2] {
                let listing: Vec<String> =
                    trace.iter().map(|(e, l, _, _)| format!("({e:e}, {l:.12})")).collect();
                return Err(Error::NonCauchy(listing.join(", ")));
            }
            break;
        }
        eps = next;
    }
    let c3_est = lambda;

    let (limit, used) = solve_with_homotopy(p, 0.0, &w, lambda, &schedule.newton)?;
    homotopy_used |= used;
    let profile = limit.w;
    let c3 = compute_c3(p, &profile)?;
    let q = p.flow_speed(&profile)?;
    let interior_residual = q.iter().map(|x| (x - limit.lambda).abs()).fold(0.0, f64::max);
    let boundary_residual = max_abs(&p.bc_residual(&profile)?);
    let nn = g.n_nodes();
    let eps_trace = trace
        .iter()
        .map(|(eps, l, w, it)| EpsTraceEntry {
            eps: *eps,
            c3_est: *l,
            mean_deviation: (l - limit.lambda).abs(),
            max_deviation: w[..nn].iter().map(|x| (l + eps * x - limit.lambda).abs()).fold(0.0, f64::max),
            newton_iterations: *it,
        })
        .collect();
    Ok(TranslatorSolution {
        profile,
        c3,
        c3_est,
        c3_discrete: limit.lambda,
        eps_trace,
        interior_residual,
        boundary_residual,
        homotopy_used,
    })
}

/// `profile + c3 t`
pub fn translate_solution(sol: &TranslatorSolution, t: f64) -> Vec<f64> {
    sol.profile.iter().map(|u| u + sol.c3 * t).collect()
}

/// The barrier `psi = A m(d)` built from the distance to the boundary, with
/// `m(d) = d` to first order and constant beyond the collar.
#[derive(Debug, Clone, PartialEq)]
pub struct Barrier {
    pub amplitude: f64,
    /// Values at all unknowns, ghost ring included.
    pub psi: Vec<f64>,
    /// `max g^ij(D psi) D_i D_j psi`
    pub c4: f64,
    /// `max (D_N psi - phi sqrt(1 - |D psi|^2))` over the boundary; negative
    /// when the barrier inequality holds.
    pub boundary_margin: f64,
}

/// Barrier for positive contact angles, with `A / sqrt(1 - A^2) = phi0 / 2`.
pub fn barrier(p: &Problem) -> Result<Barrier> {
    if !(p.phi.phi0 > 0.0) {
        return Err(Error::CheckPrecondition("the barrier needs a positive contact angle".into()));
    }
    let g = &p.grid;
    let half = 0.5 * p.phi.phi0;
    let amplitude = half / (1.0 + half * half).sqrt();
    let depth = g.domain.collar_depth;
    let m = |d: f64| depth * (1.0 - (1.0 - d / depth).powi(3)) / 3.0;
    let value = |x: [f64; 2]| -> f64 {
        match g.domain.signed_distance(x) {
            Some(d) => amplitude * m(d.min(depth)),
            None => amplitude * depth / 3.0,
        }
    };
    let psi = g.sample(value);
    let q = p.flow_speed(&psi)?;
    let c4 = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut boundary_margin = f64::NEG_INFINITY;
    for j in 0..g.n_a {
        let (dn, _) = g.boundary_derivatives(&psi, j);
        let (du, _) = g.derivatives(&psi, g.n_r, j);
        let du2 = g.node(g.n_r, j).metric.covector_norm2(du);
        boundary_margin = boundary_margin.max(dn - p.phi.values[j] * (1.0 - du2).sqrt());
    }
    Ok(Barrier { amplitude, psi, c4, boundary_margin })
}
