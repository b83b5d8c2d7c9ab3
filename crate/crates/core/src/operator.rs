//! Discrete flow operator and contact-angle boundary closure on a grid.

use crate::domain::{ContactAngle, ConvexDomain, PhiSpec};
use crate::error::{Error, Result};
use crate::graph::{check_spacelike, contract, graph_geometry, GraphGeometry};
use crate::grid::Grid;
use crate::linalg::StencilSystem;

/// Evaluates `f` at every physical node, ring-major.
fn per_node<T>(n_r: usize, n_a: usize, f: impl Fn(usize, usize) -> T) -> Vec<T> {
    let mut out = Vec::with_capacity(n_r * n_a);
    for i in 1..=n_r {
        for j in 0..n_a {
            out.push(f(i, j));
        }
    }
    out
}

/// A grid together with the sampled contact angle: everything needed to
/// evaluate the flow operator and the boundary condition.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid,
    pub phi: ContactAngle,
}

impl Problem {
    pub fn new(domain: &ConvexDomain, phi: PhiSpec, n_radial: usize, n_angular: usize) -> Result<Problem> {
        let grid = Grid::new(domain, n_radial, n_angular)?;
        let phi = ContactAngle::new(phi, domain, n_angular)?;
        Ok(Problem { grid, phi })
    }

    pub fn from_grid(grid: Grid, phi: PhiSpec) -> Result<Problem> {
        let phi = ContactAngle::new(phi, &grid.domain, grid.n_a)?;
        Ok(Problem { grid, phi })
    }

    /// Same grid with the contact angle scaled by `t`.
    pub fn with_phi_scaled(&self, t: f64) -> Result<Problem> {
        Problem::from_grid(self.grid.clone(), self.phi.spec.scaled(t))
    }

    pub fn geometry(&self, u: &[f64], i: usize, j: usize) -> Result<GraphGeometry> {
        let (du, h) = self.grid.derivatives(u, i, j);
        graph_geometry(&self.grid.node(i, j).metric, du, h).map_err(|e| locate(e, i, j))
    }

    /// `g^ij(Du) D_i D_j u` at every physical node.
    pub fn flow_speed(&self, u: &[f64]) -> Result<Vec<f64>> {
        per_node(self.grid.n_r, self.grid.n_a, |i, j| self.geometry(u, i, j).map(|g| g.flow_speed))
            .into_iter()
            .collect()
    }

    /// `|Du|^2` at every physical node.
    pub fn du2(&self, u: &[f64]) -> Vec<f64> {
        per_node(self.grid.n_r, self.grid.n_a, |i, j| {
            let (du, _) = self.grid.derivatives(u, i, j);
            self.grid.node(i, j).metric.covector_norm2(du)
        })
    }

    pub fn sup_du2(&self, u: &[f64]) -> f64 {
        self.du2(u).into_iter().fold(0.0, f64::max)
    }

    /// Prescribed normal derivative `phi sqrt((1 - tau^2) / (1 + phi^2))` for a
    /// given tangential derivative `tau`.
    pub fn normal_target(phi: f64, tau: f64) -> f64 {
        phi * ((1.0 - tau * tau) / (1.0 + phi * phi)).sqrt()
    }

    fn tangential(&self, u: &[f64], j: usize) -> Result<f64> {
        let (_, tau) = self.grid.boundary_derivatives(u, j);
        if tau * tau >= 1.0 - crate::graph::SPACELIKE_GUARD || !tau.is_finite() {
            return Err(Error::SpacelikeViolation {
                location: format!("boundary node {j} (tangential derivative)"),
                du2: tau * tau,
            });
        }
        Ok(tau)
    }

    /// `D_N u - phi v` written in closed form, per boundary node.
    pub fn bc_residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        (0..self.grid.n_a)
            .map(|j| {
                let (dn, _) = self.grid.boundary_derivatives(u, j);
                let tau = self.tangential(u, j)?;
                Ok(dn - Self::normal_target(self.phi.values[j], tau))
            })
            .collect()
    }

    /// Sets the ghost ring so that the closed-form contact condition holds
    /// exactly at every boundary node.
    pub fn apply_contact_bc(&self, u: &mut [f64]) -> Result<()> {
        let g = &self.grid;
        let n = g.n_r;
        for j in 0..g.n_a {
            let tau = self.tangential(u, j)?;
            let target = Self::normal_target(self.phi.values[j], tau);
            let [_, us] = g.boundary_partials(u, j);
            let [nr, ns] = g.normal_coeffs[j];
            let inner = u[g.idx(n - 1, j)];
            u[g.idx(n + 1, j)] = inner + 2.0 * g.d_rho * (target - ns * us) / nr;
        }
        Ok(())
    }

    /// Boundary rows of the linearized closure: coefficients on the ghost
    /// ring, plus the residual at `u`.
    pub(crate) fn add_bc_rows(&self, u: &[f64], sys: &mut StencilSystem, rhs: &mut [f64], shift_by_u: bool) -> Result<()> {
        let g = &self.grid;
        let n = g.n_r;
        for j in 0..g.n_a {
            let tau = self.tangential(u, j)?;
            let phi = self.phi.values[j];
            let (dn, _) = g.boundary_derivatives(u, j);
            let b = dn - Self::normal_target(phi, tau);
            let [nr, ns] = g.normal_coeffs[j];
            let dtau = phi * tau / ((1.0 + phi * phi).sqrt() * (1.0 - tau * tau).sqrt());
            let cs = ns + dtau / g.boundary[j].speed;
            let wr = nr / (2.0 * g.d_rho);
            let ws = cs / (2.0 * g.d_s);
            sys.add(n + 1, j, 0, 0, wr);
            sys.add(n + 1, j, -2, 0, -wr);
            sys.add(n + 1, j, -1, 1, ws);
            sys.add(n + 1, j, -1, -1, -ws);
            let row = g.idx(n + 1, j);
            rhs[row] = -b;
            if shift_by_u {
                // right-hand side for the new iterate instead of the update
                let lin = wr * (u[g.idx(n + 1, j)] - u[g.idx(n - 1, j)])
                    + ws * (u[g.neighbor(n, j, 0, 1)] - u[g.neighbor(n, j, 0, -1)]);
                rhs[row] += lin;
            }
        }
        Ok(())
    }

    /// Stencil of `g^ij(Du) D_i D_j` with coefficients frozen at `u`, scaled by
    /// `scale` and added to `sys`; `diag` is added on the diagonal.
    pub(crate) fn add_frozen_operator(&self, u: &[f64], sys: &mut StencilSystem, scale: f64, diag: f64) -> Result<()> {
        let g = &self.grid;
        for i in 1..=g.n_r {
            for j in 0..g.n_a {
                let geo = self.geometry(u, i, j)?;
                let gu = geo.g_upper;
                let c = [gu[0][0], gu[0][1] + gu[1][0], gu[1][1]];
                let node = g.node(i, j);
                let r = (i - 1) * g.n_a + j;
                for k in 0..9 {
                    let w = c[0] * node.hess_weights[0][k] + c[1] * node.hess_weights[1][k] + c[2] * node.hess_weights[2][k];
                    sys.coef[r][k / 3 + 1][k % 3] += scale * w;
                }
                sys.coef[r][2][1] += diag;
            }
        }
        Ok(())
    }

    /// Full Jacobian of `g^ij(Du) D_i D_j u`, including the dependence of the
    /// coefficients on the gradient, scaled and added to `sys`.
    pub(crate) fn add_jacobian(&self, u: &[f64], sys: &mut StencilSystem, scale: f64, diag: f64) -> Result<()> {
        let g = &self.grid;
        for i in 1..=g.n_r {
            for j in 0..g.n_a {
                let geo = self.geometry(u, i, j)?;
                let gu = geo.g_upper;
                let c = [gu[0][0], gu[0][1] + gu[1][0], gu[1][1]];
                // dQ/dp_c = 2 / v^2 (g^{-1} H P)^c
                let p = geo.du_up;
                let hp = [
                    geo.hessian[0][0] * p[0] + geo.hessian[0][1] * p[1],
                    geo.hessian[1][0] * p[0] + geo.hessian[1][1] * p[1],
                ];
                let f = 2.0 / (geo.v * geo.v);
                let dq = [f * (gu[0][0] * hp[0] + gu[0][1] * hp[1]), f * (gu[1][0] * hp[0] + gu[1][1] * hp[1])];
                let node = g.node(i, j);
                let r = (i - 1) * g.n_a + j;
                for k in 0..9 {
                    let w = c[0] * node.hess_weights[0][k]
                        + c[1] * node.hess_weights[1][k]
                        + c[2] * node.hess_weights[2][k]
                        + dq[0] * node.grad_weights[0][k]
                        + dq[1] * node.grad_weights[1][k];
                    sys.coef[r][k / 3 + 1][k % 3] += scale * w;
                }
                sys.coef[r][2][1] += diag;
            }
        }
        Ok(())
    }

    /// `int_Omega (1 - |Du|^2)^{-1/2}`
    pub fn weighted_area(&self, u: &[f64]) -> Result<f64> {
        let g = &self.grid;
        let mut acc = 0.0;
        for i in 1..=g.n_r {
            for j in 0..g.n_a {
                let (du, _) = g.derivatives(u, i, j);
                let du2 = g.node(i, j).metric.covector_norm2(du);
                check_spacelike(du2, || format!("ring {i}, angle {j}"))?;
                acc += g.area_weights[(i - 1) * g.n_a + j] / (1.0 - du2).sqrt();
            }
        }
        Ok(acc)
    }

    /// `int_Omega v - int_{dOmega} u phi`
    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        let g = &self.grid;
        let mut area = 0.0;
        for i in 1..=g.n_r {
            for j in 0..g.n_a {
                let (du, _) = g.derivatives(u, i, j);
                let du2 = g.node(i, j).metric.covector_norm2(du);
                check_spacelike(du2, || format!("ring {i}, angle {j}"))?;
                area += g.area_weights[(i - 1) * g.n_a + j] * (1.0 - du2).sqrt();
            }
        }
        let mut bdry = 0.0;
        for j in 0..g.n_a {
            bdry += u[g.idx(g.n_r, j)] * self.phi.values[j] * g.boundary_weights[j];
        }
        Ok(area - bdry)
    }

    /// `int_Omega u_t^2 / v`
    pub fn dissipation(&self, u: &[f64], ut: &[f64]) -> Result<f64> {
        let g = &self.grid;
        let mut acc = 0.0;
        for i in 1..=g.n_r {
            for j in 0..g.n_a {
                let (du, _) = g.derivatives(u, i, j);
                let du2 = g.node(i, j).metric.covector_norm2(du);
                check_spacelike(du2, || format!("ring {i}, angle {j}"))?;
                let k = (i - 1) * g.n_a + j;
                acc += g.area_weights[k] * ut[k] * ut[k] / (1.0 - du2).sqrt();
            }
        }
        Ok(acc)
    }

    /// Mean curvature `H = Q(u) / v` at every physical node.
    pub fn mean_curvature(&self, u: &[f64]) -> Result<Vec<f64>> {
        per_node(self.grid.n_r, self.grid.n_a, |i, j| self.geometry(u, i, j).map(|g| g.mean_curvature))
            .into_iter()
            .collect()
    }

    /// Physical-node values of a field that includes the ghost ring.
    pub fn physical<'a>(&self, u: &'a [f64]) -> &'a [f64] {
        &u[..self.grid.n_nodes()]
    }

    /// Checks that `contract(g^ij, D_i D_j u)` matches `H v` at each node.
    pub fn hv_identity_defect(&self, u: &[f64]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 1..=self.grid.n_r {
            for j in 0..self.grid.n_a {
                let geo = self.geometry(u, i, j)?;
                worst = worst.max((geo.mean_curvature * geo.v - contract(&geo.g_upper, &geo.hessian)).abs());
            }
        }
        Ok(worst)
    }
}

fn locate(e: Error, i: usize, j: usize) -> Error {
    match e {
        Error::SpacelikeViolation { du2, .. } => {
            Error::SpacelikeViolation { location: format!("ring {i}, angle {j}"), du2 }
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_domain, DomainSpec};
    use crate::metric::MetricId;

    fn disk_problem(phi: PhiSpec, n_r: usize, n_a: usize) -> Problem {
        let d = build_domain(DomainSpec::disk(1.0), MetricId::Flat).unwrap();
        Problem::new(&d, phi, n_r, n_a).unwrap()
    }

    #[test]
    fn closed_form_targets() {
        assert_eq!(Problem::normal_target(0.0, 0.3), 0.0);
        assert!((Problem::normal_target(0.5, 0.0) - 0.447_213_6).abs() < 1e-7);
        assert!((Problem::normal_target(1.0, 0.6) - 0.565_685_4).abs() < 1e-7);
    }

    #[test]
    fn ghost_closure_enforces_condition() {
        let p = disk_problem(PhiSpec::cosine(0.4), 16, 32);
        let mut u = p.grid.sample(|x| 0.2 * x[0] * x[1] - 0.1 * x[0]);
        p.apply_contact_bc(&mut u).unwrap();
        let r = p.bc_residual(&u).unwrap();
        assert!(r.iter().all(|r| r.abs() < 1e-13));
    }

    #[test]
    fn exact_linear_maximal_graph() {
        // u = beta x is maximal and meets phi = 0.3 cos s with beta = -0.3 / sqrt(1.09)
        let beta = -0.3 / 1.09f64.sqrt();
        let p = disk_problem(PhiSpec::cosine(0.3), 16, 64);
        let mut u = p.grid.sample(|x| beta * x[0]);
        let before = u.clone();
        p.apply_contact_bc(&mut u).unwrap();
        let r = p.bc_residual(&before).unwrap();
        // the discrete tangential derivative carries an O(ds^2) error
        assert!(r.iter().all(|r| r.abs() < 2e-3), "{r:?}");
        let q = p.flow_speed(&before).unwrap();
        let qmax = q.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        // zero up to the angular truncation error
        let ds2 = p.grid.d_s * p.grid.d_s;
        assert!(qmax < ds2, "{qmax}");
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let d = build_domain(DomainSpec::ellipse(0.5, 0.4), MetricId::SphereStereographic).unwrap();
        let p = Problem::new(&d, PhiSpec::constant(0.2), 8, 16).unwrap();
        let mut u = p.grid.sample(|x| 0.3 * x[0] * x[0] - 0.2 * x[1] + 0.1 * x[0] * x[1]);
        p.apply_contact_bc(&mut u).unwrap();
        let n = p.grid.n_unknowns();
        let mut sys = StencilSystem::new(p.grid.n_r + 1, p.grid.n_a);
        p.add_jacobian(&u, &mut sys, 1.0, 0.0).unwrap();
        let mut rhs = vec![0.0; n];
        p.add_bc_rows(&u, &mut sys, &mut rhs, false).unwrap();
        let residual = |u: &[f64]| -> Vec<f64> {
            let mut r = p.flow_speed(u).unwrap();
            r.extend(p.bc_residual(u).unwrap());
            r
        };
        let mut worst: f64 = 0.0;
        let h = 1e-5;
        let mut col = vec![0.0; n];
        let mut e = vec![0.0; n];
        for c in (0..n).step_by(7) {
            let mut up = u.clone();
            up[c] += h;
            let mut dn = u.clone();
            dn[c] -= h;
            let (r1, r0) = (residual(&up), residual(&dn));
            e[c] = 1.0;
            sys.apply(&e, &mut col);
            e[c] = 0.0;
            for r in 0..n {
                let fd = (r1[r] - r0[r]) / (2.0 * h);
                worst = worst.max((fd - col[r]).abs() / (1.0 + col[r].abs()));
            }
        }
        assert!(worst < 1e-6, "{worst}");
    }
}
