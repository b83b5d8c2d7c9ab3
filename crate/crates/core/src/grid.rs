//! Boundary-fitted polar-like grid on a convex domain.
//!
//! Computational coordinates `(rho, s)` map to the chart through
//! `x(rho, s) = c + rho Q(s) + rho^2 P(s)`, where `P` and `Q` are the parts of
//! `gamma(s) - c` that are even and odd under `s -> s + pi`. Then
//! `x(-rho, s) = x(rho, s + pi)`, so the ring at `rho = -drho / 2` is the first
//! ring rotated by half a turn and no special center treatment is needed.
//!
//! Rings `i = 1..=n_r` sit at `rho_i = (i - 1/2) drho` with `rho_{n_r} = 1` on
//! the boundary; ring `n_r + 1` holds ghost values for the boundary condition.

use std::f64::consts::{PI, TAU};

use crate::domain::{BoundaryFrame, ConvexDomain};
use crate::error::{Error, Result};
use crate::graph::covariant_hessian;
use crate::metric::{det2, inv2, Mat2, MetricSample};

/// Geometry and finite-difference weights at one grid node. Weights act on the
/// 3x3 neighborhood ordered `k = 3 (di + 1) + (dj + 1)`.
#[derive(Debug, Clone)]
pub struct Node {
    pub rho: f64,
    pub s: f64,
    pub x: [f64; 2],
    pub metric: MetricSample,
    /// `J[a][alpha] = d x^a / d alpha`, `alpha in (rho, s)`
    pub jacobian: Mat2,
    pub jacobian_inv: Mat2,
    /// Weights producing the chart gradient `d_a u`.
    pub grad_weights: [[f64; 9]; 2],
    /// Weights producing the covariant Hessian components `(11, 12, 22)`.
    pub hess_weights: [[f64; 9]; 3],
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub domain: ConvexDomain,
    pub n_r: usize,
    pub n_a: usize,
    pub d_rho: f64,
    pub d_s: f64,
    /// Rings `1..=n_r`, stored ring-major.
    pub nodes: Vec<Node>,
    pub boundary: Vec<BoundaryFrame>,
    /// Components `(n_rho, n_s)` of the inward normal in computational coordinates
    /// (`n_rho < 0`).
    pub normal_coeffs: Vec<[f64; 2]>,
    /// Chart positions of the ghost ring from the extended mapping.
    pub ghost_points: Vec<[f64; 2]>,
    /// Area weights for rings `1..=n_r`.
    pub area_weights: Vec<f64>,
    /// `|gamma'(s_j)|_sigma ds`
    pub boundary_weights: Vec<f64>,
    /// Largest sigma-length of a grid edge.
    pub h: f64,
}

impl Grid {
    pub fn new(domain: &ConvexDomain, n_r: usize, n_a: usize) -> Result<Grid> {
        if n_r < 8 {
            return Err(Error::InvalidGrid(format!("need at least 8 rings, got {n_r}")));
        }
        if n_a < 16 || n_a % 2 != 0 {
            return Err(Error::InvalidGrid(format!("angular count must be even and at least 16, got {n_a}")));
        }
        let d_rho = 1.0 / (n_r as f64 - 0.5);
        let d_s = TAU / n_a as f64;
        let c = domain.spec.center;

        // split gamma - c into half-turn even and odd parts, with derivatives
        let parts: Vec<[[f64; 2]; 6]> = (0..n_a)
            .map(|j| {
                let s = d_s * j as f64;
                let a = domain.spec.curve(s);
                let b = domain.spec.curve(s + PI);
                let at = [a[0][0] - c[0], a[0][1] - c[1]];
                let bt = [b[0][0] - c[0], b[0][1] - c[1]];
                let even = |u: [f64; 2], v: [f64; 2]| [0.5 * (u[0] + v[0]), 0.5 * (u[1] + v[1])];
                let odd = |u: [f64; 2], v: [f64; 2]| [0.5 * (u[0] - v[0]), 0.5 * (u[1] - v[1])];
                [
                    even(at, bt),
                    even(a[1], b[1]),
                    even(a[2], b[2]),
                    odd(at, bt),
                    odd(a[1], b[1]),
                    odd(a[2], b[2]),
                ]
            })
            .collect();

        let mut nodes = Vec::with_capacity(n_r * n_a);
        for i in 1..=n_r {
            let rho = (i as f64 - 0.5) * d_rho;
            for (j, pq) in parts.iter().enumerate() {
                let [p, p1, p2, q, q1, q2] = *pq;
                let s = d_s * j as f64;
                let mut x = [0.0; 2];
                let mut x_r = [0.0; 2];
                let mut x_s = [0.0; 2];
                let mut x_rr = [0.0; 2];
                let mut x_ss = [0.0; 2];
                let mut x_rs = [0.0; 2];
                for a in 0..2 {
                    x[a] = c[a] + rho * q[a] + rho * rho * p[a];
                    x_r[a] = q[a] + 2.0 * rho * p[a];
                    x_s[a] = rho * q1[a] + rho * rho * p1[a];
                    x_rr[a] = 2.0 * p[a];
                    x_ss[a] = rho * q2[a] + rho * rho * p2[a];
                    x_rs[a] = q1[a] + 2.0 * rho * p1[a];
                }
                if i == n_r {
                    // land exactly on the boundary curve
                    x = domain.spec.curve(s)[0];
                }
                let metric = domain.metric.at(x)?;
                if metric.gauss_curvature < -1e-12 {
                    return Err(Error::NegativeCurvature { k: metric.gauss_curvature, x: x[0], y: x[1] });
                }
                let jacobian = [[x_r[0], x_s[0]], [x_r[1], x_s[1]]];
                let det = det2(&jacobian);
                if !(det > 1e-14 * rho) {
                    return Err(Error::DegenerateJacobian { ring: i, angle: j, det });
                }
                let jacobian_inv = inv2(&jacobian);
                let (grad_weights, hess_weights) =
                    stencil_weights(&metric, &jacobian_inv, [x_rr, x_ss, x_rs], d_rho, d_s);
                nodes.push(Node { rho, s, x, metric, jacobian, jacobian_inv, grad_weights, hess_weights });
            }
        }

        let rho_g = 1.0 + d_rho;
        let ghost_points = parts
            .iter()
            .map(|[p, _, _, q, _, _]| {
                [c[0] + rho_g * q[0] + rho_g * rho_g * p[0], c[1] + rho_g * q[1] + rho_g * rho_g * p[1]]
            })
            .collect();

        let mut boundary = Vec::with_capacity(n_a);
        let mut normal_coeffs = Vec::with_capacity(n_a);
        let mut boundary_weights = Vec::with_capacity(n_a);
        for j in 0..n_a {
            let f = domain.frame(d_s * j as f64)?;
            let node = &nodes[(n_r - 1) * n_a + j];
            let ji = &node.jacobian_inv;
            normal_coeffs.push([
                ji[0][0] * f.normal[0] + ji[0][1] * f.normal[1],
                ji[1][0] * f.normal[0] + ji[1][1] * f.normal[1],
            ]);
            boundary_weights.push(f.speed * d_s);
            boundary.push(f);
        }
        if normal_coeffs.iter().any(|n| !(n[0] < 0.0)) {
            return Err(Error::InvalidGrid("boundary normal not transversal to the rings".into()));
        }

        let mut area_weights = Vec::with_capacity(n_r * n_a);
        for i in 1..=n_r {
            let w = if i + 1 < n_r {
                d_rho
            } else if i + 1 == n_r {
                9.0 * d_rho / 8.0
            } else {
                3.0 * d_rho / 8.0
            };
            for j in 0..n_a {
                let node = &nodes[(i - 1) * n_a + j];
                area_weights.push(w * d_s * det2(&node.jacobian) * node.metric.volume_element());
            }
        }

        let mut grid = Grid {
            domain: domain.clone(),
            n_r,
            n_a,
            d_rho,
            d_s,
            nodes,
            boundary,
            normal_coeffs,
            ghost_points,
            area_weights,
            boundary_weights,
            h: 0.0,
        };
        grid.h = grid.max_edge_length()?;
        Ok(grid)
    }

    /// Number of unknowns including the ghost ring.
    pub fn n_unknowns(&self) -> usize {
        (self.n_r + 1) * self.n_a
    }

    pub fn n_nodes(&self) -> usize {
        self.n_r * self.n_a
    }

    /// Unknown index of ring `i` (1-based, ghost ring is `n_r + 1`) and angle `j`.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.n_a + j
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> &Node {
        &self.nodes[(i - 1) * self.n_a + j]
    }

    /// Unknown index of the stencil neighbor `(i + di, j + dj)`, resolving the
    /// periodic angle and the half-turn reflection through the center.
    #[inline]
    pub fn neighbor(&self, i: usize, j: usize, di: isize, dj: isize) -> usize {
        let n = self.n_a as isize;
        let ii = i as isize + di;
        if ii == 0 {
            let jj = (j as isize + dj + n / 2).rem_euclid(n) as usize;
            self.idx(1, jj)
        } else {
            let jj = (j as isize + dj).rem_euclid(n) as usize;
            self.idx(ii as usize, jj)
        }
    }

    pub fn stencil_values(&self, u: &[f64], i: usize, j: usize) -> [f64; 9] {
        let mut out = [0.0; 9];
        for di in -1..=1isize {
            for dj in -1..=1isize {
                out[(3 * (di + 1) + dj + 1) as usize] = u[self.neighbor(i, j, di, dj)];
            }
        }
        out
    }

    /// Chart gradient and covariant Hessian of `u` at node `(i, j)`.
    pub fn derivatives(&self, u: &[f64], i: usize, j: usize) -> ([f64; 2], Mat2) {
        let vals = self.stencil_values(u, i, j);
        let node = self.node(i, j);
        let mut g = [0.0; 2];
        let mut h = [0.0; 3];
        for k in 0..9 {
            g[0] += node.grad_weights[0][k] * vals[k];
            g[1] += node.grad_weights[1][k] * vals[k];
            for (c, hc) in h.iter_mut().enumerate() {
                *hc += node.hess_weights[c][k] * vals[k];
            }
        }
        (g, [[h[0], h[1]], [h[1], h[2]]])
    }

    /// Derivatives of `u` in computational coordinates at a boundary node:
    /// `(U_rho, U_s)` from centered differences using the ghost ring.
    pub fn boundary_partials(&self, u: &[f64], j: usize) -> [f64; 2] {
        let n = self.n_r;
        let up = u[self.neighbor(n, j, 1, 0)];
        let dn = u[self.neighbor(n, j, -1, 0)];
        let sp = u[self.neighbor(n, j, 0, 1)];
        let sm = u[self.neighbor(n, j, 0, -1)];
        [(up - dn) / (2.0 * self.d_rho), (sp - sm) / (2.0 * self.d_s)]
    }

    /// Normal and tangential derivatives `(D_N u, D_T u)` at boundary node `j`.
    pub fn boundary_derivatives(&self, u: &[f64], j: usize) -> (f64, f64) {
        let [ur, us] = self.boundary_partials(u, j);
        let nc = self.normal_coeffs[j];
        let tc = 1.0 / self.boundary[j].speed;
        (nc[0] * ur + nc[1] * us, tc * us)
    }

    /// `sum_nodes f w`
    pub fn integrate(&self, f: impl Fn(usize, usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for i in 1..=self.n_r {
            for j in 0..self.n_a {
                acc += f(i, j) * self.area_weights[(i - 1) * self.n_a + j];
            }
        }
        acc
    }

    pub fn area(&self) -> f64 {
        self.area_weights.iter().sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_weights.iter().sum()
    }

    /// Samples `f` at every node, ghost ring included.
    pub fn sample(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.n_unknowns());
        u.extend(self.nodes.iter().map(|n| f(n.x)));
        u.extend(self.ghost_points.iter().map(|&x| f(x)));
        u
    }

    /// Area-weighted mean over the physical nodes.
    pub fn mean(&self, u: &[f64]) -> f64 {
        self.integrate(|i, j| u[self.idx(i, j)]) / self.area()
    }

    fn max_edge_length(&self) -> Result<f64> {
        let mut h: f64 = 0.0;
        let edge = |a: [f64; 2], b: [f64; 2]| -> Result<f64> {
            let m = self.domain.metric.at([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])])?;
            Ok(m.norm([b[0] - a[0], b[1] - a[1]]))
        };
        for i in 1..=self.n_r {
            for j in 0..self.n_a {
                let x = self.node(i, j).x;
                h = h.max(edge(x, self.node(i, (j + 1) % self.n_a).x)?);
                if i < self.n_r {
                    h = h.max(edge(x, self.node(i + 1, j).x)?);
                }
            }
        }
        Ok(h)
    }
}

fn stencil_weights(
    metric: &MetricSample,
    jinv: &Mat2,
    second: [[f64; 2]; 3],
    d_rho: f64,
    d_s: f64,
) -> ([[f64; 9]; 2], [[f64; 9]; 3]) {
    let k = |di: isize, dj: isize| (3 * (di + 1) + dj + 1) as usize;
    let mut w_r = [0.0; 9];
    let mut w_s = [0.0; 9];
    let mut w_rr = [0.0; 9];
    let mut w_ss = [0.0; 9];
    let mut w_rs = [0.0; 9];
    w_r[k(1, 0)] = 0.5 / d_rho;
    w_r[k(-1, 0)] = -0.5 / d_rho;
    w_s[k(0, 1)] = 0.5 / d_s;
    w_s[k(0, -1)] = -0.5 / d_s;
    w_rr[k(1, 0)] = 1.0 / (d_rho * d_rho);
    w_rr[k(0, 0)] = -2.0 / (d_rho * d_rho);
    w_rr[k(-1, 0)] = 1.0 / (d_rho * d_rho);
    w_ss[k(0, 1)] = 1.0 / (d_s * d_s);
    w_ss[k(0, 0)] = -2.0 / (d_s * d_s);
    w_ss[k(0, -1)] = 1.0 / (d_s * d_s);
    let q = 0.25 / (d_rho * d_s);
    w_rs[k(1, 1)] = q;
    w_rs[k(1, -1)] = -q;
    w_rs[k(-1, 1)] = -q;
    w_rs[k(-1, -1)] = q;

    // chart gradient d_a u = sum_alpha Jinv[alpha][a] U_alpha
    let mut grad = [[0.0; 9]; 2];
    for a in 0..2 {
        for n in 0..9 {
            grad[a][n] = jinv[0][a] * w_r[n] + jinv[1][a] * w_s[n];
        }
    }
    let [x_rr, x_ss, x_rs] = second;
    let mut hess = [[0.0; 9]; 3];
    for n in 0..9 {
        let g = [grad[0][n], grad[1][n]];
        // computational second derivatives with the first-order part removed
        let c_rr = w_rr[n] - (g[0] * x_rr[0] + g[1] * x_rr[1]);
        let c_ss = w_ss[n] - (g[0] * x_ss[0] + g[1] * x_ss[1]);
        let c_rs = w_rs[n] - (g[0] * x_rs[0] + g[1] * x_rs[1]);
        let cmat = [[c_rr, c_rs], [c_rs, c_ss]];
        let mut partial = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let mut acc = 0.0;
                for al in 0..2 {
                    for be in 0..2 {
                        acc += jinv[al][a] * cmat[al][be] * jinv[be][b];
                    }
                }
                partial[a][b] = acc;
            }
        }
        let h = covariant_hessian(metric, g, partial);
        hess[0][n] = h[0][0];
        hess[1][n] = h[0][1];
        hess[2][n] = h[1][1];
    }
    (grad, hess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_domain, DomainSpec};
    use crate::metric::MetricId;

    fn max_derivative_error(n_r: usize, n_a: usize) -> f64 {
        let d = build_domain(DomainSpec::ellipse(1.3, 0.8), MetricId::Flat).unwrap();
        let g = Grid::new(&d, n_r, n_a).unwrap();
        let u = g.sample(|x| 0.3 * x[0] * x[0] - 0.2 * x[0] * x[1] + 0.1 * x[1] * x[1] + 0.5 * x[1]);
        let mut err: f64 = 0.0;
        // away from the center, where the angular truncation error of the
        // Hessian is amplified by 1 / rho
        for i in 1..g.n_r {
            if g.node(i, 0).rho < 0.25 {
                continue;
            }
            for j in 0..g.n_a {
                let x = g.node(i, j).x;
                let (du, h) = g.derivatives(&u, i, j);
                err = err
                    .max((du[0] - (0.6 * x[0] - 0.2 * x[1])).abs())
                    .max((du[1] - (-0.2 * x[0] + 0.2 * x[1] + 0.5)).abs())
                    .max((h[0][0] - 0.6).abs())
                    .max((h[0][1] + 0.2).abs())
                    .max((h[1][1] - 0.2).abs());
            }
        }
        err
    }

    #[test]
    fn derivatives_converge_at_second_order() {
        let e1 = max_derivative_error(16, 32);
        let e2 = max_derivative_error(32, 64);
        assert!(e2 < 0.05, "{e2}");
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }

    #[test]
    fn quadrature_area_and_length() {
        let d = build_domain(DomainSpec::ellipse(1.5, 1.0), MetricId::Flat).unwrap();
        let g = Grid::new(&d, 64, 128).unwrap();
        assert!((g.area() - PI * 1.5).abs() < 2e-3);
        let perimeter = 7.932_719_794_645_571;
        assert!((g.boundary_length() - perimeter).abs() < 1e-10);
    }

    #[test]
    fn sphere_cap_area() {
        let d = build_domain(DomainSpec::disk(0.5), MetricId::SphereStereographic).unwrap();
        let g = Grid::new(&d, 64, 64).unwrap();
        // geodesic radius 2 atan(1/2): cap area 2 pi (1 - cos r)
        let r = 2.0 * 0.5f64.atan();
        assert!((g.area() - TAU * (1.0 - r.cos())).abs() < 1e-3);
    }

    #[test]
    fn mirror_neighbor_is_antipodal() {
        let d = build_domain(DomainSpec::disk(1.0), MetricId::Flat).unwrap();
        let g = Grid::new(&d, 8, 16).unwrap();
        let k = g.neighbor(1, 3, -1, 1);
        assert_eq!(k, g.idx(1, 12));
        let x = g.node(1, 12).x;
        let y = g.node(1, 4).x;
        assert!((x[0] + y[0]).abs() < 1e-14 && (x[1] + y[1]).abs() < 1e-14);
    }

    #[test]
    fn boundary_normal_derivative_of_linear_function() {
        let d = build_domain(DomainSpec::disk(1.0), MetricId::Flat).unwrap();
        let g = Grid::new(&d, 16, 32).unwrap();
        let u = g.sample(|x| 2.0 * x[0] - x[1]);
        for j in 0..g.n_a {
            let (dn, dt) = g.boundary_derivatives(&u, j);
            let s = g.d_s * j as f64;
            // exact in rho, second order in s
            let ds2 = g.d_s * g.d_s;
            assert!((dn - (-2.0 * s.cos() + s.sin())).abs() < 1e-12);
            assert!((dt - (-2.0 * s.sin() - s.cos())).abs() < 0.5 * ds2);
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        let d = build_domain(DomainSpec::disk(1.0), MetricId::Flat).unwrap();
        assert!(Grid::new(&d, 7, 16).is_err());
        assert!(Grid::new(&d, 8, 14).is_err());
        assert!(Grid::new(&d, 8, 17).is_err());
        assert!(Grid::new(&d, 8, 16).is_ok());
    }
}
