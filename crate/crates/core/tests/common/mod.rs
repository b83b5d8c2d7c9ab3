//! Helpers shared by the geometry and acceptance targets.

use smcf_core::domain::{build_domain, DomainSpec};
use smcf_core::graph::covariant_hessian;
use smcf_core::grid::Grid;
use smcf_core::metric::{metric_at, MetricId};
use smcf_oracle::pointwise::Poly2;

fn christoffel_fd(id: MetricId, p: [f64; 2], k: usize, h: f64) -> [[[f64; 2]; 2]; 2] {
    let at = |s: f64| {
        let mut q = p;
        q[k] += s;
        metric_at(id, q).unwrap().christoffel
    };
    let (a, b, c, d) = (at(2.0 * h), at(h), at(-h), at(-2.0 * h));
    let mut out = [[[0.0; 2]; 2]; 2];
    for l in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                out[l][i][j] = (-a[l][i][j] + 8.0 * b[l][i][j] - 8.0 * c[l][i][j] + d[l][i][j]) / (12.0 * h);
            }
        }
    }
    out
}

/// `K = R_1212 / det sigma` with `R^l_ijk` built from difference quotients of the
/// Christoffel symbols, independent of the curvature stored per metric.
pub fn curvature_from_christoffel(id: MetricId, p: [f64; 2]) -> f64 {
    let m = metric_at(id, p).unwrap();
    let g = m.christoffel;
    let dg = [christoffel_fd(id, p, 0, 1e-3), christoffel_fd(id, p, 1, 1e-3)];
    // R^l_{i j k} with (i, j, k) = (1, 0, 1), lowering l with sigma
    let (i, j, k) = (1, 0, 1);
    let mut r_up = [0.0; 2];
    for (l, r) in r_up.iter_mut().enumerate() {
        *r = dg[j][l][i][k] - dg[k][l][i][j];
        for q in 0..2 {
            *r += g[l][j][q] * g[q][i][k] - g[l][k][q] * g[q][i][j];
        }
    }
    let r_0101 = m.sigma[0][0] * r_up[0] + m.sigma[0][1] * r_up[1];
    r_0101 / m.det()
}

/// Max error of the grid's covariant Hessian against exact derivatives of a
/// polynomial, over nodes with `rho >= 0.25`.
pub fn hessian_error(n: usize) -> f64 {
    let d = build_domain(DomainSpec::ellipse(0.6, 0.45), MetricId::SphereStereographic).unwrap();
    let g = Grid::new(&d, n, 2 * n).unwrap();
    let u = Poly2 { terms: vec![(0.3, 2, 0), (-0.2, 1, 1), (0.5, 0, 3), (0.4, 1, 0), (0.1, 2, 2)] };
    let vals = g.sample(|x| u.partial(x, 0, 0));
    let mut err: f64 = 0.0;
    for i in 1..=n {
        for j in 0..2 * n {
            let node = g.node(i, j);
            if node.rho < 0.25 {
                continue;
            }
            let (_, h) = g.derivatives(&vals, i, j);
            let exact = covariant_hessian(&node.metric, u.grad(node.x), u.partials2(node.x));
            for a in 0..2 {
                for b in 0..2 {
                    err = err.max((h[a][b] - exact[a][b]).abs());
                }
            }
        }
    }
    err
}

