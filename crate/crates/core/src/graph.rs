//! Pointwise geometry of a space-like graph `{(x, u(x))}` in `M^2 x R` with the
//! Lorentz product metric `sigma - ds^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{Mat2, MetricSample};

/// Operations refuse gradients with `|Du|^2 >= 1 - SPACELIKE_GUARD`.
pub const SPACELIKE_GUARD: f64 = 1e-10;

pub fn check_spacelike(du2: f64, location: impl FnOnce() -> String) -> Result<()> {
    if du2.is_finite() && du2 < 1.0 - SPACELIKE_GUARD {
        Ok(())
    } else {
        Err(Error::SpacelikeViolation { location: location(), du2 })
    }
}

/// Covariant Hessian `D_i D_j u = d_i d_j u - Gamma^k_ij d_k u` from chart partials.
pub fn covariant_hessian(metric: &MetricSample, grad: [f64; 2], partials: Mat2) -> Mat2 {
    let mut h = partials;
    for (i, row) in h.iter_mut().enumerate() {
        for (j, hij) in row.iter_mut().enumerate() {
            *hij -= metric.christoffel[0][i][j] * grad[0] + metric.christoffel[1][i][j] * grad[1];
        }
    }
    h
}

/// Induced metric, its inverse and the mean curvature of the graph at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphGeometry {
    /// `D_i u`
    pub du: [f64; 2],
    /// `D^i u = sigma^ij D_j u`
    pub du_up: [f64; 2],
    pub du2: f64,
    /// `sqrt(1 - |Du|^2)`
    pub v: f64,
    /// `g_ij = sigma_ij - D_i u D_j u`
    pub g_lower: Mat2,
    /// `g^ij = sigma^ij + D^i u D^j u / (1 - |Du|^2)`
    pub g_upper: Mat2,
    pub hessian: Mat2,
    /// `g^ij D_i D_j u`, the right-hand side of the flow (equals `H v`).
    pub flow_speed: f64,
    pub mean_curvature: f64,
}

impl GraphGeometry {
    /// Second fundamental form `h_ij = D_i D_j u / v`.
    pub fn second_fundamental_form(&self) -> Mat2 {
        let mut h = self.hessian;
        for row in h.iter_mut() {
            for x in row.iter_mut() {
                *x /= self.v;
            }
        }
        h
    }
}

pub fn inverse_induced_metric(metric: &MetricSample, du: [f64; 2]) -> (Mat2, f64) {
    let up = metric.raise(du);
    let du2 = up[0] * du[0] + up[1] * du[1];
    let w = 1.0 / (1.0 - du2);
    let s = &metric.sigma_inv;
    (
        [
            [s[0][0] + up[0] * up[0] * w, s[0][1] + up[0] * up[1] * w],
            [s[1][0] + up[1] * up[0] * w, s[1][1] + up[1] * up[1] * w],
        ],
        du2,
    )
}

pub fn contract(a: &Mat2, b: &Mat2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// Graph geometry from the covariant gradient and Hessian of `u` at a point.
pub fn graph_geometry(metric: &MetricSample, du: [f64; 2], hessian: Mat2) -> Result<GraphGeometry> {
    let du_up = metric.raise(du);
    let du2 = du_up[0] * du[0] + du_up[1] * du[1];
    check_spacelike(du2, || format!("chart point ({}, {})", metric.point[0], metric.point[1]))?;
    let (g_upper, _) = inverse_induced_metric(metric, du);
    let s = &metric.sigma;
    let g_lower = [
        [s[0][0] - du[0] * du[0], s[0][1] - du[0] * du[1]],
        [s[1][0] - du[1] * du[0], s[1][1] - du[1] * du[1]],
    ];
    let v = (1.0 - du2).sqrt();
    let flow_speed = contract(&g_upper, &hessian);
    Ok(GraphGeometry {
        du,
        du_up,
        du2,
        v,
        g_lower,
        g_upper,
        hessian,
        flow_speed,
        mean_curvature: flow_speed / v,
    })
}

/// Coefficients of the lower-order terms in the evolution equation of `|Du|^2`:
///
/// `d_t |Du|^2 = g^ik D_i|Du|^2 D_k|Du|^2 / v^2 + g^ij D_i D_j |Du|^2
///              - hessian * |D^2 u|^2 - gradient * w(v) |D|Du|^2|^2 - curvature * K |Du|^2`
///
/// with `w(v) = 1 / v^2` when `gradient_over_v2` is set and `1` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvoDuConvention {
    pub hessian: f64,
    pub gradient: f64,
    pub gradient_over_v2: bool,
    pub curvature: f64,
}

impl EvoDuConvention {
    /// The coefficients exactly as printed in the original statement.
    pub const PRINTED: EvoDuConvention =
        EvoDuConvention { hessian: 1.0, gradient: 1.0, gradient_over_v2: false, curvature: 1.0 };

    /// All eight combinations of the two readings of each term.
    pub fn candidates() -> Vec<EvoDuConvention> {
        let mut out = Vec::with_capacity(8);
        for hessian in [1.0, 2.0] {
            for (gradient, gradient_over_v2) in [(1.0, false), (0.5, true)] {
                for curvature in [1.0, 2.0] {
                    out.push(EvoDuConvention { hessian, gradient, gradient_over_v2, curvature });
                }
            }
        }
        out
    }

    pub fn label(&self) -> String {
        let grad = if self.gradient_over_v2 {
            format!("{}/v^2", self.gradient)
        } else {
            format!("{}", self.gradient)
        };
        format!("hess={} grad={} curv={}", self.hessian, grad, self.curvature)
    }
}

/// Inputs for the pointwise right-hand side of the `|Du|^2` evolution equation.
#[derive(Debug, Clone, Copy)]
pub struct EvoDuInputs {
    pub du: [f64; 2],
    pub hessian: Mat2,
    /// `D_i |Du|^2`
    pub grad_du2: [f64; 2],
    /// `D_i D_j |Du|^2`
    pub hessian_du2: Mat2,
}

/// Right-hand side of the `|Du|^2` evolution equation for a coefficient convention.
pub fn evo_du_rhs(metric: &MetricSample, input: &EvoDuInputs, conv: &EvoDuConvention) -> Result<f64> {
    let (g, du2) = inverse_induced_metric(metric, input.du);
    check_spacelike(du2, || format!("chart point ({}, {})", metric.point[0], metric.point[1]))?;
    let v2 = 1.0 - du2;
    let q = input.grad_du2;
    let gq = [g[0][0] * q[0] + g[0][1] * q[1], g[1][0] * q[0] + g[1][1] * q[1]];
    let transport = (gq[0] * q[0] + gq[1] * q[1]) / v2;
    let diffusion = contract(&g, &input.hessian_du2);
    let s = &metric.sigma_inv;
    let h = &input.hessian;
    let mut hess_norm2 = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    hess_norm2 += s[a][c] * s[b][d] * h[a][b] * h[c][d];
                }
            }
        }
    }
    let grad_norm2 = metric.covector_norm2(q);
    let grad_weight = if conv.gradient_over_v2 { 1.0 / v2 } else { 1.0 };
    Ok(transport + diffusion
        - conv.hessian * hess_norm2
        - conv.gradient * grad_weight * grad_norm2
        - conv.curvature * metric.gauss_curvature * du2)
}
