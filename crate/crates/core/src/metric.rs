//! Catalog of analytic surface metrics.
//!
//! Every entry supplies the metric tensor and its first partial derivatives in
//! closed form. Christoffel symbols follow from the Koszul formula applied to
//! those exact derivatives, and the Gaussian curvature is given per entry.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat2 = [[f64; 2]; 2];

/// Built-in metrics. Charts are either Cartesian-like (a single regular chart
/// that can carry a discretized domain) or polar-like (singular along a line).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum MetricId {
    /// Euclidean plane in Cartesian coordinates.
    Flat,
    /// Euclidean plane in polar coordinates `(r, theta)`.
    FlatPolar,
    /// Unit sphere in spherical coordinates `(polar angle, azimuth)`.
    SphereSpherical,
    /// Unit sphere in stereographic coordinates, `sigma = 4 / (1 + |x|^2)^2 delta`.
    SphereStereographic,
    /// Rotationally symmetric `dr^2 + f(r)^2 dtheta^2` with `f = r - a r^3`,
    /// written in Cartesian coordinates. `K = 6a / (1 - a r^2)`.
    RotationalCubic { a: f64 },
}

impl MetricId {
    pub fn name(&self) -> &'static str {
        match self {
            MetricId::Flat => "flat",
            MetricId::FlatPolar => "flat_polar",
            MetricId::SphereSpherical => "sphere_spherical",
            MetricId::SphereStereographic => "sphere_stereographic",
            MetricId::RotationalCubic { .. } => "rotational_cubic",
        }
    }

    /// Whether the chart is regular enough to carry a boundary-fitted grid.
    pub fn supports_domains(&self) -> bool {
        !matches!(self, MetricId::FlatPolar | MetricId::SphereSpherical)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let finite = p[0].is_finite() && p[1].is_finite();
        finite
            && match *self {
                MetricId::Flat | MetricId::SphereStereographic => true,
                MetricId::FlatPolar => p[0] > 0.0,
                MetricId::SphereSpherical => p[0] > 0.0 && p[0] < std::f64::consts::PI,
                MetricId::RotationalCubic { a } => a <= 0.0 || a * (p[0] * p[0] + p[1] * p[1]) < 1.0,
            }
    }

    /// Samples the metric and all derived data at a chart point.
    pub fn at(&self, p: [f64; 2]) -> Result<MetricSample> {
        metric_at(*self, p)
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricId::RotationalCubic { a } => write!(f, "rotational_cubic:{a}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for MetricId {
    type Err = Error;

    /// Parses `flat`, `flat_polar`, `sphere_spherical`, `sphere_stereographic`
    /// or `rotational_cubic:<a>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "flat" => Ok(MetricId::Flat),
            "flat_polar" => Ok(MetricId::FlatPolar),
            "sphere_spherical" => Ok(MetricId::SphereSpherical),
            "sphere_stereographic" | "sphere_cap" => Ok(MetricId::SphereStereographic),
            _ => match s.split_once(':') {
                Some(("rotational_cubic", a)) => a
                    .parse::<f64>()
                    .map(|a| MetricId::RotationalCubic { a })
                    .map_err(|_| Error::UnknownMetric(s.to_string())),
                _ => Err(Error::UnknownMetric(s.to_string())),
            },
        }
    }
}

/// Metric data at one chart point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    pub point: [f64; 2],
    pub sigma: Mat2,
    pub sigma_inv: Mat2,
    /// `dsigma[k][i][j] = d_k sigma_ij`
    pub dsigma: [Mat2; 2],
    /// `christoffel[k][i][j] = Gamma^k_ij`
    pub christoffel: [Mat2; 2],
    pub gauss_curvature: f64,
}

impl MetricSample {
    pub fn det(&self) -> f64 {
        det2(&self.sigma)
    }

    /// Riemannian area element `sqrt(det sigma)`.
    pub fn volume_element(&self) -> f64 {
        self.det().sqrt()
    }

    pub fn dot(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let s = &self.sigma;
        a[0] * (s[0][0] * b[0] + s[0][1] * b[1]) + a[1] * (s[1][0] * b[0] + s[1][1] * b[1])
    }

    pub fn norm(&self, a: [f64; 2]) -> f64 {
        self.dot(a, a).sqrt()
    }

    /// Raises a covector index: `w^i = sigma^ij w_j`.
    pub fn raise(&self, w: [f64; 2]) -> [f64; 2] {
        mat_vec(&self.sigma_inv, w)
    }

    /// Lowers a vector index: `w_i = sigma_ij w^j`.
    pub fn lower(&self, w: [f64; 2]) -> [f64; 2] {
        mat_vec(&self.sigma, w)
    }

    /// `|w|^2 = sigma^ij w_i w_j` for a covector.
    pub fn covector_norm2(&self, w: [f64; 2]) -> f64 {
        let r = self.raise(w);
        r[0] * w[0] + r[1] * w[1]
    }

    /// `Gamma(a, b)^k = Gamma^k_ij a^i b^j`.
    pub fn gamma_contract(&self, a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    *o += self.christoffel[k][i][j] * a[i] * b[j];
                }
            }
        }
        out
    }

    /// Fully covariant curvature tensor, `R_limj = K (sigma_lm sigma_ij - sigma_lj sigma_im)`.
    pub fn riemann(&self, l: usize, i: usize, m: usize, j: usize) -> f64 {
        let s = &self.sigma;
        self.gauss_curvature * (s[l][m] * s[i][j] - s[l][j] * s[i][m])
    }
}

pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn inv2(m: &Mat2) -> Mat2 {
    let d = det2(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

pub fn mat_vec(m: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Samples a catalog metric at `p`.
pub fn metric_at(id: MetricId, p: [f64; 2]) -> Result<MetricSample> {
    if !id.contains(p) {
        return Err(Error::OutsideChart { metric: id.to_string(), x: p[0], y: p[1] });
    }
    let (sigma, dsigma, k) = match id {
        MetricId::Flat => ([[1.0, 0.0], [0.0, 1.0]], [[[0.0; 2]; 2]; 2], 0.0),
        MetricId::FlatPolar => {
            let r = p[0];
            let mut ds = [[[0.0; 2]; 2]; 2];
            ds[0][1][1] = 2.0 * r;
            ([[1.0, 0.0], [0.0, r * r]], ds, 0.0)
        }
        MetricId::SphereSpherical => {
            let (s, c) = p[0].sin_cos();
            let mut ds = [[[0.0; 2]; 2]; 2];
            ds[0][1][1] = 2.0 * s * c;
            ([[1.0, 0.0], [0.0, s * s]], ds, 1.0)
        }
        MetricId::SphereStereographic => {
            let r2 = p[0] * p[0] + p[1] * p[1];
            let lam = 2.0 / (1.0 + r2);
            let l2 = lam * lam;
            let mut ds = [[[0.0; 2]; 2]; 2];
            for k in 0..2 {
                // d_k (lam^2) = 2 lam d_k lam,  d_k lam = -lam^2 x_k
                let d = -2.0 * lam * lam * lam * p[k];
                ds[k][0][0] = d;
                ds[k][1][1] = d;
            }
            ([[l2, 0.0], [0.0, l2]], ds, 1.0)
        }
        MetricId::RotationalCubic { a } => {
            let r2 = p[0] * p[0] + p[1] * p[1];
            let w = 1.0 - a * r2;
            let alpha = w * w;
            let beta = 2.0 * a - a * a * r2;
            let mut sigma = [[0.0; 2]; 2];
            let mut ds = [[[0.0; 2]; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    sigma[i][j] = alpha * delta + beta * p[i] * p[j];
                    for k in 0..2 {
                        let dk_alpha = -4.0 * a * w * p[k];
                        let dk_beta = -2.0 * a * a * p[k];
                        let dik = if i == k { 1.0 } else { 0.0 };
                        let djk = if j == k { 1.0 } else { 0.0 };
                        ds[k][i][j] = dk_alpha * delta
                            + dk_beta * p[i] * p[j]
                            + beta * (dik * p[j] + p[i] * djk);
                    }
                }
            }
            (sigma, ds, 6.0 * a / w)
        }
    };
    let det = det2(&sigma);
    if !(det > 0.0 && sigma[0][0] > 0.0) {
        return Err(Error::OutsideChart { metric: id.to_string(), x: p[0], y: p[1] });
    }
    let sigma_inv = inv2(&sigma);
    let christoffel = christoffel_from_derivatives(&sigma_inv, &dsigma);
    Ok(MetricSample { point: p, sigma, sigma_inv, dsigma, christoffel, gauss_curvature: k })
}

/// `Gamma^k_ij = 1/2 sigma^kl (d_i sigma_jl + d_j sigma_il - d_l sigma_ij)`.
pub fn christoffel_from_derivatives(sigma_inv: &Mat2, dsigma: &[Mat2; 2]) -> [Mat2; 2] {
    let mut g = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for l in 0..2 {
                    acc += sigma_inv[k][l] * (dsigma[i][j][l] + dsigma[j][i][l] - dsigma[l][i][j]);
                }
                g[k][i][j] = 0.5 * acc;
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn flat_is_trivial() {
        let m = metric_at(MetricId::Flat, [0.3, -1.7]).unwrap();
        assert_eq!(m.sigma, [[1.0, 0.0], [0.0, 1.0]]);
        assert!(m.christoffel.iter().flatten().flatten().all(|&g| g == 0.0));
        assert_eq!(m.gauss_curvature, 0.0);
    }

    #[test]
    fn polar_christoffel_at_r2() {
        let m = metric_at(MetricId::FlatPolar, [2.0, 0.4]).unwrap();
        assert!(close(m.christoffel[0][1][1], -2.0, 1e-15));
        assert!(close(m.christoffel[1][0][1], 0.5, 1e-15));
        assert!(close(m.christoffel[1][1][0], 0.5, 1e-15));
        assert_eq!(m.gauss_curvature, 0.0);
    }

    #[test]
    fn sphere_charts_have_unit_curvature() {
        let a = metric_at(MetricId::SphereSpherical, [1.1, 0.3]).unwrap();
        let b = metric_at(MetricId::SphereStereographic, [0.2, -0.4]).unwrap();
        assert!(close(a.gauss_curvature, 1.0, 1e-8));
        assert!(close(b.gauss_curvature, 1.0, 1e-8));
    }

    #[test]
    fn outside_chart_and_unknown_ids() {
        assert!(matches!(metric_at(MetricId::FlatPolar, [-1.0, 0.0]), Err(Error::OutsideChart { .. })));
        assert!(matches!(metric_at(MetricId::SphereSpherical, [0.0, 0.0]), Err(Error::OutsideChart { .. })));
        assert!(matches!(
            metric_at(MetricId::RotationalCubic { a: 1.0 }, [1.0, 0.5]),
            Err(Error::OutsideChart { .. })
        ));
        assert!(matches!("hyperbolic".parse::<MetricId>(), Err(Error::UnknownMetric(_))));
        assert_eq!("rotational_cubic:0.25".parse::<MetricId>().unwrap(), MetricId::RotationalCubic { a: 0.25 });
    }

    #[test]
    fn riemann_reconstruction_has_gauss_curvature() {
        let m = metric_at(MetricId::SphereStereographic, [0.3, 0.1]).unwrap();
        // R_1212 = K det(sigma)
        assert!(close(m.riemann(0, 1, 0, 1), m.gauss_curvature * m.det(), 1e-12));
        assert_eq!(m.riemann(0, 0, 1, 1), 0.0);
    }
}
