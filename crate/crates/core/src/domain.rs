//! Strictly convex domains, their boundary frame, the normal collar and the
//! prescribed contact-angle function.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{MetricId, MetricSample};

/// Boundary curve shapes, parameterized by `s` in `[0, 2 pi)` counterclockwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainShape {
    /// `c + radius (cos s, sin s)`
    Disk { radius: f64 },
    /// `c + (a cos s, b sin s)`
    Ellipse { a: f64, b: f64 },
    /// `c + radius (1 + amplitude cos(mode s)) (cos s, sin s)`
    Fourier { radius: f64, amplitude: f64, mode: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub shape: DomainShape,
    #[serde(default)]
    pub center: [f64; 2],
}

impl DomainSpec {
    pub fn disk(radius: f64) -> Self {
        DomainSpec { shape: DomainShape::Disk { radius }, center: [0.0, 0.0] }
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        DomainSpec { shape: DomainShape::Ellipse { a, b }, center: [0.0, 0.0] }
    }

    /// Position and first two parameter derivatives of the boundary curve.
    pub fn curve(&self, s: f64) -> [[f64; 2]; 3] {
        let (sn, cs) = s.sin_cos();
        let c = self.center;
        match self.shape {
            DomainShape::Disk { radius: r } => [
                [c[0] + r * cs, c[1] + r * sn],
                [-r * sn, r * cs],
                [-r * cs, -r * sn],
            ],
            DomainShape::Ellipse { a, b } => [
                [c[0] + a * cs, c[1] + b * sn],
                [-a * sn, b * cs],
                [-a * cs, -b * sn],
            ],
            DomainShape::Fourier { radius, amplitude, mode } => {
                let m = mode as f64;
                let (sm, cm) = (m * s).sin_cos();
                let r = radius * (1.0 + amplitude * cm);
                let r1 = -radius * amplitude * m * sm;
                let r2 = -radius * amplitude * m * m * cm;
                let e = [cs, sn];
                let ep = [-sn, cs];
                [
                    [c[0] + r * e[0], c[1] + r * e[1]],
                    [r1 * e[0] + r * ep[0], r1 * e[1] + r * ep[1]],
                    [(r2 - r) * e[0] + 2.0 * r1 * ep[0], (r2 - r) * e[1] + 2.0 * r1 * ep[1]],
                ]
            }
        }
    }

    fn validate_parameters(&self) -> Result<()> {
        let ok = match self.shape {
            DomainShape::Disk { radius } => radius > 0.0 && radius.is_finite(),
            DomainShape::Ellipse { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
            DomainShape::Fourier { radius, amplitude, mode } => {
                radius > 0.0 && amplitude.abs() < 1.0 && mode >= 1 && radius.is_finite()
            }
        };
        if ok && self.center.iter().all(|c| c.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidDomain(format!("bad shape parameters {:?}", self)))
        }
    }
}

/// Boundary data at one curve parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFrame {
    pub s: f64,
    pub point: [f64; 2],
    /// `d gamma / ds` in chart components.
    pub velocity: [f64; 2],
    /// `|d gamma / ds|_sigma`
    pub speed: f64,
    /// Counterclockwise sigma-unit tangent.
    pub tangent: [f64; 2],
    /// Inward sigma-unit normal.
    pub normal: [f64; 2],
    /// Geodesic curvature, positive for convex boundaries.
    pub kappa: f64,
}

/// A strictly convex domain in a catalog chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexDomain {
    pub spec: DomainSpec,
    pub metric: MetricId,
    pub kappa0: f64,
    pub kappa_max: f64,
    pub inradius: f64,
    pub collar_depth: f64,
}

const CURVATURE_SAMPLES: usize = 2048;

/// Builds the domain and verifies strict convexity with respect to `sigma`.
pub fn build_domain(spec: DomainSpec, metric: MetricId) -> Result<ConvexDomain> {
    spec.validate_parameters()?;
    if !metric.supports_domains() {
        return Err(Error::ChartNotSupported(metric.to_string()));
    }
    metric.at(spec.center)?;
    let mut kappa0 = f64::INFINITY;
    let mut kappa_max = f64::NEG_INFINITY;
    for k in 0..CURVATURE_SAMPLES {
        let s = TAU * k as f64 / CURVATURE_SAMPLES as f64;
        let f = frame_for(&spec, metric, s)?;
        if !(f.kappa > 0.0) {
            return Err(Error::NonConvex { s, kappa: f.kappa });
        }
        kappa0 = kappa0.min(f.kappa);
        kappa_max = kappa_max.max(f.kappa);
    }
    let inradius = ray_inradius(&spec, metric)?;
    let collar_depth = (0.2 * inradius).min(0.5 / kappa_max);
    Ok(ConvexDomain { spec, metric, kappa0, kappa_max, inradius, collar_depth })
}

fn frame_for(spec: &DomainSpec, metric: MetricId, s: f64) -> Result<BoundaryFrame> {
    let [p, d1, d2] = spec.curve(s);
    let m = metric.at(p)?;
    Ok(frame_from_curve(&m, s, p, d1, d2))
}

fn frame_from_curve(m: &MetricSample, s: f64, p: [f64; 2], d1: [f64; 2], d2: [f64; 2]) -> BoundaryFrame {
    let speed = m.norm(d1);
    let tangent = [d1[0] / speed, d1[1] / speed];
    let normal = unit_normal(m, tangent);
    let g = m.gamma_contract(d1, d1);
    let acc = [d2[0] + g[0], d2[1] + g[1]];
    let kappa = m.dot(acc, normal) / (speed * speed);
    BoundaryFrame { s, point: p, velocity: d1, speed, tangent, normal, kappa }
}

/// Sigma-unit vector orthogonal to `tangent`, on its left.
pub fn unit_normal(m: &MetricSample, tangent: [f64; 2]) -> [f64; 2] {
    let n0 = [-tangent[1], tangent[0]];
    let c = m.dot(n0, tangent);
    let n1 = [n0[0] - c * tangent[0], n0[1] - c * tangent[1]];
    let l = m.norm(n1);
    [n1[0] / l, n1[1] / l]
}

// min over rays from the center of the sigma-length to the boundary
fn ray_inradius(spec: &DomainSpec, metric: MetricId) -> Result<f64> {
    // 8-point Gauss-Legendre on [0, 1]
    const GL: [(f64, f64); 4] = [
        (0.183_434_642_495_649_8, 0.362_683_783_378_362),
        (0.525_532_409_916_329, 0.313_706_645_877_887_3),
        (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
        (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
    ];
    let c = spec.center;
    let mut best = f64::INFINITY;
    for k in 0..256 {
        let s = TAU * k as f64 / 256.0;
        let p = spec.curve(s)[0];
        let d = [p[0] - c[0], p[1] - c[1]];
        let mut len = 0.0;
        for &(x, w) in GL.iter() {
            for t in [0.5 * (1.0 - x), 0.5 * (1.0 + x)] {
                let m = metric.at([c[0] + t * d[0], c[1] + t * d[1]])?;
                len += 0.5 * w * m.norm(d);
            }
        }
        best = best.min(len);
    }
    Ok(best)
}

impl ConvexDomain {
    pub fn frame(&self, s: f64) -> Result<BoundaryFrame> {
        frame_for(&self.spec, self.metric, s)
    }

    /// Point and unit velocity of the normal geodesic leaving `gamma(s)` along
    /// the inward normal, after arc length `r` (negative `r` goes outward).
    pub fn collar(&self, s: f64, r: f64) -> Result<([f64; 2], [f64; 2])> {
        let f = self.frame(s)?;
        if self.metric == MetricId::Flat {
            let n = f.normal;
            return Ok(([f.point[0] + r * n[0], f.point[1] + r * n[1]], n));
        }
        let steps = ((r.abs() / 2e-3).ceil() as usize).max(2);
        let h = r / steps as f64;
        let mut x = f.point;
        let mut v = f.normal;
        let rhs = |x: [f64; 2], v: [f64; 2]| -> Result<([f64; 2], [f64; 2])> {
            let m = self.metric.at(x)?;
            let a = m.gamma_contract(v, v);
            Ok((v, [-a[0], -a[1]]))
        };
        for _ in 0..steps {
            let (k1x, k1v) = rhs(x, v)?;
            let (k2x, k2v) = rhs(axpy(x, 0.5 * h, k1x), axpy(v, 0.5 * h, k1v))?;
            let (k3x, k3v) = rhs(axpy(x, 0.5 * h, k2x), axpy(v, 0.5 * h, k2v))?;
            let (k4x, k4v) = rhs(axpy(x, h, k3x), axpy(v, h, k3v))?;
            for i in 0..2 {
                x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
                v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
            }
        }
        Ok((x, v))
    }

    /// Distance to the boundary for points inside the collar, by inverting the
    /// normal-geodesic coordinates. `None` outside the collar.
    pub fn distance_to_boundary(&self, x: [f64; 2]) -> Option<f64> {
        self.signed_distance(x).filter(|r| *r >= -1e-12).map(|r| r.max(0.0))
    }

    /// Signed distance, positive inside, within `collar_depth` of the boundary
    /// on either side.
    pub fn signed_distance(&self, x: [f64; 2]) -> Option<f64> {
        let mut s = 0.0;
        let mut best = f64::INFINITY;
        for k in 0..512 {
            let sk = TAU * k as f64 / 512.0;
            let p = self.spec.curve(sk)[0];
            let d = (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2);
            if d < best {
                best = d;
                s = sk;
            }
        }
        let mut r = 0.0;
        for _ in 0..40 {
            let (p, n) = self.collar(s, r).ok()?;
            let hs = 1e-6;
            let (pp, _) = self.collar(s + hs, r).ok()?;
            let (pm, _) = self.collar(s - hs, r).ok()?;
            let xs = [(pp[0] - pm[0]) / (2.0 * hs), (pp[1] - pm[1]) / (2.0 * hs)];
            let res = [p[0] - x[0], p[1] - x[1]];
            let det = xs[0] * n[1] - xs[1] * n[0];
            if det.abs() < 1e-300 {
                return None;
            }
            let ds = (res[0] * n[1] - res[1] * n[0]) / det;
            let dr = (xs[0] * res[1] - xs[1] * res[0]) / det;
            s -= ds;
            r -= dr;
            if ds.abs() + dr.abs() < 1e-14 {
                break;
            }
        }
        (r.abs() <= self.collar_depth).then_some(r)
    }

    /// Residuals of the boundary frame identities at `gamma(s)`, evaluated by
    /// finite differences of the collar coordinates.
    pub fn frame_identity_residuals(&self, s: f64, f: &dyn Fn([f64; 2]) -> f64) -> Result<FrameResiduals> {
        let fr = self.frame(s)?;
        let m = self.metric.at(fr.point)?;
        let h = 1e-3;
        let kappa = fr.kappa;

        // covariant derivatives along the boundary
        let tangent_at = |s: f64| self.frame(s).map(|f| f.tangent);
        let normal_at = |s: f64| self.frame(s).map(|f| f.normal);
        let dt = fd_vec(&tangent_at, s, h)?;
        let dn = fd_vec(&normal_at, s, h)?;
        let gt = m.gamma_contract(fr.velocity, fr.tangent);
        let gn = m.gamma_contract(fr.velocity, fr.normal);
        let nabla_t_t = [(dt[0] + gt[0]) / fr.speed, (dt[1] + gt[1]) / fr.speed];
        let nabla_t_n = [(dn[0] + gn[0]) / fr.speed, (dn[1] + gn[1]) / fr.speed];
        let r1 = [nabla_t_t[0] - kappa * fr.normal[0], nabla_t_t[1] - kappa * fr.normal[1]];
        let r2 = [nabla_t_n[0] + kappa * fr.tangent[0], nabla_t_n[1] + kappa * fr.tangent[1]];

        // collar frame: N = X_r, T = X_s / |X_s|
        let xs_at = |s0: f64, r: f64| -> Result<[f64; 2]> {
            fd_vec(&|ss: f64| self.collar(ss, r).map(|c| c.0), s0, h)
        };
        let t_field = |r: f64| -> Result<[f64; 2]> {
            let xs = xs_at(s, r)?;
            let (x, _) = self.collar(s, r)?;
            let l = self.metric.at(x)?.norm(xs);
            Ok([xs[0] / l, xs[1] / l])
        };
        let n_field = |r: f64| self.collar(s, r).map(|c| c.1);
        let dr_t = fd_vec(&t_field, 0.0, h)?;
        let dr_n = fd_vec(&n_field, 0.0, h)?;
        let g_nt = m.gamma_contract(fr.normal, fr.tangent);
        let g_nn = m.gamma_contract(fr.normal, fr.normal);
        let r3 = [dr_t[0] + g_nt[0], dr_t[1] + g_nt[1]];
        let r4 = [dr_n[0] + g_nn[0], dr_n[1] + g_nn[1]];

        // D_N D_T f - D_T D_N f - kappa D_T f
        let big_f = |ss: f64, r: f64| -> Result<f64> { Ok(f(self.collar(ss, r)?.0)) };
        let dt_f = |r: f64| -> Result<f64> {
            let fs = fd(&|ss: f64| big_f(ss, r), s, h)?;
            let (x, _) = self.collar(s, r)?;
            Ok(fs / self.metric.at(x)?.norm(xs_at(s, r)?))
        };
        let dn_f = |ss: f64| fd(&|r: f64| big_f(ss, r), 0.0, h);
        let dndt = fd(&dt_f, 0.0, h)?;
        let dtdn = fd(&dn_f, s, h)? / fr.speed;
        let lemma_ii = dndt - dtdn - kappa * dt_f(0.0)?;

        Ok(FrameResiduals {
            orthonormality: (m.dot(fr.tangent, fr.normal).abs())
                .max((m.norm(fr.tangent) - 1.0).abs())
                .max((m.norm(fr.normal) - 1.0).abs()),
            nabla_t_t: m.norm(r1),
            nabla_t_n: m.norm(r2),
            nabla_n_t: m.norm(r3),
            nabla_n_n: m.norm(r4),
            commutator: lemma_ii.abs(),
        })
    }
}

/// Residual norms of the boundary frame relations at one boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameResiduals {
    pub orthonormality: f64,
    /// `|nabla_T T - kappa N|`
    pub nabla_t_t: f64,
    /// `|nabla_T N + kappa T|`
    pub nabla_t_n: f64,
    /// `|nabla_N T|`
    pub nabla_n_t: f64,
    /// `|nabla_N N|`
    pub nabla_n_n: f64,
    /// `|D_N D_T f - D_T D_N f - kappa D_T f|`
    pub commutator: f64,
}

impl FrameResiduals {
    pub fn max(&self) -> f64 {
        [self.orthonormality, self.nabla_t_t, self.nabla_t_n, self.nabla_n_t, self.nabla_n_n, self.commutator]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn axpy(x: [f64; 2], a: f64, y: [f64; 2]) -> [f64; 2] {
    [x[0] + a * y[0], x[1] + a * y[1]]
}

// fourth-order central differences
fn fd(f: &dyn Fn(f64) -> Result<f64>, x: f64, h: f64) -> Result<f64> {
    Ok((-f(x + 2.0 * h)? + 8.0 * f(x + h)? - 8.0 * f(x - h)? + f(x - 2.0 * h)?) / (12.0 * h))
}

fn fd_vec(f: &dyn Fn(f64) -> Result<[f64; 2]>, x: f64, h: f64) -> Result<[f64; 2]> {
    let (a, b, c, d) = (f(x + 2.0 * h)?, f(x + h)?, f(x - h)?, f(x - 2.0 * h)?);
    Ok([
        (-a[0] + 8.0 * b[0] - 8.0 * c[0] + d[0]) / (12.0 * h),
        (-a[1] + 8.0 * b[1] - 8.0 * c[1] + d[1]) / (12.0 * h),
    ])
}

/// Contact-angle function `phi(s)` on the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiSpec {
    Constant { value: f64 },
    /// `mean + sum_k cos[k-1] cos(k s) + sin[k-1] sin(k s)`
    Fourier {
        #[serde(default)]
        mean: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// Samples at `s_j = 2 pi j / n`, trigonometrically interpolated.
    Table { values: Vec<f64> },
}

impl PhiSpec {
    pub fn constant(value: f64) -> Self {
        PhiSpec::Constant { value }
    }

    pub fn cosine(amplitude: f64) -> Self {
        PhiSpec::Fourier { mean: 0.0, cos: vec![amplitude], sin: vec![] }
    }

    /// Scales the whole function, used by the contact-angle homotopy.
    pub fn scaled(&self, t: f64) -> PhiSpec {
        match self {
            PhiSpec::Constant { value } => PhiSpec::Constant { value: t * value },
            PhiSpec::Fourier { mean, cos, sin } => PhiSpec::Fourier {
                mean: t * mean,
                cos: cos.iter().map(|c| t * c).collect(),
                sin: sin.iter().map(|c| t * c).collect(),
            },
            PhiSpec::Table { values } => PhiSpec::Table { values: values.iter().map(|c| t * c).collect() },
        }
    }

    /// Value and `d phi / ds` at `s`.
    pub fn eval(&self, s: f64) -> (f64, f64) {
        match self {
            PhiSpec::Constant { value } => (*value, 0.0),
            PhiSpec::Fourier { mean, cos, sin } => {
                let mut v = *mean;
                let mut d = 0.0;
                for (k, c) in cos.iter().enumerate() {
                    let m = (k + 1) as f64;
                    v += c * (m * s).cos();
                    d -= m * c * (m * s).sin();
                }
                for (k, c) in sin.iter().enumerate() {
                    let m = (k + 1) as f64;
                    v += c * (m * s).sin();
                    d += m * c * (m * s).cos();
                }
                (v, d)
            }
            PhiSpec::Table { values } => trig_interpolate(values, s),
        }
    }
}

fn trig_interpolate(values: &[f64], s: f64) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let nf = n as f64;
    let mut v = 0.0;
    let mut d = 0.0;
    let half = n / 2;
    for k in 0..=half {
        let (mut a, mut b) = (0.0, 0.0);
        for (j, &y) in values.iter().enumerate() {
            let t = TAU * (k * j) as f64 / nf;
            a += y * t.cos();
            b += y * t.sin();
        }
        let kf = k as f64;
        let (sk, ck) = (kf * s).sin_cos();
        if k == 0 {
            v += a / nf;
        } else if n % 2 == 0 && k == half {
            // Nyquist mode carries no derivative information
            v += a / nf * ck;
        } else {
            v += 2.0 / nf * (a * ck + b * sk);
            d += 2.0 / nf * kf * (-a * sk + b * ck);
        }
    }
    (v, d)
}

/// Contact-angle samples at the grid angles together with the constants
/// `phi0 = min phi`, `phi1 = max phi`, `phi2 = max |D_T phi|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactAngle {
    pub spec: PhiSpec,
    pub values: Vec<f64>,
    /// `D_T phi = (d phi / ds) / |gamma'|_sigma`
    pub tangential_derivative: Vec<f64>,
    pub phi0: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub boundary_integral: f64,
}

impl ContactAngle {
    pub fn new(spec: PhiSpec, domain: &ConvexDomain, n_angular: usize) -> Result<Self> {
        if let PhiSpec::Table { values } = &spec {
            if values.len() != n_angular {
                return Err(Error::PhiTableLength { got: values.len(), expected: n_angular });
            }
        }
        let mut values = Vec::with_capacity(n_angular);
        let mut dt = Vec::with_capacity(n_angular);
        let mut integral = 0.0;
        let ds = TAU / n_angular as f64;
        for j in 0..n_angular {
            let s = ds * j as f64;
            let (v, d) = spec.eval(s);
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("contact angle not finite at s = {s}")));
            }
            let f = domain.frame(s)?;
            values.push(v);
            dt.push(d / f.speed);
            integral += v * f.speed * ds;
        }
        let phi0 = values.iter().copied().fold(f64::INFINITY, f64::min);
        let phi1 = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let phi2 = dt.iter().map(|d| d.abs()).fold(0.0, f64::max);
        Ok(ContactAngle { spec, values, tangential_derivative: dt, phi0, phi1, phi2, boundary_integral: integral })
    }

    pub fn max_abs(&self) -> f64 {
        self.phi0.abs().max(self.phi1.abs())
    }
}

/// Angular positions `s_j = 2 pi j / n`.
pub fn angle(j: usize, n: usize) -> f64 {
    2.0 * PI * j as f64 / n as f64
}
