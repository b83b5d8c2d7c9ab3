//! Rotationally symmetric solutions on the flat disk of radius `R` with
//! constant contact angle `phi`.
//!
//! With `w = u'` and `z = w / sqrt(1 - w^2)`, the translator equation
//! `g^ij D_i D_j u = c` becomes `z' = c sqrt(1 + z^2) - z / r`, and the
//! contact condition reads `z(R) = -phi`. The regularized problem
//! `g^ij D_i D_j u = eps u` becomes `u' = z / sqrt(1 + z^2)`,
//! `(r z)' = eps r u sqrt(1 + z^2)`.

/// Integration steps per unit radius.
const STEPS: usize = 20_000;

#[derive(Debug, Clone)]
pub struct RadialProfile {
    /// Radii `0 = r_0 < ... < r_n = R`.
    pub r: Vec<f64>,
    /// Profile values at `r`, shifted to zero area mean.
    pub u: Vec<f64>,
    /// Slopes `u'(r)`.
    pub w: Vec<f64>,
}

impl RadialProfile {
    /// Cubic Hermite interpolation of the profile.
    pub fn eval(&self, rr: f64) -> f64 {
        let n = self.r.len() - 1;
        let h = self.r[1] - self.r[0];
        let k = ((rr / h).floor() as usize).min(n - 1);
        let t = (rr - self.r[k]) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t),
            t * (1.0 - t) * (1.0 - t),
            t * t * (3.0 - 2.0 * t),
            t * t * (t - 1.0),
        );
        h00 * self.u[k] + h10 * h * self.w[k] + h01 * self.u[k + 1] + h11 * h * self.w[k + 1]
    }

    pub fn slope(&self, rr: f64) -> f64 {
        let n = self.r.len() - 1;
        let h = self.r[1] - self.r[0];
        let k = ((rr / h).floor() as usize).min(n - 1);
        let t = (rr - self.r[k]) / h;
        (1.0 - t) * self.w[k] + t * self.w[k + 1]
    }
}

#[derive(Debug, Clone)]
pub struct RadialTranslator {
    pub speed: f64,
    pub profile: RadialProfile,
}

fn rk4<const N: usize>(y: &mut [f64; N], r: f64, h: f64, f: &dyn Fn(f64, &[f64; N]) -> [f64; N]) {
    let add = |y: &[f64; N], k: &[f64; N], a: f64| {
        let mut o = *y;
        for i in 0..N {
            o[i] += a * k[i];
        }
        o
    };
    let k1 = f(r, y);
    let k2 = f(r + 0.5 * h, &add(y, &k1, 0.5 * h));
    let k3 = f(r + 0.5 * h, &add(y, &k2, 0.5 * h));
    let k4 = f(r + h, &add(y, &k3, h));
    for i in 0..N {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Integrates the translator ODE for speed `c`; returns `(r, z)` samples.
fn shoot_translator(c: f64, radius: f64) -> (Vec<f64>, Vec<f64>) {
    let n = ((STEPS as f64 * radius).ceil() as usize).max(100);
    let h = radius / n as f64;
    let mut r = vec![0.0];
    let mut z = vec![0.0];
    // series start z = c r / 2 + O(r^3), taken over the first step
    let r1 = h;
    let mut y = [c * r1 / 2.0];
    r.push(r1);
    z.push(y[0]);
    let f = |rr: f64, y: &[f64; 1]| [c * (1.0 + y[0] * y[0]).sqrt() - y[0] / rr];
    for k in 1..n {
        rk4(&mut y, k as f64 * h, h, &f);
        r.push((k + 1) as f64 * h);
        z.push(y[0]);
    }
    (r, z)
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * (1.0 + mid.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn profile_from_slopes(r: Vec<f64>, w: Vec<f64>) -> RadialProfile {
    let n = r.len() - 1;
    let h = r[1] - r[0];
    let mut u = vec![0.0; n + 1];
    for k in 0..n {
        // Simpson with the midpoint slope from a local quadratic
        let wm = if k + 2 <= n {
            (3.0 * w[k] + 6.0 * w[k + 1] - w[k + 2]) / 8.0
        } else {
            (-w[k - 1] + 6.0 * w[k] + 3.0 * w[k + 1]) / 8.0
        };
        u[k + 1] = u[k] + h / 6.0 * (w[k] + 4.0 * wm + w[k + 1]);
    }
    // zero mean with area weight r dr
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..=n {
        let wt = if k == 0 || k == n { 0.5 } else { 1.0 } * r[k];
        num += wt * u[k];
        den += wt;
    }
    let m = num / den;
    for x in u.iter_mut() {
        *x -= m;
    }
    RadialProfile { r, u, w }
}

/// Translating solution with `z(R) = -phi` found by bisection on the speed.
pub fn translator(phi: f64, radius: f64) -> RadialTranslator {
    let miss = |c: f64| {
        let (_, z) = shoot_translator(c, radius);
        z[z.len() - 1] + phi
    };
    let bound = 4.0 * (1.0 + phi.abs()) / radius;
    let c = bisect(-bound, bound, miss);
    let (r, z) = shoot_translator(c, radius);
    let w = z.iter().map(|z| z / (1.0 + z * z).sqrt()).collect();
    RadialTranslator { speed: c, profile: profile_from_slopes(r, w) }
}

#[derive(Debug, Clone)]
pub struct RadialRegularized {
    pub eps: f64,
    /// `u(0)`
    pub center_value: f64,
    /// Area mean of `u_eps`.
    pub mean: f64,
    /// Profile minus its mean.
    pub profile: RadialProfile,
}

fn shoot_regularized(a: f64, eps: f64, radius: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = ((STEPS as f64 * radius).ceil() as usize).max(100);
    let h = radius / n as f64;
    // y = (u, r z)
    let f = |rr: f64, y: &[f64; 2]| {
        let z = y[1] / rr;
        let s = (1.0 + z * z).sqrt();
        [z / s, eps * rr * y[0] * s]
    };
    let r1 = h;
    let z1 = eps * a * r1 / 2.0;
    let mut y = [a + r1 * z1 / 4.0, r1 * z1];
    let mut r = vec![0.0, r1];
    let mut u = vec![a, y[0]];
    let mut z = vec![0.0, z1];
    for k in 1..n {
        rk4(&mut y, k as f64 * h, h, &f);
        let rr = (k + 1) as f64 * h;
        r.push(rr);
        u.push(y[0]);
        z.push(y[1] / rr);
        if !y[1].is_finite() || y[1].abs() > 1e12 {
            // saturated; extend with the current value so the sign is kept
            while r.len() <= n {
                r.push(r.len() as f64 * h);
                u.push(y[0]);
                z.push(y[1].signum() * 1e12);
            }
            break;
        }
    }
    (r, u, z)
}

/// Regularized radial solution with `z(R) = -phi` by bisection on `u(0)`.
pub fn regularized(phi: f64, radius: f64, eps: f64) -> RadialRegularized {
    let miss = |a: f64| {
        let (_, _, z) = shoot_regularized(a, eps, radius);
        z[z.len() - 1] + phi
    };
    let guess = translator(phi, radius).speed / eps;
    let mut span = 1.0 + guess.abs() * 0.1;
    let (mut lo, mut hi) = (guess - span, guess + span);
    while miss(lo) > 0.0 || miss(hi) < 0.0 {
        span *= 2.0;
        lo = guess - span;
        hi = guess + span;
        assert!(span < 1e15, "no bracket for the regularized shooting problem");
    }
    let a = bisect(lo, hi, miss);
    let (r, u, z) = shoot_regularized(a, eps, radius);
    let w: Vec<f64> = z.iter().map(|z| z / (1.0 + z * z).sqrt()).collect();
    let mut num = 0.0;
    let mut den = 0.0;
    let n = r.len() - 1;
    for k in 0..=n {
        let wt = if k == 0 || k == n { 0.5 } else { 1.0 } * r[k];
        num += wt * u[k];
        den += wt;
    }
    let mean = num / den;
    let prof = RadialProfile { r, u: u.iter().map(|x| x - mean).collect(), w };
    RadialRegularized { eps, center_value: a, mean, profile: prof }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_angle_is_flat() {
        let t = translator(0.0, 1.0);
        assert!(t.speed.abs() < 1e-12);
        assert!(t.profile.u.iter().all(|u| u.abs() < 1e-12));
    }

    #[test]
    fn small_angle_speed_is_near_leading_order() {
        // leading order -2 phi / R
        let t = translator(0.01, 1.0);
        assert!((t.speed + 0.02).abs() < 1e-5, "{}", t.speed);
    }

    #[test]
    fn speed_satisfies_the_integral_identity() {
        // c int_0^1 r / v dr = -phi for R = 1
        let phi = 0.2;
        let t = translator(phi, 1.0);
        let p = &t.profile;
        let n = p.r.len() - 1;
        let mut s = 0.0;
        for k in 0..=n {
            let wt = if k == 0 || k == n { 0.5 } else { 1.0 };
            s += wt * p.r[k] / (1.0 - p.w[k] * p.w[k]).sqrt();
        }
        s *= p.r[1];
        assert!((t.speed * s + phi).abs() < 1e-8, "{}", t.speed * s + phi);
    }

    #[test]
    fn regularized_speed_approaches_translator() {
        let c = translator(0.2, 1.0).speed;
        let a = regularized(0.2, 1.0, 1e-2);
        let b = regularized(0.2, 1.0, 1e-3);
        assert!((b.eps * b.mean - c).abs() < (a.eps * a.mean - c).abs());
        assert!((b.eps * b.mean - c).abs() < 1e-4);
    }
}
