//! Sparse linear algebra for the grid operators: a stencil matrix with an
//! optional scalar border, restarted GMRES, and a preconditioner that solves
//! the angularly averaged operator exactly, mode by mode in `s`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Optional extra unknown coupled to every row (`column`), an extra equation
/// (`row`) and its diagonal entry (`corner`).
#[derive(Debug, Clone, PartialEq)]
pub struct Border {
    pub column: Vec<f64>,
    pub row: Vec<f64>,
    pub corner: f64,
}

/// Matrix on the ring/angle unknowns. Row `(i, j)` couples to `(i + di, j + dj)`
/// with `di in -2..=1`, `dj in -1..=1`; ring 0 is the first ring rotated by
/// half a turn and angles are periodic.
#[derive(Debug, Clone)]
pub struct StencilSystem {
    /// Number of rings, including the ghost ring.
    pub rings: usize,
    pub n_a: usize,
    /// `coef[row][di + 2][dj + 1]`
    pub coef: Vec<[[f64; 3]; 4]>,
    pub border: Option<Border>,
}

impl StencilSystem {
    pub fn new(rings: usize, n_a: usize) -> Self {
        StencilSystem { rings, n_a, coef: vec![[[0.0; 3]; 4]; rings * n_a], border: None }
    }

    /// Total number of unknowns, including the border unknown.
    pub fn dim(&self) -> usize {
        self.rings * self.n_a + usize::from(self.border.is_some())
    }

    #[inline]
    fn column_of(&self, i: usize, j: usize, di: isize, dj: isize) -> Option<usize> {
        let n = self.n_a as isize;
        let ii = i as isize + di;
        if ii < 0 || ii as usize > self.rings {
            return None;
        }
        if ii == 0 {
            let jj = (j as isize + dj + n / 2).rem_euclid(n) as usize;
            Some(jj)
        } else {
            let jj = (j as isize + dj).rem_euclid(n) as usize;
            Some((ii as usize - 1) * self.n_a + jj)
        }
    }

    /// Adds `value` at the entry coupling row `(i, j)` to `(i + di, j + dj)`.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, di: isize, dj: isize, value: f64) {
        let r = (i - 1) * self.n_a + j;
        self.coef[r][(di + 2) as usize][(dj + 1) as usize] += value;
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n_a = self.n_a;
        let nb = self.rings * n_a;
        for i in 1..=self.rings {
            for j in 0..n_a {
                let r = (i - 1) * n_a + j;
                let c = &self.coef[r];
                let mut acc = 0.0;
                for di in -2..=1isize {
                    for dj in -1..=1isize {
                        let a = c[(di + 2) as usize][(dj + 1) as usize];
                        if a != 0.0 {
                            if let Some(col) = self.column_of(i, j, di, dj) {
                                acc += a * x[col];
                            }
                        }
                    }
                }
                y[r] = acc;
            }
        }
        if let Some(b) = &self.border {
            let lam = x[nb];
            let mut last = b.corner * lam;
            for r in 0..nb {
                y[r] += b.column[r] * lam;
                last += b.row[r] * x[r];
            }
            y[nb] = last;
        }
    }

    /// Largest absolute row sum of the stencil part.
    pub fn max_row_sum(&self) -> f64 {
        self.coef.iter().map(|c| c.iter().flatten().map(|a| a.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Dense copy, for small problems and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut a = vec![vec![0.0; n]; n];
        let mut e = vec![0.0; n];
        let mut y = vec![0.0; n];
        for c in 0..n {
            e[c] = 1.0;
            self.apply(&e, &mut y);
            for r in 0..n {
                a[r][c] = y[r];
            }
            e[c] = 0.0;
        }
        a
    }
}

/// Solves a dense system by Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs()))
            .unwrap_or(k);
        if a[p][k] == 0.0 {
            return Err(Error::LinearSolver { residual: f64::INFINITY, iterations: 0 });
        }
        a.swap(k, p);
        b.swap(k, p);
        for r in k + 1..n {
            let f = a[r][k] / a[k][k];
            if f != 0.0 {
                for c in k..n {
                    a[r][c] -= f * a[k][c];
                }
                b[r] -= f * b[k];
            }
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in k + 1..n {
            s -= a[k][c] * b[c];
        }
        b[k] = s / a[k][k];
    }
    Ok(b)
}

/// Exact inverse of the angle-averaged stencil, applied through an FFT in `s`.
pub struct FourierPreconditioner {
    rings: usize,
    n_a: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Per mode: tridiagonal `(sub, diag, sup)` after eliminating the
    /// second-lower entry of the last ring, plus the elimination factor.
    modes: Vec<ModeSystem>,
    border: Option<ModeBorder>,
}

struct ModeSystem {
    sub: Vec<Complex64>,
    diag: Vec<Complex64>,
    sup: Vec<Complex64>,
    // last row -= elim * previous row
    elim: Complex64,
}

struct ModeBorder {
    // angle-averaged border row
    row: Vec<f64>,
    // mode-0 response to the border column
    y_col: Vec<Complex64>,
    denom: f64,
}

impl FourierPreconditioner {
    pub fn new(sys: &StencilSystem) -> Result<Self> {
        let (rings, n_a) = (sys.rings, sys.n_a);
        let mut avg = vec![[[0.0; 3]; 4]; rings];
        for i in 0..rings {
            for j in 0..n_a {
                let c = &sys.coef[i * n_a + j];
                for a in 0..4 {
                    for b in 0..3 {
                        avg[i][a][b] += c[a][b] / n_a as f64;
                    }
                }
            }
        }
        let ds = std::f64::consts::TAU / n_a as f64;
        let mut modes = Vec::with_capacity(n_a);
        for k in 0..n_a {
            let ph: Vec<Complex64> =
                (-1..=1).map(|dj: i32| Complex64::from_polar(1.0, k as f64 * dj as f64 * ds)).collect();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let mut sub = vec![Complex64::new(0.0, 0.0); rings];
            let mut diag = vec![Complex64::new(0.0, 0.0); rings];
            let mut sup = vec![Complex64::new(0.0, 0.0); rings];
            let mut sub2 = Complex64::new(0.0, 0.0);
            for i in 0..rings {
                for b in 0..3 {
                    let m2 = avg[i][0][b] * ph[b];
                    let m1 = avg[i][1][b] * ph[b];
                    let m0 = avg[i][2][b] * ph[b];
                    let p1 = avg[i][3][b] * ph[b];
                    diag[i] += m0;
                    sup[i] += p1;
                    if i == 0 {
                        diag[i] += m1 * sign;
                    } else {
                        sub[i] += m1;
                    }
                    if i == rings - 1 {
                        sub2 += m2;
                    }
                }
            }
            // remove the coupling of the last row to ring rings-2 using row rings-2
            let mut elim = Complex64::new(0.0, 0.0);
            if rings >= 3 && sub2.norm() > 0.0 {
                let r = rings - 2;
                if sub[r].norm() > 0.0 {
                    elim = sub2 / sub[r];
                    sub[rings - 1] -= elim * diag[r];
                    diag[rings - 1] -= elim * sup[r];
                }
            }
            modes.push(ModeSystem { sub, diag, sup, elim });
        }
        if sys.border.is_some() {
            // the bordered unknown pins the constant mode, so the angle-averaged
            // mode-0 block may be singular; a tiny shift keeps it factorizable
            let m0 = &mut modes[0];
            let scale = m0.diag.iter().fold(0.0f64, |a, d| a.max(d.norm()));
            for d in m0.diag.iter_mut() {
                *d -= 1e-9 * scale;
            }
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n_a);
        let inv = planner.plan_fft_inverse(n_a);
        let mut pc = FourierPreconditioner { rings, n_a, fwd, inv, modes, border: None };
        if let Some(b) = &sys.border {
            let mut colhat = vec![Complex64::new(0.0, 0.0); rings];
            let mut rowbar = vec![0.0; rings];
            for i in 0..rings {
                for j in 0..n_a {
                    colhat[i] += b.column[i * n_a + j];
                    rowbar[i] += b.row[i * n_a + j] / n_a as f64;
                }
            }
            let y_col = pc.solve_mode(0, colhat)?;
            let dot: f64 = rowbar.iter().zip(&y_col).map(|(r, y)| r * y.re).sum();
            let denom = b.corner - dot;
            pc.border = Some(ModeBorder { row: rowbar, y_col, denom });
        }
        Ok(pc)
    }

    fn solve_mode(&self, k: usize, mut rhs: Vec<Complex64>) -> Result<Vec<Complex64>> {
        let m = &self.modes[k];
        let n = self.rings;
        if n >= 3 {
            let prev = rhs[n - 2];
            rhs[n - 1] -= m.elim * prev;
        }
        // Thomas algorithm
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        let mut d = vec![Complex64::new(0.0, 0.0); n];
        let mut denom = m.diag[0];
        if denom.norm() == 0.0 {
            return Err(Error::LinearSolver { residual: f64::INFINITY, iterations: 0 });
        }
        c[0] = m.sup[0] / denom;
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = m.diag[i] - m.sub[i] * c[i - 1];
            if denom.norm() == 0.0 {
                return Err(Error::LinearSolver { residual: f64::INFINITY, iterations: 0 });
            }
            c[i] = m.sup[i] / denom;
            d[i] = (rhs[i] - m.sub[i] * d[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            let next = d[i + 1];
            d[i] -= c[i] * next;
        }
        Ok(d)
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let (rings, n_a) = (self.rings, self.n_a);
        let mut spec = vec![vec![Complex64::new(0.0, 0.0); rings]; n_a];
        let mut buf = vec![Complex64::new(0.0, 0.0); n_a];
        for i in 0..rings {
            for j in 0..n_a {
                buf[j] = Complex64::new(r[i * n_a + j], 0.0);
            }
            self.fwd.process(&mut buf);
            for k in 0..n_a {
                spec[k][i] = buf[k];
            }
        }
        let mut lam = 0.0;
        if let Some(b) = &self.border {
            // mode-0 bordered solve by block elimination
            let y = self.solve_mode(0, spec[0].clone()).unwrap_or_else(|_| spec[0].clone());
            let dot: f64 = b.row.iter().zip(&y).map(|(rw, y)| rw * y.re).sum();
            lam = if b.denom != 0.0 { (r[rings * n_a] - dot) / b.denom } else { 0.0 };
            for i in 0..rings {
                spec[0][i] = y[i] - b.y_col[i] * lam;
            }
        } else {
            spec[0] = self.solve_mode(0, spec[0].clone()).unwrap_or_else(|_| spec[0].clone());
        }
        for (k, s) in spec.iter_mut().enumerate().skip(1) {
            if let Ok(x) = self.solve_mode(k, s.clone()) {
                *s = x;
            }
        }
        for i in 0..rings {
            for k in 0..n_a {
                buf[k] = spec[k][i];
            }
            self.inv.process(&mut buf);
            for j in 0..n_a {
                z[i * n_a + j] = buf[j].re / n_a as f64;
            }
        }
        if self.border.is_some() {
            z[rings * n_a] = lam;
        }
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iterations: usize,
    /// Stop when `|b - A x| <= rel_tol |b| + abs_tol`.
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { restart: 60, max_iterations: 3000, rel_tol: 1e-11, abs_tol: 1e-14 }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Right-preconditioned restarted GMRES with modified Gram-Schmidt.
pub fn gmres(
    a: &dyn Fn(&[f64], &mut [f64]),
    m: &dyn Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    opts: &GmresOptions,
) -> Result<SolveStats> {
    let n = b.len();
    let target = opts.rel_tol * norm(b) + opts.abs_tol;
    let mut r = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut total = 0;
    let restart = opts.restart.max(1);
    let mut prev_beta = f64::INFINITY;
    loop {
        a(x, &mut tmp);
        for i in 0..n {
            r[i] = b[i] - tmp[i];
        }
        let beta = norm(&r);
        if beta <= target {
            return Ok(SolveStats { iterations: total, residual: beta });
        }
        // a whole restart cycle without progress means the residual sits at
        // its rounding floor
        if total >= opts.max_iterations || beta > 0.9 * prev_beta {
            return Err(Error::LinearSolver { residual: beta, iterations: total });
        }
        prev_beta = beta;
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
        v.push(r.iter().map(|x| x / beta).collect());
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            m(&v[k], &mut z);
            a(&z, &mut tmp);
            let mut w = tmp.clone();
            for (l, vl) in v.iter().enumerate() {
                let d: f64 = w.iter().zip(vl).map(|(a, b)| a * b).sum();
                h[l][k] = d;
                for (wi, vi) in w.iter_mut().zip(vl) {
                    *wi -= d * vi;
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for l in 0..k {
                let t = cs[l] * h[l][k] + sn[l] * h[l + 1][k];
                h[l + 1][k] = -sn[l] * h[l][k] + cs[l] * h[l + 1][k];
                h[l][k] = t;
            }
            let rr = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if rr == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / rr;
            sn[k] = h[k + 1][k] / rr;
            h[k][k] = rr;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            if g[k + 1].abs() <= target || total >= opts.max_iterations || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|x| x / hn).collect());
        }
        // back substitution and update x += M^-1 V y
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for l in i + 1..k_used {
                s -= h[i][l] * y[l];
            }
            y[i] = s / h[i][i];
        }
        let mut comb = vec![0.0; n];
        for (l, yl) in y.iter().enumerate() {
            for (c, vl) in comb.iter_mut().zip(&v[l]) {
                *c += yl * vl;
            }
        }
        m(&comb, &mut z);
        for i in 0..n {
            x[i] += z[i];
        }
        if k_used == 0 {
            a(x, &mut tmp);
            let res = norm(&b.iter().zip(&tmp).map(|(p, q)| p - q).collect::<Vec<_>>());
            return Err(Error::LinearSolver { residual: res, iterations: total });
        }
    }
}

/// Solves `sys x = b` with the Fourier preconditioner, starting from `x`.
pub fn solve(sys: &StencilSystem, b: &[f64], x: &mut [f64], opts: &GmresOptions) -> Result<SolveStats> {
    let pc = FourierPreconditioner::new(sys)?;
    gmres(&|p, q| sys.apply(p, q), &|p, q| pc.apply(p, q), b, x, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_like(rings: usize, n_a: usize, border: bool) -> StencilSystem {
        let mut s = StencilSystem::new(rings, n_a);
        for i in 1..rings {
            for j in 0..n_a {
                let w = 1.0 + 0.3 * ((j as f64) * 0.7).sin() + 0.1 * i as f64;
                s.add(i, j, 0, 0, -4.0 * w - 0.5);
                s.add(i, j, 1, 0, w);
                s.add(i, j, -1, 0, w);
                s.add(i, j, 0, 1, w + 0.05);
                s.add(i, j, 0, -1, w - 0.05);
                s.add(i, j, 1, 1, 0.02);
                s.add(i, j, -1, -1, 0.02);
            }
        }
        for j in 0..n_a {
            s.add(rings, j, 0, 0, 1.5);
            s.add(rings, j, -2, 0, -1.5);
            s.add(rings, j, -1, 1, 0.1);
            s.add(rings, j, -1, -1, -0.1);
        }
        if border {
            let nb = rings * n_a;
            let column = (0..nb).map(|r| if r < (rings - 1) * n_a { -1.0 } else { 0.0 }).collect();
            let row = (0..nb).map(|r| if r < (rings - 1) * n_a { 1.0 + (r % 3) as f64 } else { 0.0 }).collect();
            s.border = Some(Border { column, row, corner: 0.0 });
        }
        s
    }

    fn check(border: bool) {
        let sys = laplace_like(9, 16, border);
        let n = sys.dim();
        let b: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.1).collect();
        let dense = dense_solve(sys.to_dense(), b.clone()).unwrap();
        let mut x = vec![0.0; n];
        let st = solve(&sys, &b, &mut x, &GmresOptions::default()).unwrap();
        let err = x.iter().zip(&dense).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "err {err}, stats {st:?}");
        assert!(st.iterations < 60, "{st:?}");
    }

    #[test]
    fn gmres_matches_dense_solve() {
        check(false);
    }

    #[test]
    fn bordered_gmres_matches_dense_solve() {
        check(true);
    }

    #[test]
    fn preconditioner_is_exact_for_angle_independent_coefficients() {
        let mut s = StencilSystem::new(6, 8);
        for i in 1..6 {
            for j in 0..8 {
                s.add(i, j, 0, 0, -5.0);
                s.add(i, j, 1, 0, 1.0);
                s.add(i, j, -1, 0, 1.2);
                s.add(i, j, 0, 1, 0.9);
                s.add(i, j, 0, -1, 1.1);
            }
        }
        for j in 0..8 {
            s.add(6, j, 0, 0, 1.0);
            s.add(6, j, -2, 0, -1.0);
        }
        let n = s.dim();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let pc = FourierPreconditioner::new(&s).unwrap();
        let mut z = vec![0.0; n];
        pc.apply(&b, &mut z);
        let mut y = vec![0.0; n];
        s.apply(&z, &mut y);
        let err = y.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }
}
