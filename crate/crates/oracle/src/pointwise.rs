//! Pointwise graph quantities on conformally flat charts `sigma = lambda^2 I`,
//! from exact polynomial derivatives and fourth-order finite differences.

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Conformal {
    Flat,
    /// Unit sphere in stereographic coordinates, `lambda = 2 / (1 + |x|^2)`.
    Sphere,
}

impl Conformal {
    pub fn lambda(&self, x: [f64; 2]) -> f64 {
        match self {
            Conformal::Flat => 1.0,
            Conformal::Sphere => 2.0 / (1.0 + x[0] * x[0] + x[1] * x[1]),
        }
    }

    /// Gradient of `ln lambda`.
    pub fn dlog(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            Conformal::Flat => [0.0, 0.0],
            Conformal::Sphere => {
                let d = 1.0 + x[0] * x[0] + x[1] * x[1];
                [-2.0 * x[0] / d, -2.0 * x[1] / d]
            }
        }
    }

    pub fn gauss_curvature(&self) -> f64 {
        match self {
            Conformal::Flat => 0.0,
            Conformal::Sphere => 1.0,
        }
    }

    /// `Gamma^k_ij = d_i ln l delta^k_j + d_j ln l delta^k_i - d_k ln l delta_ij`
    pub fn christoffel(&self, x: [f64; 2]) -> [[[f64; 2]; 2]; 2] {
        let g = self.dlog(x);
        let mut c = [[[0.0; 2]; 2]; 2];
        for (k, ck) in c.iter_mut().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    let dkj = if k == j { 1.0 } else { 0.0 };
                    let dki = if k == i { 1.0 } else { 0.0 };
                    let dij = if i == j { 1.0 } else { 0.0 };
                    ck[i][j] = g[i] * dkj + g[j] * dki - g[k] * dij;
                }
            }
        }
        c
    }
}

/// `sum c x^p y^q`
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2 {
    pub terms: Vec<(f64, i32, i32)>,
}

impl Poly2 {
    fn mono(x: f64, p: i32, d: i32) -> f64 {
        // d-th derivative of x^p
        if d > p {
            return 0.0;
        }
        let mut c = 1.0;
        for k in 0..d {
            c *= (p - k) as f64;
        }
        c * x.powi(p - d)
    }

    pub fn partial(&self, x: [f64; 2], dx: i32, dy: i32) -> f64 {
        self.terms.iter().map(|&(c, p, q)| c * Self::mono(x[0], p, dx) * Self::mono(x[1], q, dy)).sum()
    }

    pub fn grad(&self, x: [f64; 2]) -> [f64; 2] {
        [self.partial(x, 1, 0), self.partial(x, 0, 1)]
    }

    pub fn partials2(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let xy = self.partial(x, 1, 1);
        [[self.partial(x, 2, 0), xy], [xy, self.partial(x, 0, 2)]]
    }
}

fn cov_hessian(m: Conformal, x: [f64; 2], grad: [f64; 2], partials: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let c = m.christoffel(x);
    let mut h = partials;
    for i in 0..2 {
        for j in 0..2 {
            h[i][j] -= c[0][i][j] * grad[0] + c[1][i][j] * grad[1];
        }
    }
    h
}

/// `|Du|^2 = lambda^-2 |grad u|^2`
pub fn du2(m: Conformal, u: &Poly2, x: [f64; 2]) -> f64 {
    let g = u.grad(x);
    let l = m.lambda(x);
    (g[0] * g[0] + g[1] * g[1]) / (l * l)
}

/// `g^ij D_i D_j u` from exact derivatives.
pub fn flow_speed(m: Conformal, u: &Poly2, x: [f64; 2]) -> f64 {
    let l2 = m.lambda(x).powi(2);
    let g = u.grad(x);
    let h = cov_hessian(m, x, g, u.partials2(x));
    let d2 = (g[0] * g[0] + g[1] * g[1]) / l2;
    let up = [g[0] / l2, g[1] / l2];
    let mut q = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let sij = if i == j { 1.0 / l2 } else { 0.0 };
            q += (sij + up[i] * up[j] / (1.0 - d2)) * h[i][j];
        }
    }
    q
}

fn fd1(f: &dyn Fn([f64; 2]) -> f64, x: [f64; 2], k: usize, h: f64) -> f64 {
    let at = |s: f64| {
        let mut y = x;
        y[k] += s;
        f(y)
    };
    (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
}

fn fd2(f: &dyn Fn([f64; 2]) -> f64, x: [f64; 2], a: usize, b: usize, h: f64) -> f64 {
    if a == b {
        let at = |s: f64| {
            let mut y = x;
            y[a] += s;
            f(y)
        };
        (-at(2.0 * h) + 16.0 * at(h) - 30.0 * at(0.0) + 16.0 * at(-h) - at(-2.0 * h)) / (12.0 * h * h)
    } else {
        let g = |y: [f64; 2]| fd1(f, y, b, h);
        fd1(&g, x, a, h)
    }
}

/// `d_t |Du|^2 = 2 <Du, D u_t>` for the flow `u_t = g^ij D_i D_j u`.
pub fn du2_rate(m: Conformal, u: &Poly2, x: [f64; 2]) -> f64 {
    let q = |y: [f64; 2]| flow_speed(m, u, y);
    let g = u.grad(x);
    let l2 = m.lambda(x).powi(2);
    let h = 1e-3;
    2.0 * (g[0] * fd1(&q, x, 0, h) + g[1] * fd1(&q, x, 1, h)) / l2
}

/// Inputs of the `|Du|^2` evolution identity at `x`: covariant gradient and
/// Hessian of `u`, then of `|Du|^2`.
pub struct EvoInputs {
    pub du: [f64; 2],
    pub hessian: [[f64; 2]; 2],
    pub grad_du2: [f64; 2],
    pub hessian_du2: [[f64; 2]; 2],
}

pub fn evo_inputs(m: Conformal, u: &Poly2, x: [f64; 2]) -> EvoInputs {
    let g = u.grad(x);
    let hessian = cov_hessian(m, x, g, u.partials2(x));
    let f = |y: [f64; 2]| du2(m, u, y);
    let h = 1e-3;
    let grad_du2 = [fd1(&f, x, 0, h), fd1(&f, x, 1, h)];
    let mut p = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            p[a][b] = fd2(&f, x, a, b, h);
        }
    }
    EvoInputs { du: g, hessian, grad_du2, hessian_du2: cov_hessian(m, x, grad_du2, p) }
}
