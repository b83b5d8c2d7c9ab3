//! Browser bindings on the flat unit disk with contact angle `phi(s) = a + b cos s`:
//! translator profiles, step-by-step flow, and the speed as a function of `a`.

use wasm_bindgen::prelude::*;

use smcf_core::domain::{build_domain, DomainSpec, PhiSpec};
use smcf_core::flow::{initial_field, InitialData, Integrator, StepperConfig};
use smcf_core::metric::MetricId;
use smcf_core::operator::Problem;
use smcf_core::translator::{continuation, ContinuationSchedule};
use smcf_core::Error;

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

fn disk(a: f64, b: f64, n: usize) -> Result<Problem, Error> {
    let d = build_domain(DomainSpec::disk(1.0), MetricId::Flat)?;
    Problem::new(&d, PhiSpec::Fourier { mean: a, cos: vec![b], sin: vec![] }, n, 2 * n)
}

/// Interleaved `x, y` of the physical nodes.
fn node_xy(p: &Problem) -> Vec<f64> {
    p.grid.nodes.iter().flat_map(|n| n.x).collect()
}

#[wasm_bindgen]
pub struct Translator {
    c3: f64,
    xy: Vec<f64>,
    u: Vec<f64>,
}

#[wasm_bindgen]
impl Translator {
    pub fn c3(&self) -> f64 {
        self.c3
    }
    pub fn xy(&self) -> Vec<f64> {
        self.xy.clone()
    }
    pub fn values(&self) -> Vec<f64> {
        self.u.clone()
    }
}

/// Translating solution for `phi = a + b cos s` on an `n x 2n` grid.
#[wasm_bindgen]
pub fn translator(a: f64, b: f64, n: usize) -> Result<Translator, JsError> {
    let p = disk(a, b, n).map_err(js)?;
    let sol = continuation(&p, &ContinuationSchedule::default()).map_err(js)?;
    let nn = p.grid.n_nodes();
    Ok(Translator { c3: sol.c3, xy: node_xy(&p), u: sol.profile[..nn].to_vec() })
}

/// Speeds `c3` for `a` at `count` equally spaced values in `[0, a_max]`, with `b` fixed.
#[wasm_bindgen]
pub fn speed_curve(a_max: f64, b: f64, count: usize, n: usize) -> Result<Vec<f64>, JsError> {
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let a = if count > 1 { a_max * k as f64 / (count - 1) as f64 } else { a_max };
        let p = disk(a, b, n).map_err(js)?;
        out.push(continuation(&p, &ContinuationSchedule::default()).map_err(js)?.c3);
    }
    Ok(out)
}

/// The flow from `u0 = 0`, advanced on demand.
#[wasm_bindgen]
pub struct Flow {
    problem: Problem,
    u: Vec<f64>,
    t: f64,
    dt: f64,
    mean_speed: f64,
    sup_du2: f64,
}

#[wasm_bindgen]
impl Flow {
    #[wasm_bindgen(constructor)]
    pub fn new(a: f64, b: f64, n: usize) -> Result<Flow, JsError> {
        let problem = disk(a, b, n).map_err(js)?;
        let u = initial_field(&problem, &InitialData::default(), false).map_err(js)?;
        let dt = StepperConfig::default().initial_dt(&problem);
        Ok(Flow { problem, u, t: 0.0, dt, mean_speed: 0.0, sup_du2: 0.0 })
    }

    /// Takes `steps` semi-implicit steps, growing the step by 5% each time and
    /// halving it when the graph would leave the space-like cone.
    pub fn advance(&mut self, steps: usize) -> Result<(), JsError> {
        let cfg = StepperConfig::default();
        let delta = cfg.delta_space;
        let dt_max = 0.2;
        let integrator = Integrator::new(&self.problem, cfg).map_err(js)?;
        let g = &self.problem.grid;
        for _ in 0..steps {
            let (next, du2) = loop {
                match integrator.advance(&self.u, self.dt, None) {
                    Ok((next, du2)) if du2 <= 1.0 - delta => break (next, du2),
                    _ if self.dt > 1e-10 => self.dt *= 0.5,
                    Ok(_) => return Err(JsError::new("step size underflow")),
                    Err(e) => return Err(js(e)),
                }
            };
            let nn = g.n_nodes();
            let rate: Vec<f64> = (0..nn).map(|k| (next[k] - self.u[k]) / self.dt).collect();
            self.mean_speed = g.integrate(|i, j| rate[g.idx(i, j)]) / g.area();
            self.sup_du2 = du2;
            self.u = next;
            self.t += self.dt;
            self.dt = (self.dt * 1.05).min(dt_max);
        }
        Ok(())
    }

    pub fn time(&self) -> f64 {
        self.t
    }
    pub fn mean_speed(&self) -> f64 {
        self.mean_speed
    }
    pub fn sup_du2(&self) -> f64 {
        self.sup_du2
    }
    pub fn xy(&self) -> Vec<f64> {
        node_xy(&self.problem)
    }
    /// `u - mean u` on the physical nodes.
    pub fn values(&self) -> Vec<f64> {
        let nn = self.problem.grid.n_nodes();
        let mean = self.problem.grid.mean(&self.u);
        self.u[..nn].iter().map(|u| u - mean).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_speed_approaches_the_translator_speed() {
        let tr = translator(0.2, 0.1, 12).ok().unwrap();
        let mut f = Flow::new(0.2, 0.1, 12).ok().unwrap();
        f.advance(150).ok().unwrap();
        assert!((f.mean_speed() - tr.c3()).abs() < 1e-4, "{} vs {}", f.mean_speed(), tr.c3());
        assert_eq!(tr.xy().len(), 2 * tr.values().len());
    }

    #[test]
    fn speed_curve_starts_at_rest() {
        let c = speed_curve(0.3, 0.0, 3, 8).ok().unwrap();
        assert_eq!(c[0], 0.0);
        assert!(c[1] < 0.0 && c[2] < c[1]);
    }
}
