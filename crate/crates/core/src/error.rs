use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown metric id `{0}`")]
    UnknownMetric(String),

    #[error("point ({x}, {y}) lies outside the chart of metric `{metric}`")]
    OutsideChart { metric: String, x: f64, y: f64 },

    #[error("metric `{0}` uses a singular chart and cannot carry a discretized domain")]
    ChartNotSupported(String),

    #[error("space-like violation at {location}: |Du|^2 = {du2}")]
    SpacelikeViolation { location: String, du2: f64 },

    #[error("domain is not strictly convex: geodesic curvature {kappa} at s = {s}")]
    NonConvex { s: f64, kappa: f64 },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("negative Gaussian curvature {k} at ({x}, {y})")]
    NegativeCurvature { k: f64, x: f64, y: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate grid Jacobian {det} at ring {ring}, angle index {angle}")]
    DegenerateJacobian { ring: usize, angle: usize, det: f64 },

    #[error("contact angle table has {got} samples, grid expects {expected}")]
    PhiTableLength { got: usize, expected: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("time step underflow (dt = {dt:e}) at t = {t}")]
    StepUnderflow { t: f64, dt: f64 },

    #[error("linear solver did not converge: residual {residual:e} after {iterations} iterations")]
    LinearSolver { residual: f64, iterations: usize },

    #[error("Newton iteration stagnated at residual {residual:e} (eps = {eps:e})")]
    NewtonStagnation { eps: f64, residual: f64 },

    #[error("Newton iteration did not converge in {iterations} iterations (eps = {eps:e}, residual {residual:e})")]
    NewtonMaxIterations { eps: f64, iterations: usize, residual: f64 },

    #[error("continuation produced a non-Cauchy speed sequence: {0}")]
    NonCauchy(String),

    #[error("flow did not converge by t = {t}: speed deviation {deviation:e}")]
    NotConverged { t: f64, deviation: f64 },

    #[error("check precondition failed: {0}")]
    CheckPrecondition(String),
}
