//! Mean curvature flow of space-like graphs with prescribed contact angle in
//! Lorentzian products `M^2 x R`: geometry kernel, discretization, flow and
//! translating-solution solvers, and numerical verification checks.

pub mod domain;
pub mod error;
pub mod flow;
pub mod graph;
pub mod grid;
pub mod linalg;
pub mod metric;
pub mod operator;
pub mod scenario;
pub mod translator;
pub mod verify;

pub use error::{Error, Result};
