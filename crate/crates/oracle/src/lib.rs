//! Reference solutions computed independently of `smcf-core`: radial shooting
//! for rotationally symmetric translators on a flat disk, and pointwise
//! finite-difference evaluation of graph quantities on conformally flat charts.

pub mod pointwise;
pub mod radial;
