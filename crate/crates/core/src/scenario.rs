//! Scenario documents: everything needed to reproduce one flow or translator run.

use serde::{Deserialize, Serialize};

use crate::domain::{build_domain, DomainSpec, PhiSpec};
use crate::error::{Error, Result};
use crate::flow::{initial_field, InitialData, StepperConfig};
use crate::metric::MetricId;
use crate::operator::Problem;
use crate::translator::ContinuationSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_radial: usize,
    pub n_angular: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub label: String,
    pub metric: MetricId,
    pub domain: DomainSpec,
    pub phi: PhiSpec,
    #[serde(default)]
    pub u0: InitialData,
    /// Correct `u0` near the boundary so it meets the contact condition.
    #[serde(default)]
    pub compatible_u0: bool,
    /// Second initial datum, integrated in lockstep with `u0`.
    #[serde(default)]
    pub reference_u0: Option<InitialData>,
    pub grid: GridSpec,
    #[serde(default)]
    pub stepper: StepperConfig,
    #[serde(default)]
    pub continuation: ContinuationSchedule,
}

/// A validated scenario: the discrete problem and its initial fields.
#[derive(Debug, Clone)]
pub struct Setup {
    pub problem: Problem,
    pub u0: Vec<f64>,
    pub reference_u0: Option<Vec<f64>>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("scenario: {e}")))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Compact serialization with every default spelled out; two scenarios
    /// describing the same run give the same string.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    pub fn with_grid(&self, n_radial: usize, n_angular: usize) -> Scenario {
        Scenario { grid: GridSpec { n_radial, n_angular }, ..self.clone() }
    }

    pub fn with_phi(&self, phi: PhiSpec) -> Scenario {
        Scenario { phi, ..self.clone() }
    }

    /// Checks convexity (`kappa0 > 0`), `K >= 0` at the nodes, the contact
    /// angle table length, the solver settings and `sup |Du0|^2 < 1`, and
    /// builds the problem.
    pub fn setup(&self) -> Result<Setup> {
        self.stepper.validate()?;
        self.continuation.validate()?;
        let domain = build_domain(self.domain, self.metric)?;
        let problem = Problem::new(&domain, self.phi.clone(), self.grid.n_radial, self.grid.n_angular)?;
        let u0 = initial_field(&problem, &self.u0, self.compatible_u0)?;
        let reference_u0 = match &self.reference_u0 {
            Some(d) => Some(initial_field(&problem, d, self.compatible_u0)?),
            None => None,
        };
        Ok(Setup { problem, u0, reference_u0 })
    }

    pub fn validate(&self) -> Result<()> {
        self.setup().map(|_| ())
    }
}
