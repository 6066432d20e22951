use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mobility::MobilitySpec;
use crate::newton::NewtonParams;
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    /// Interface thickness ε.
    pub epsilon: f64,
    pub dt: f64,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub mobility: MobilitySpec,
    #[serde(default)]
    pub newton: NewtonParams,
    /// Certify energy after every inner line solve of a split step, not only
    /// at the end of the outer step.
    #[serde(default = "yes")]
    pub per_sweep_energy: bool,
}

fn yes() -> bool {
    true
}

impl SchemeParams {
    pub fn new(epsilon: f64, dt: f64, potential: PotentialSpec) -> Result<Self> {
        let p = Self {
            epsilon,
            dt,
            potential,
            mobility: MobilitySpec::default(),
            newton: NewtonParams::default(),
            per_sweep_energy: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_mobility(mut self, mobility: MobilitySpec) -> Self {
        self.mobility = mobility;
        self
    }

    pub fn with_newton(mut self, newton: NewtonParams) -> Self {
        self.newton = newton;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Parameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Parameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        self.potential.validate()?;
        self.mobility.validate()?;
        self.newton.validate()
    }

    /// Open bound every iterate and every accepted state must respect.
    pub fn bound(&self) -> f64 {
        self.mobility.beta.min(self.potential.domain_bound())
    }

    /// Bound certificate: strict `|φ| < 1` for `beta = 1`, closed `|φ| <= beta` otherwise.
    pub fn within_certified_bound(&self, phi: f64) -> bool {
        let beta = self.mobility.beta;
        if beta >= 1.0 {
            phi.abs() < 1.0
        } else {
            phi.abs() <= beta
        }
    }
}
