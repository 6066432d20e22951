//! Bulk free-energy densities: the logarithmic Flory–Huggins potential and
//! its polynomial double-well simplification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values with `|phi| >= LOG_DOMAIN_EDGE` are rejected by the logarithmic
/// potential instead of being clamped.
pub const LOG_DOMAIN_EDGE: f64 = 1.0 - 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialSpec {
    /// `(θ/2)[(1+φ)ln(1+φ) + (1−φ)ln(1−φ)] + (θc/2)(1−φ²)`, `0 < θ < θc`.
    #[serde(alias = "log")]
    Logarithmic { theta: f64, theta_c: f64 },
    /// `(1−φ²)²/4`.
    #[serde(alias = "pol")]
    Polynomial,
}

impl PotentialSpec {
    pub fn logarithmic(theta: f64, theta_c: f64) -> Result<Self> {
        let spec = PotentialSpec::Logarithmic { theta, theta_c };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PotentialSpec::Logarithmic { theta, theta_c } => {
                if theta.is_finite() && theta_c.is_finite() && 0.0 < theta && theta < theta_c {
                    Ok(())
                } else {
                    Err(Error::Parameter(format!(
                        "logarithmic potential needs 0 < theta < theta_c, got theta={theta}, theta_c={theta_c}"
                    )))
                }
            }
            PotentialSpec::Polynomial => Ok(()),
        }
    }

    /// Open bound on |φ| imposed by the potential's domain.
    pub fn domain_bound(&self) -> f64 {
        match self {
            PotentialSpec::Logarithmic { .. } => 1.0,
            PotentialSpec::Polynomial => f64::INFINITY,
        }
    }

    pub fn is_logarithmic(&self) -> bool {
        matches!(self, PotentialSpec::Logarithmic { .. })
    }

    #[inline]
    fn check_domain(&self, phi: f64) -> Result<()> {
        if self.is_logarithmic() && !(phi.abs() < LOG_DOMAIN_EDGE) {
            return Err(Error::Domain { phi });
        }
        Ok(())
    }

    pub fn value(&self, phi: f64) -> Result<f64> {
        self.check_domain(phi)?;
        Ok(match *self {
            PotentialSpec::Logarithmic { theta, theta_c } => {
                let mix = (1.0 + phi) * phi.ln_1p() + (1.0 - phi) * (-phi).ln_1p();
                0.5 * theta * mix + 0.5 * theta_c * (1.0 - phi * phi)
            }
            PotentialSpec::Polynomial => {
                let s = 1.0 - phi * phi;
                0.25 * s * s
            }
        })
    }

    pub fn derivative(&self, phi: f64) -> Result<f64> {
        self.check_domain(phi)?;
        Ok(match *self {
            PotentialSpec::Logarithmic { theta, theta_c } => {
                0.5 * theta * (phi.ln_1p() - (-phi).ln_1p()) - theta_c * phi
            }
            PotentialSpec::Polynomial => phi * phi * phi - phi,
        })
    }

    pub fn second_derivative(&self, phi: f64) -> Result<f64> {
        self.check_domain(phi)?;
        Ok(match *self {
            PotentialSpec::Logarithmic { theta, theta_c } => theta / (1.0 - phi * phi) - theta_c,
            PotentialSpec::Polynomial => 3.0 * phi * phi - 1.0,
        })
    }

    /// Positive minimiser β of the double well.
    ///
    /// For the logarithmic potential this bisects
    /// `(θ/2) ln((1+β)/(1−β)) − θc β` on `(0, 1)`; the bracket is halved until
    /// it can no longer shrink in floating point, which is well below the
    /// required 1e-12.
    pub fn minimum(&self) -> f64 {
        match *self {
            PotentialSpec::Polynomial => 1.0,
            PotentialSpec::Logarithmic { theta, theta_c } => {
                let g = |b: f64| 0.5 * theta * (b.ln_1p() - (-b).ln_1p()) - theta_c * b;
                // g < 0 just right of 0 (slope θ − θc < 0) and g → +∞ at 1.
                let mut lo = f64::MIN_POSITIVE;
                let mut hi = 1.0 - f64::EPSILON;
                loop {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if g(mid) > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                if g(hi).abs() < g(lo).abs() {
                    hi
                } else {
                    lo
                }
            }
        }
    }
}
