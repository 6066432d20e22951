//! Degenerate mobility and the sign splitting used by the upwind flux.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `χ⁺ = max(χ, 0)`, `χ⁻ = min(χ, 0)`.
#[inline]
pub fn split_sign(x: f64) -> (f64, f64) {
    (x.max(0.0), x.min(0.0))
}

/// Two-argument mobility `[(β+χ₁)⁺ (β−χ₂)⁺]^k`.
///
/// With `beta = 1` this is the upwind form of `(1−φ²)^k`; `beta < 1` gives the
/// variant that degenerates at `±beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilitySpec {
    pub k: u32,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_beta() -> f64 {
    1.0
}

impl Default for MobilitySpec {
    fn default() -> Self {
        Self { k: 1, beta: 1.0 }
    }
}

impl MobilitySpec {
    pub fn new(k: u32, beta: f64) -> Result<Self> {
        let spec = Self { k, beta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Parameter("mobility exponent k must be >= 1".into()));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::Parameter(format!(
                "mobility beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn pair(&self, chi1: f64, chi2: f64) -> f64 {
        let (a, _) = split_sign(self.beta + chi1);
        let (b, _) = split_sign(self.beta - chi2);
        (a * b).powi(self.k as i32)
    }

    /// `(M, ∂M/∂χ₁, ∂M/∂χ₂)`, with the derivative of `(·)⁺` taken as 0 at the kink.
    #[inline]
    pub fn pair_with_gradient(&self, chi1: f64, chi2: f64) -> (f64, f64, f64) {
        let a_raw = self.beta + chi1;
        let b_raw = self.beta - chi2;
        let a = a_raw.max(0.0);
        let b = b_raw.max(0.0);
        let k = self.k as i32;
        let p = a * b;
        let m = p.powi(k);
        let dm_dp = if k == 1 {
            1.0
        } else {
            k as f64 * p.powi(k - 1)
        };
        let da = if a_raw > 0.0 { 1.0 } else { 0.0 };
        let db = if b_raw > 0.0 { -1.0 } else { 0.0 };
        (m, dm_dp * da * b, dm_dp * a * db)
    }
}
