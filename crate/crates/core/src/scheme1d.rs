//! Fully implicit upwind-SAV step in one dimension.

use crate::diagnostics::discrete_energy;
use crate::error::{Certificate, Error, Result};
use crate::grid::Field;
use crate::line::{line_flux, line_laplacian, LineSystem, Step1DWorkspace};
use crate::newton::{solve_row, SolveStats};
use crate::params::SchemeParams;

fn require_1d(field: &Field) -> Result<()> {
    if field.grid().is_2d() {
        return Err(Error::Parameter("expected a 1D field".into()));
    }
    Ok(())
}

/// Interior `(φ_{i+1} − 2φ_i + φ_{i−1})/Δx²`, one-sided at both ends.
pub fn laplacian_1d(field: &Field) -> Vec<f64> {
    let mut out = vec![0.0; field.values().len()];
    line_laplacian(field.values(), field.grid().dx(), &mut out);
    out
}

/// `μ_i = −ε² (Δφ)_i + ξ F′(φ_i)`.
pub fn chemical_potential(field: &Field, xi: f64, params: &SchemeParams) -> Result<Vec<f64>> {
    require_1d(field)?;
    let eps2 = params.epsilon * params.epsilon;
    laplacian_1d(field)
        .into_iter()
        .zip(field.values())
        .map(|(lap, &phi)| Ok(-eps2 * lap + xi * params.potential.derivative(phi)?))
        .collect()
}

/// Face velocities (interior faces) and upwind fluxes (all `N_x + 1` faces).
pub fn upwind_flux(mu: &[f64], field: &Field, params: &SchemeParams) -> (Vec<f64>, Vec<f64>) {
    let n = field.values().len();
    let mut v = vec![0.0; n - 1];
    let mut flux = vec![0.0; n + 1];
    line_flux(mu, field.values(), field.grid().dx(), &params.mobility, &mut v, &mut flux);
    (v, flux)
}

/// The `N_x + 1` residual components of the implicit step at `(phi_new, xi_new)`.
pub fn residual_1d(phi_new: &[f64], xi_new: f64, phi_old: &Field, params: &SchemeParams) -> Result<Vec<f64>> {
    require_1d(phi_old)?;
    let n = phi_old.values().len();
    if phi_new.len() != n {
        return Err(Error::Parameter("phi_new length mismatch".into()));
    }
    let sys = LineSystem::new(phi_old.values(), phi_old.grid().dx(), None, params);
    let mut ws = Step1DWorkspace::new(n);
    let mut out = vec![0.0; n + 1];
    sys.residual_with(phi_new, xi_new, &mut ws, &mut out)?;
    Ok(out)
}

/// `(Σ J_{i+1/2} V_{i+1/2}, Σ min(M(φ_i,φ_{i+1}), M(φ_{i+1},φ_i)) V²)`.
///
/// The upwind choice guarantees the first is at least the second, and the
/// second is non-negative; this is the dissipation of one implicit step.
pub fn upwind_dissipation(phi: &[f64], v: &[f64], flux: &[f64], params: &SchemeParams) -> (f64, f64) {
    let mut jv = 0.0;
    let mut bound = 0.0;
    for f in 0..v.len() {
        jv += flux[f + 1] * v[f];
        let m = params
            .mobility
            .pair(phi[f], phi[f + 1])
            .min(params.mobility.pair(phi[f + 1], phi[f]));
        bound += m * v[f] * v[f];
    }
    (jv, bound)
}

/// Aggregated solver statistics of one outer step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub solves: usize,
    pub newton_iterations: usize,
    pub max_iterations: usize,
    pub halvings: usize,
    pub max_final_residual: f64,
    /// Line solves accepted without meeting the residual tolerance, either at
    /// the multiplier of least constraint violation or at the resolution
    /// limit of f64.
    pub relaxed_solves: usize,
    pub max_constraint_defect: f64,
}

impl StepStats {
    pub fn absorb(&mut self, s: &SolveStats) {
        self.solves += 1;
        self.newton_iterations += s.iterations;
        self.max_iterations = self.max_iterations.max(s.iterations);
        self.halvings += s.halvings_total;
        self.max_final_residual = self.max_final_residual.max(s.final_residual);
        if !s.converged {
            self.relaxed_solves += 1;
        }
        self.max_constraint_defect = self.max_constraint_defect.max(s.constraint_defect);
    }
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub field: Field,
    pub xi: f64,
    pub stats: StepStats,
    /// Discrete energy after each inner line solve (2D only, when enabled).
    pub sweep_energies: Option<Vec<f64>>,
    /// Inner multipliers: ξ̃ per row sweep then ξ̂ per column sweep (2D only).
    pub xi_inner: Vec<f64>,
}

/// Certificate slack: `10 · N · tol_residual`.
pub fn cert_tolerance(cells: usize, params: &SchemeParams) -> f64 {
    10.0 * cells as f64 * params.newton.tol_residual
}

pub(crate) fn certify_bound(field: &Field, params: &SchemeParams) -> Result<()> {
    let worst = field.max_abs();
    if field.values().iter().all(|&v| params.within_certified_bound(v)) {
        Ok(())
    } else {
        Err(Error::CertificateViolation {
            which: Certificate::Bound,
            magnitude: worst,
        })
    }
}

pub(crate) fn certify_mass(old: &Field, new: &Field, tol: f64) -> Result<()> {
    let drift = (new.values().iter().sum::<f64>() - old.values().iter().sum::<f64>()).abs();
    if drift <= tol {
        Ok(())
    } else {
        Err(Error::CertificateViolation {
            which: Certificate::Mass,
            magnitude: drift,
        })
    }
}

pub(crate) fn certify_energy(e_old: f64, e_new: f64, tol: f64) -> Result<()> {
    if e_new <= e_old + tol {
        Ok(())
    } else {
        Err(Error::CertificateViolation {
            which: Certificate::Energy,
            magnitude: e_new - e_old,
        })
    }
}

/// Advances a 1D field by one implicit step and certifies boundedness, mass
/// conservation and energy decay of the result.
pub fn step_1d(phi_old: &Field, xi_old: f64, params: &SchemeParams) -> Result<StepResult> {
    require_1d(phi_old)?;
    if !phi_old.is_admissible(params.bound()) {
        return Err(Error::Parameter(format!(
            "initial state leaves the open bound {}",
            params.bound()
        )));
    }
    let sys = LineSystem::new(phi_old.values(), phi_old.grid().dx(), None, params);
    let sol = solve_row(&sys, phi_old.values(), xi_old, &params.newton)?;
    let new = Field::new(*phi_old.grid(), sol.phi)?;

    let tol = cert_tolerance(new.values().len(), params);
    certify_bound(&new, params)?;
    certify_mass(phi_old, &new, tol)?;
    certify_energy(discrete_energy(phi_old, params)?, discrete_energy(&new, params)?, tol)?;

    let mut stats = StepStats::default();
    stats.absorb(&sol.stats);
    Ok(StepResult {
        field: new,
        xi: sol.xi,
        stats,
        sweep_energies: None,
        xi_inner: Vec::new(),
    })
}
