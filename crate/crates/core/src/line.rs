//! The implicit upwind-SAV update of a single grid line.
//!
//! Both the 1D scheme and each inner solve of the 2D split scheme reduce to
//! this system: `n` cells along a line with spacing `h`, no-flux faces at
//! both ends, and (in 2D) a transverse Laplacian contribution from the frozen
//! neighbouring lines.

use crate::error::Result;
use crate::linalg::{BandMatrix, Block, BorderedMatrix};
use crate::mobility::{split_sign, MobilitySpec};
use crate::newton::RowSystem;
use crate::params::SchemeParams;

/// Transverse part of the Laplacian on a line: `constant_i − coefficient_i · φ_i`.
#[derive(Debug, Clone, Default)]
pub struct Transverse {
    pub constant: Vec<f64>,
    pub coefficient: Vec<f64>,
}

/// Scratch arrays of one residual evaluation.
#[derive(Debug, Clone, Default)]
pub struct Step1DWorkspace {
    /// Chemical potential μ_i.
    pub mu: Vec<f64>,
    /// Face velocities V_{i+1/2}, interior faces only.
    pub v: Vec<f64>,
    /// Face fluxes J_{i±1/2} including both zero boundary faces.
    pub flux: Vec<f64>,
    /// Discrete Laplacian.
    pub lap: Vec<f64>,
}

impl Step1DWorkspace {
    pub fn new(n: usize) -> Self {
        Self {
            mu: vec![0.0; n],
            v: vec![0.0; n.saturating_sub(1)],
            flux: vec![0.0; n + 1],
            lap: vec![0.0; n],
        }
    }
}

/// Neumann Laplacian along a line: every existing neighbour contributes
/// `(φ_nb − φ_i)/h²`, so the end cells use the one-sided stencils.
pub fn line_laplacian(phi: &[f64], h: f64, out: &mut [f64]) {
    let n = phi.len();
    let inv = 1.0 / (h * h);
    for i in 0..n {
        let mut s = 0.0;
        if i > 0 {
            s += phi[i - 1] - phi[i];
        }
        if i + 1 < n {
            s += phi[i + 1] - phi[i];
        }
        out[i] = s * inv;
    }
}

/// `V_{i+1/2} = −(μ_{i+1} − μ_i)/h` and the upwind fluxes
/// `J = V⁺ M(φ_i, φ_{i+1}) + V⁻ M(φ_{i+1}, φ_i)`, with `J_{1/2} = J_{n+1/2} = 0`.
pub fn line_flux(mu: &[f64], phi: &[f64], h: f64, mobility: &MobilitySpec, v: &mut [f64], flux: &mut [f64]) {
    let n = phi.len();
    flux[0] = 0.0;
    flux[n] = 0.0;
    for f in 0..n - 1 {
        let vel = -(mu[f + 1] - mu[f]) / h;
        v[f] = vel;
        let (vp, vm) = split_sign(vel);
        flux[f + 1] = vp * mobility.pair(phi[f], phi[f + 1]) + vm * mobility.pair(phi[f + 1], phi[f]);
    }
}

pub struct LineSystem<'a> {
    old: &'a [f64],
    h: f64,
    transverse: Option<&'a Transverse>,
    params: &'a SchemeParams,
}

impl<'a> LineSystem<'a> {
    pub fn new(old: &'a [f64], h: f64, transverse: Option<&'a Transverse>, params: &'a SchemeParams) -> Self {
        if let Some(t) = transverse {
            debug_assert_eq!(t.constant.len(), old.len());
            debug_assert_eq!(t.coefficient.len(), old.len());
        }
        Self {
            old,
            h,
            transverse,
            params,
        }
    }

    pub fn old(&self) -> &[f64] {
        self.old
    }

    /// Fills `ws` with μ, V, J and the Laplacian at `(phi, xi)`.
    pub fn evaluate(&self, phi: &[f64], xi: f64, ws: &mut Step1DWorkspace) -> Result<()> {
        let pot = &self.params.potential;
        let eps2 = self.params.epsilon * self.params.epsilon;
        line_laplacian(phi, self.h, &mut ws.lap);
        if let Some(t) = self.transverse {
            for i in 0..phi.len() {
                ws.lap[i] += t.constant[i] - t.coefficient[i] * phi[i];
            }
        }
        for i in 0..phi.len() {
            ws.mu[i] = -eps2 * ws.lap[i] + xi * pot.derivative(phi[i])?;
        }
        line_flux(&ws.mu, phi, self.h, &self.params.mobility, &mut ws.v, &mut ws.flux);
        Ok(())
    }

    pub fn residual_with(&self, phi: &[f64], xi: f64, ws: &mut Step1DWorkspace, out: &mut [f64]) -> Result<()> {
        let n = self.old.len();
        self.evaluate(phi, xi, ws)?;
        let c = self.params.dt / self.h;
        for i in 0..n {
            out[i] = phi[i] - self.old[i] + c * (ws.flux[i + 1] - ws.flux[i]);
        }
        out[n] = self.constraint(phi, xi)?;
        Ok(())
    }

    /// `Σ [F(φ_i) − F(φ_i^old)] − ξ Σ F′(φ_i)(φ_i − φ_i^old)`.
    pub fn constraint(&self, phi: &[f64], xi: f64) -> Result<f64> {
        let pot = &self.params.potential;
        let mut d_energy = 0.0;
        let mut work = 0.0;
        for (p, o) in phi.iter().zip(self.old) {
            d_energy += pot.value(*p)? - pot.value(*o)?;
            work += pot.derivative(*p)? * (p - o);
        }
        Ok(d_energy - xi * work)
    }
}

impl RowSystem for LineSystem<'_> {
    fn len(&self) -> usize {
        self.old.len()
    }

    fn bound(&self) -> f64 {
        self.params.bound()
    }

    fn residual(&self, phi: &[f64], xi: f64, out: &mut [f64]) -> Result<()> {
        let mut ws = Step1DWorkspace::new(self.old.len());
        self.residual_with(phi, xi, &mut ws, out)
    }

    fn jacobian(&self, phi: &[f64], xi: f64) -> Result<BorderedMatrix> {
        let n = self.old.len();
        let pot = &self.params.potential;
        let mob = &self.params.mobility;
        let eps2 = self.params.epsilon * self.params.epsilon;
        let h = self.h;
        let inv_h2 = 1.0 / (h * h);
        let c = self.params.dt / h;

        let mut ws = Step1DWorkspace::new(n);
        self.evaluate(phi, xi, &mut ws)?;

        let mut fp = vec![0.0; n];
        let mut fpp = vec![0.0; n];
        for i in 0..n {
            fp[i] = pot.derivative(phi[i])?;
            fpp[i] = pot.second_derivative(phi[i])?;
        }

        // ∂μ_i/∂φ_{i-1}, ∂μ_i/∂φ_i, ∂μ_i/∂φ_{i+1}
        let off = -eps2 * inv_h2;
        let dmu_diag: Vec<f64> = (0..n)
            .map(|i| {
                let neighbours = (i > 0) as u8 + (i + 1 < n) as u8;
                let transverse = self.transverse.map_or(0.0, |t| t.coefficient[i]);
                eps2 * (neighbours as f64 * inv_h2 + transverse) + xi * fpp[i]
            })
            .collect();
        let dmu = |row: usize, col: isize| -> f64 {
            if col < 0 || col as usize >= n {
                return 0.0;
            }
            let col = col as usize;
            if col == row {
                dmu_diag[row]
            } else if col + 1 == row || col == row + 1 {
                off
            } else {
                0.0
            }
        };

        let mut block = BandMatrix::zeros(n, 2, 2);
        let mut col = vec![0.0; n];
        for i in 0..n {
            block.add(i, i, 1.0);
        }
        for f in 0..n - 1 {
            let (l, r) = (f, f + 1);
            let vel = ws.v[f];
            let (vp, vm) = split_sign(vel);
            let (m_up, dup_l, dup_r) = mob.pair_with_gradient(phi[l], phi[r]);
            let (m_dn, ddn_r, ddn_l) = mob.pair_with_gradient(phi[r], phi[l]);
            let cv = if vel > 0.0 { m_up } else { 0.0 } + if vel < 0.0 { m_dn } else { 0.0 };
            for j in (l as isize - 1)..=(r as isize + 1) {
                if j < 0 || j as usize >= n {
                    continue;
                }
                let dv = -(dmu(r, j) - dmu(l, j)) / h;
                let mut dj = cv * dv;
                if j as usize == l {
                    dj += vp * dup_l + vm * ddn_l;
                } else if j as usize == r {
                    dj += vp * dup_r + vm * ddn_r;
                }
                if dj != 0.0 {
                    block.add(l, j as usize, c * dj);
                    block.add(r, j as usize, -c * dj);
                }
            }
            let dj_dxi = cv * (-(fp[r] - fp[l]) / h);
            col[l] += c * dj_dxi;
            col[r] -= c * dj_dxi;
        }

        let mut row = vec![0.0; n];
        let mut corner = 0.0;
        for i in 0..n {
            let d = phi[i] - self.old[i];
            row[i] = fp[i] - xi * (fpp[i] * d + fp[i]);
            corner -= fp[i] * d;
        }
        Ok(BorderedMatrix {
            block: Block::Banded(block),
            col,
            row,
            corner,
        })
    }

    fn constrains_xi(&self, phi: &[f64]) -> bool {
        phi != self.old
    }
}
