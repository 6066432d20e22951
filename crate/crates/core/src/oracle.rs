//! Brute-force reference implementations for validating the scheme code.
//!
//! Nothing here shares code with the scheme modules: the potentials, the
//! mobility, the Laplacian and the fluxes are transcribed again as plain
//! loops over cells, and the solver uses a finite-difference Jacobian with
//! an SVD least-squares step. Slow by design.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::newton::SolveStats;
use crate::params::SchemeParams;
use crate::potential::PotentialSpec;

/// Residual tolerance of [`oracle_solve`].
pub const ORACLE_TOL: f64 = 1e-14;

/// Neumaier-compensated sum.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

fn f(pot: &PotentialSpec, p: f64) -> Result<f64> {
    match *pot {
        PotentialSpec::Polynomial => Ok(0.25 * (1.0 - p * p) * (1.0 - p * p)),
        PotentialSpec::Logarithmic { theta, theta_c } => {
            if !(p > -1.0 && p < 1.0) {
                return Err(Error::Domain { phi: p });
            }
            let a = 1.0 + p;
            let b = 1.0 - p;
            Ok(0.5 * theta * (a * a.ln() + b * b.ln()) + 0.5 * theta_c * (1.0 - p * p))
        }
    }
}

fn df(pot: &PotentialSpec, p: f64) -> Result<f64> {
    match *pot {
        PotentialSpec::Polynomial => Ok(p * p * p - p),
        PotentialSpec::Logarithmic { theta, theta_c } => {
            if !(p > -1.0 && p < 1.0) {
                return Err(Error::Domain { phi: p });
            }
            Ok(0.5 * theta * ((1.0 + p) / (1.0 - p)).ln() - theta_c * p)
        }
    }
}

fn mob(params: &SchemeParams, a: f64, b: f64) -> f64 {
    let beta = params.mobility.beta;
    let pa = if beta + a > 0.0 { beta + a } else { 0.0 };
    let pb = if beta - b > 0.0 { beta - b } else { 0.0 };
    let mut m = 1.0;
    for _ in 0..params.mobility.k {
        m *= pa * pb;
    }
    m
}

fn upwind(params: &SchemeParams, v: f64, left: f64, right: f64) -> f64 {
    if v > 0.0 {
        v * mob(params, left, right)
    } else if v < 0.0 {
        v * mob(params, right, left)
    } else {
        0.0
    }
}

/// Line rows plus the SAV constraint from the chemical potential of a line.
fn line_rows(new: &[f64], old: &[f64], mu: &[f64], h: f64, params: &SchemeParams, constraint: f64) -> Vec<f64> {
    let n = new.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let right = if i + 1 < n {
            upwind(params, -(mu[i + 1] - mu[i]) / h, new[i], new[i + 1])
        } else {
            0.0
        };
        let left = if i > 0 {
            upwind(params, -(mu[i] - mu[i - 1]) / h, new[i - 1], new[i])
        } else {
            0.0
        };
        out.push(new[i] - old[i] + params.dt / h * (right - left));
    }
    out.push(constraint);
    out
}

fn sav_constraint(new: &[f64], old: &[f64], xi: f64, pot: &PotentialSpec) -> Result<f64> {
    let mut de = Vec::with_capacity(new.len());
    let mut work = Vec::with_capacity(new.len());
    for (&a, &b) in new.iter().zip(old) {
        de.push(f(pot, a)? - f(pot, b)?);
        work.push(df(pot, a)? * (a - b));
    }
    Ok(compensated_sum(&de) - xi * compensated_sum(&work))
}

/// Independent evaluation of the 1D implicit-step residual.
pub fn oracle_residual_1d(phi_new: &[f64], xi_new: f64, phi_old: &Field, params: &SchemeParams) -> Result<Vec<f64>> {
    let old = phi_old.values();
    let n = old.len();
    if phi_new.len() != n || phi_old.grid().is_2d() {
        return Err(Error::Parameter("oracle_residual_1d expects matching 1D inputs".into()));
    }
    let h = phi_old.grid().dx();
    let eps2 = params.epsilon * params.epsilon;
    let mut mu = vec![0.0; n];
    for i in 0..n {
        let lap = if i == 0 {
            (phi_new[1] - phi_new[0]) / (h * h)
        } else if i == n - 1 {
            (phi_new[n - 2] - phi_new[n - 1]) / (h * h)
        } else {
            (phi_new[i + 1] - 2.0 * phi_new[i] + phi_new[i - 1]) / (h * h)
        };
        mu[i] = -eps2 * lap + xi_new * df(&params.potential, phi_new[i])?;
    }
    let c = sav_constraint(phi_new, old, xi_new, &params.potential)?;
    Ok(line_rows(phi_new, old, &mu, h, params, c))
}

/// Which line of a 2D state an inner sweep updates (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleLine {
    Row(usize),
    Column(usize),
}

/// Independent residual of one inner sweep: `line_new` replaces the given
/// line of `state`, μ uses the full five-point Laplacian of the combined
/// field, and the constraint is summed over every cell of the domain.
pub fn oracle_sweep_residual(line_new: &[f64], xi_new: f64, state: &Field, line: OracleLine, params: &SchemeParams) -> Result<Vec<f64>> {
    let g = state.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let cells: Vec<(usize, usize)> = match line {
        OracleLine::Row(q) => (0..nx).map(|i| (i, q)).collect(),
        OracleLine::Column(p) => (0..ny).map(|j| (p, j)).collect(),
    };
    if line_new.len() != cells.len() {
        return Err(Error::Parameter("line length mismatch".into()));
    }
    let mut full = vec![vec![0.0; ny]; nx];
    for j in 0..ny {
        for i in 0..nx {
            full[i][j] = state.at(i, j);
        }
    }
    let old_full = full.clone();
    for (&(i, j), &v) in cells.iter().zip(line_new) {
        full[i][j] = v;
    }
    let (dx, dy) = (g.dx(), g.dy());
    let eps2 = params.epsilon * params.epsilon;
    let lap = |i: usize, j: usize| {
        let c = full[i][j];
        let mut s = 0.0;
        if i > 0 {
            s += (full[i - 1][j] - c) / (dx * dx);
        }
        if i + 1 < nx {
            s += (full[i + 1][j] - c) / (dx * dx);
        }
        if j > 0 {
            s += (full[i][j - 1] - c) / (dy * dy);
        }
        if j + 1 < ny {
            s += (full[i][j + 1] - c) / (dy * dy);
        }
        s
    };
    let mut mu = Vec::with_capacity(cells.len());
    for &(i, j) in &cells {
        mu.push(-eps2 * lap(i, j) + xi_new * df(&params.potential, full[i][j])?);
    }
    let old_line: Vec<f64> = cells.iter().map(|&(i, j)| old_full[i][j]).collect();
    let all_new: Vec<f64> = full.iter().flatten().copied().collect();
    let all_old: Vec<f64> = old_full.iter().flatten().copied().collect();
    let c = sav_constraint(&all_new, &all_old, xi_new, &params.potential)?;
    let h = match line {
        OracleLine::Row(_) => dx,
        OracleLine::Column(_) => dy,
    };
    Ok(line_rows(line_new, &old_line, &mu, h, params, c))
}

fn max_norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn fd_jacobian<R>(residual: &R, z: &[f64], bound: f64, r0: &[f64]) -> Result<DMatrix<f64>>
where
    R: Fn(&[f64], f64) -> Result<Vec<f64>>,
{
    let m = z.len();
    let eval = |zz: &[f64]| residual(&zz[..m - 1], zz[m - 1]);
    let mut jac = DMatrix::zeros(r0.len(), m);
    let step = 1e-7;
    for k in 0..m {
        let mut plus = z.to_vec();
        let mut minus = z.to_vec();
        let near_edge = k < m - 1 && (z[k].abs() + step >= bound);
        let col: Vec<f64> = if near_edge {
            let s = if z[k] > 0.0 { -step } else { step };
            plus[k] += s;
            let rp = eval(&plus)?;
            rp.iter().zip(r0).map(|(a, b)| (a - b) / s).collect()
        } else {
            plus[k] += step;
            minus[k] -= step;
            let rp = eval(&plus)?;
            let rm = eval(&minus)?;
            rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * step)).collect()
        };
        for (row, v) in col.into_iter().enumerate() {
            jac[(row, k)] = v;
        }
    }
    Ok(jac)
}

/// Multistart damped Newton on `residual(φ, ξ) = 0` with a finite-difference
/// Jacobian and SVD least-squares steps. Every seed must lie strictly inside
/// `bound`; the root with the smallest residual is returned.
pub fn oracle_solve<R>(residual: R, bound: f64, seeds: &[(Vec<f64>, f64)]) -> Result<(Vec<f64>, f64)>
where
    R: Fn(&[f64], f64) -> Result<Vec<f64>>,
{
    let inside = |z: &[f64]| z[..z.len() - 1].iter().all(|v| v.abs() < bound);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut best_norm = f64::INFINITY;
    for (phi, xi) in seeds {
        let mut z: Vec<f64> = phi.iter().copied().chain([*xi]).collect();
        if !inside(&z) {
            continue;
        }
        let Ok(mut r) = residual(&z[..phi.len()], z[phi.len()]) else {
            continue;
        };
        let mut norm = max_norm(&r);
        for _ in 0..200 {
            if norm <= ORACLE_TOL {
                break;
            }
            let Ok(jac) = fd_jacobian(&residual, &z, bound, &r) else {
                break;
            };
            let rhs = -DVector::from_column_slice(&r);
            let Ok(dz) = jac.svd(true, true).solve(&rhs, 1e-13) else {
                break;
            };
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = z.iter().zip(dz.iter()).map(|(a, d)| a + lambda * d).collect();
                if inside(&trial) {
                    if let Ok(rt) = residual(&trial[..phi.len()], trial[phi.len()]) {
                        let nt = max_norm(&rt);
                        if nt < norm {
                            z = trial;
                            r = rt;
                            norm = nt;
                            accepted = true;
                            break;
                        }
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if norm < best_norm {
            best_norm = norm;
            let n = phi.len();
            best = Some((z[..n].to_vec(), z[n]));
        }
    }
    match best {
        Some(sol) if best_norm <= ORACLE_TOL => Ok(sol),
        Some((phi, xi)) => Err(Error::NoConvergence {
            stats: SolveStats {
                iterations: 0,
                initial_residual: f64::NAN,
                final_residual: best_norm,
                halvings_total: 0,
                converged: false,
                constraint_defect: 0.0,
            },
            phi,
            xi,
        }),
        None => Err(Error::Parameter("no admissible oracle seed".into())),
    }
}
