//! Dimensional splitting in two dimensions.
//!
//! One outer step first solves every row along x (row `q` implicit, all
//! other rows frozen), then every column along y, each as an implicit
//! upwind-SAV line update with its own multiplier. The new multiplier is
//! the plain average of the `N_y + N_x` inner ones. Sweeps are strictly
//! sequential: row `q` sees row `q − 1` already updated and row `q + 1` not
//! yet updated.

use crate::diagnostics::discrete_energy;
use crate::error::{Error, Result, Sweep};
use crate::grid::Field;
use crate::line::{LineSystem, Transverse};
use crate::newton::{solve_row, SolveStats};
use crate::params::SchemeParams;
use crate::scheme1d::{certify_bound, certify_energy, certify_mass, cert_tolerance, StepResult, StepStats};

fn require_2d(field: &Field) -> Result<()> {
    if !field.grid().is_2d() {
        return Err(Error::Parameter("expected a 2D field".into()));
    }
    Ok(())
}

/// Five-point Laplacian; edge and corner cells drop the missing neighbours
/// (homogeneous Neumann).
pub fn laplacian_2d(field: &Field) -> Vec<f64> {
    let g = field.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let (ix2, iy2) = (1.0 / (g.dx() * g.dx()), 1.0 / (g.dy() * g.dy()));
    let mut out = vec![0.0; g.len()];
    for j in 0..ny {
        for i in 0..nx {
            let c = field.at(i, j);
            let mut sx = 0.0;
            let mut sy = 0.0;
            if i > 0 {
                sx += field.at(i - 1, j) - c;
            }
            if i + 1 < nx {
                sx += field.at(i + 1, j) - c;
            }
            if j > 0 {
                sy += field.at(i, j - 1) - c;
            }
            if j + 1 < ny {
                sy += field.at(i, j + 1) - c;
            }
            out[g.index(i, j)] = sx * ix2 + sy * iy2;
        }
    }
    out
}

/// Working state of one split step.
#[derive(Debug, Clone)]
pub struct SplitState {
    /// Current state, updated in place line by line.
    pub phi: Field,
    /// ξ̃ per row sweep, in sweep order.
    pub xi_tilde: Vec<f64>,
    /// ξ̂ per column sweep, in sweep order.
    pub xi_hat: Vec<f64>,
    /// Discrete energy before any sweep followed by the value after each sweep.
    pub sweep_energies: Option<Vec<f64>>,
}

impl SplitState {
    pub fn new(phi: Field, params: &SchemeParams, record_energies: bool) -> Result<Self> {
        require_2d(&phi)?;
        let sweep_energies = if record_energies {
            Some(vec![discrete_energy(&phi, params)?])
        } else {
            None
        };
        Ok(Self {
            phi,
            xi_tilde: Vec::new(),
            xi_hat: Vec::new(),
            sweep_energies,
        })
    }
}

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

/// Cell indices of line `k` along `axis`.
fn line_cells(field: &Field, axis: Axis, k: usize) -> Vec<usize> {
    let g = field.grid();
    match axis {
        Axis::X => (0..g.nx()).map(|i| g.index(i, k)).collect(),
        Axis::Y => (0..g.ny()).map(|j| g.index(k, j)).collect(),
    }
}

/// Frozen-neighbour part of the Laplacian for line `k`.
fn transverse(field: &Field, axis: Axis, k: usize) -> Transverse {
    let g = field.grid();
    let (count, h) = match axis {
        Axis::X => (g.ny(), g.dy()),
        Axis::Y => (g.nx(), g.dx()),
    };
    let inv = 1.0 / (h * h);
    let at = |line: usize, s: usize| match axis {
        Axis::X => field.at(s, line),
        Axis::Y => field.at(line, s),
    };
    let n = match axis {
        Axis::X => g.nx(),
        Axis::Y => g.ny(),
    };
    let mut t = Transverse {
        constant: vec![0.0; n],
        coefficient: vec![0.0; n],
    };
    for s in 0..n {
        if k > 0 {
            t.constant[s] += at(k - 1, s) * inv;
            t.coefficient[s] += inv;
        }
        if k + 1 < count {
            t.constant[s] += at(k + 1, s) * inv;
            t.coefficient[s] += inv;
        }
    }
    t
}

/// Energy terms that involve line `k`: its bulk potential, the gradients
/// along it and the gradients to the adjacent lines. Only these change when
/// line `k` is updated.
fn line_energy(field: &Field, axis: Axis, k: usize, params: &SchemeParams) -> Result<f64> {
    let g = field.grid();
    let half_eps2 = 0.5 * params.epsilon * params.epsilon;
    let (h_along, h_across, n, count) = match axis {
        Axis::X => (g.dx(), g.dy(), g.nx(), g.ny()),
        Axis::Y => (g.dy(), g.dx(), g.ny(), g.nx()),
    };
    let at = |line: usize, s: usize| match axis {
        Axis::X => field.at(s, line),
        Axis::Y => field.at(line, s),
    };
    let mut grad = 0.0;
    let mut bulk = 0.0;
    for s in 0..n {
        let c = at(k, s);
        bulk += params.potential.value(c)?;
        if s + 1 < n {
            let d = (at(k, s + 1) - c) / h_along;
            grad += d * d;
        }
        if k > 0 {
            let d = (c - at(k - 1, s)) / h_across;
            grad += d * d;
        }
        if k + 1 < count {
            let d = (at(k + 1, s) - c) / h_across;
            grad += d * d;
        }
    }
    Ok(g.cell_measure() * (half_eps2 * grad + bulk))
}

fn sweep(state: &mut SplitState, axis: Axis, k: usize, xi_prev: f64, params: &SchemeParams) -> Result<(f64, SolveStats)> {
    let g = *state.phi.grid();
    let (count, h) = match axis {
        Axis::X => (g.ny(), g.dx()),
        Axis::Y => (g.nx(), g.dy()),
    };
    if k >= count {
        return Err(Error::Parameter(format!("line index {k} out of range 0..{count}")));
    }
    let cells = line_cells(&state.phi, axis, k);
    let old: Vec<f64> = cells.iter().map(|&c| state.phi.values()[c]).collect();
    let trans = transverse(&state.phi, axis, k);
    let energy_before = match state.sweep_energies {
        Some(_) => Some(line_energy(&state.phi, axis, k, params)?),
        None => None,
    };

    let sys = LineSystem::new(&old, h, Some(&trans), params);
    let sol = solve_row(&sys, &old, xi_prev, &params.newton)?;

    let values = state.phi.values_mut();
    for (&c, &v) in cells.iter().zip(&sol.phi) {
        values[c] = v;
    }
    if !sol.phi.iter().all(|&v| params.within_certified_bound(v)) {
        certify_bound(&state.phi, params)?;
    }
    if let (Some(before), Some(trace)) = (energy_before, state.sweep_energies.as_mut()) {
        let after = line_energy(&state.phi, axis, k, params)?;
        let prev = *trace.last().expect("trace starts with the initial energy");
        let next = prev + (after - before);
        if params.per_sweep_energy {
            certify_energy(prev, next, cert_tolerance(g.len(), params))?;
        }
        trace.push(next);
    }
    match axis {
        Axis::X => state.xi_tilde.push(sol.xi),
        Axis::Y => state.xi_hat.push(sol.xi),
    }
    Ok((sol.xi, sol.stats))
}

/// Implicit x-direction update of row `q` (0-based). Other rows are frozen
/// and enter the chemical potential through the full 2D Laplacian.
pub fn sweep_x(state: &mut SplitState, q: usize, xi_prev: f64, params: &SchemeParams) -> Result<(f64, SolveStats)> {
    sweep(state, Axis::X, q, xi_prev, params).map_err(|e| e.in_sweep(Sweep::X(q + 1)))
}

/// Implicit y-direction update of column `p` (0-based).
pub fn sweep_y(state: &mut SplitState, p: usize, xi_prev: f64, params: &SchemeParams) -> Result<(f64, SolveStats)> {
    sweep(state, Axis::Y, p, xi_prev, params).map_err(|e| e.in_sweep(Sweep::Y(p + 1)))
}

/// One outer step: all rows along x in order, then all columns along y;
/// certifies boundedness, conservation of the double sum and energy decay.
pub fn step_2d(phi_old: &Field, xi_old: f64, params: &SchemeParams) -> Result<StepResult> {
    require_2d(phi_old)?;
    if !phi_old.is_admissible(params.bound()) {
        return Err(Error::Parameter(format!(
            "initial state leaves the open bound {}",
            params.bound()
        )));
    }
    let g = *phi_old.grid();
    let mut state = SplitState::new(phi_old.clone(), params, params.per_sweep_energy)?;
    let mut stats = StepStats::default();
    let mut xi = xi_old;
    for q in 0..g.ny() {
        let (x, s) = sweep_x(&mut state, q, xi, params)?;
        stats.absorb(&s);
        xi = x;
    }
    for p in 0..g.nx() {
        let (x, s) = sweep_y(&mut state, p, xi, params)?;
        stats.absorb(&s);
        xi = x;
    }
    let inner: Vec<f64> = state.xi_tilde.iter().chain(&state.xi_hat).copied().collect();
    let xi_new = inner.iter().sum::<f64>() / inner.len() as f64;

    let tol = cert_tolerance(g.len(), params);
    certify_bound(&state.phi, params)?;
    certify_mass(phi_old, &state.phi, tol)?;
    certify_energy(discrete_energy(phi_old, params)?, discrete_energy(&state.phi, params)?, tol)?;

    Ok(StepResult {
        field: state.phi,
        xi: xi_new,
        stats,
        sweep_energies: state.sweep_energies,
        xi_inner: inner,
    })
}
