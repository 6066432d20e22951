//! Damped semismooth Newton iteration for one implicit line update.
//!
//! The unknowns are the `n` cell averages of a line plus the scalar
//! multiplier ξ. Every accepted iterate stays strictly inside the bound
//! interval of the system; steps are halved until that holds and the
//! residual max-norm decreases.
//!
//! When the coupled iteration fails, [`solve_row`] falls back to a search
//! over the multiplier alone: for fixed ξ the line equations are solved by
//! Newton, which leaves the scalar constraint `g(ξ)` to bracket and bisect.
//! The root nearest the starting ξ is taken and polished by the coupled
//! iteration.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Block, BorderedMatrix, BorderedStep};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonParams {
    /// Absolute tolerance on the residual max-norm.
    pub tol_residual: f64,
    pub max_iter: usize,
    pub damping_max_halvings: usize,
    /// Use a centred finite-difference Jacobian instead of the analytic one.
    pub fd_jacobian: bool,
    /// Fall back to the bracketing search over ξ when Newton fails.
    pub multiplier_search: bool,
    /// When the constraint has no root near the starting ξ, accept the line
    /// solution at the ξ of least violation instead of failing.
    pub least_violation: bool,
    /// Among several roots prefer the one nearest ξ = 1: a root further than
    /// `UNIT_REANCHOR` from 1 triggers a second solve started at ξ = 1.
    pub prefer_unit_xi: bool,
}

impl Default for NewtonParams {
    fn default() -> Self {
        Self {
            tol_residual: 1e-12,
            max_iter: 50,
            damping_max_halvings: 30,
            fd_jacobian: false,
            multiplier_search: true,
            least_violation: true,
            prefer_unit_xi: true,
        }
    }
}

impl NewtonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) {
            return Err(Error::Parameter("tol_residual must be positive".into()));
        }
        if self.max_iter < 1 {
            return Err(Error::Parameter("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// A nonlinear system in `(φ_1..φ_n, ξ)` with `n + 1` residual components.
pub trait RowSystem {
    /// Number of line unknowns `n`.
    fn len(&self) -> usize;

    /// Open bound `b`: iterates must satisfy `|φ_i| < b`.
    fn bound(&self) -> f64;

    /// Writes the `n + 1` residual components into `out`.
    fn residual(&self, phi: &[f64], xi: f64, out: &mut [f64]) -> Result<()>;

    fn jacobian(&self, phi: &[f64], xi: f64) -> Result<BorderedMatrix>;

    /// Whether the last residual row constrains ξ at `phi`. Systems whose
    /// constraint degenerates to `0 = ξ·0` at some states return false there,
    /// and the solver holds ξ fixed for that step.
    fn constrains_xi(&self, _phi: &[f64]) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub initial_residual: f64,
    pub final_residual: f64,
    pub halvings_total: usize,
    /// Residual tolerance met on every row. Solutions returned without it
    /// either sit at the resolution limit of f64 or carry a constraint defect.
    pub converged: bool,
    /// |constraint residual| of a least-violation solution, 0 otherwise.
    pub constraint_defect: f64,
}

#[derive(Debug, Clone)]
pub struct RowSolution {
    pub phi: Vec<f64>,
    pub xi: f64,
    pub stats: SolveStats,
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| {
        if x.is_nan() {
            f64::NAN
        } else {
            m.max(x.abs())
        }
    })
}

fn inside(phi: &[f64], bound: f64) -> bool {
    phi.iter().all(|v| v.abs() < bound)
}

/// Residual max-norm at `(phi, xi)`, or `None` when it cannot be evaluated.
fn residual_norm<S: RowSystem + ?Sized>(sys: &S, phi: &[f64], xi: f64, buf: &mut [f64]) -> Option<f64> {
    sys.residual(phi, xi, buf).ok()?;
    let n = max_abs(buf);
    n.is_finite().then_some(n)
}

/// Solves `sys` from `(phi_init, xi_init)` to residual max-norm
/// `tol_residual`, keeping every iterate strictly inside the bound.
pub fn solve_row<S: RowSystem + ?Sized>(
    sys: &S,
    phi_init: &[f64],
    xi_init: f64,
    params: &NewtonParams,
) -> Result<RowSolution> {
    let sol = solve_from(sys, phi_init, xi_init, params)?;
    if !(params.prefer_unit_xi && sol.stats.converged && (sol.xi - 1.0).abs() > UNIT_REANCHOR) {
        return Ok(sol);
    }
    match solve_from(sys, phi_init, 1.0, params) {
        Ok(mut alt) if alt.stats.converged && (alt.xi - 1.0).abs() < (sol.xi - 1.0).abs() => {
            alt.stats.iterations += sol.stats.iterations;
            alt.stats.halvings_total += sol.stats.halvings_total;
            Ok(alt)
        }
        _ => Ok(sol),
    }
}

/// Distance from ξ = 1 beyond which [`solve_row`] looks for a nearer root.
pub const UNIT_REANCHOR: f64 = 0.25;

fn solve_from<S: RowSystem + ?Sized>(
    sys: &S,
    phi_init: &[f64],
    xi_init: f64,
    params: &NewtonParams,
) -> Result<RowSolution> {
    match newton(sys, phi_init, xi_init, params) {
        Err(Error::NoConvergence { stats, phi, xi }) if params.multiplier_search => {
            multiplier_search(sys, phi_init, xi_init, params, stats).map_err(|e| match e {
                Error::NoConvergence { .. } => Error::NoConvergence { stats, phi, xi },
                other => other,
            })
        }
        Err(Error::SingularJacobian) if params.multiplier_search => {
            multiplier_search(sys, phi_init, xi_init, params, SolveStats::default()).map_err(|e| match e {
                Error::NoConvergence { .. } => Error::SingularJacobian,
                other => other,
            })
        }
        other => other,
    }
}

fn newton<S: RowSystem + ?Sized>(
    sys: &S,
    phi_init: &[f64],
    xi_init: f64,
    params: &NewtonParams,
) -> Result<RowSolution> {
    let n = sys.len();
    if phi_init.len() != n {
        return Err(Error::Parameter(format!(
            "initial guess has {} entries, system has {n}",
            phi_init.len()
        )));
    }
    let bound = sys.bound();
    if !inside(phi_init, bound) {
        return Err(Error::Parameter(format!(
            "initial guess leaves the open bound {bound}"
        )));
    }

    let mut phi = phi_init.to_vec();
    let mut xi = xi_init;
    let mut r = vec![0.0; n + 1];
    sys.residual(&phi, xi, &mut r)?;
    let mut norm = max_abs(&r);
    if !norm.is_finite() {
        return Err(Error::Parameter("initial residual is not finite".into()));
    }
    let mut stats = SolveStats {
        initial_residual: norm,
        final_residual: norm,
        ..SolveStats::default()
    };

    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; n + 1];
    let mut best: Vec<f64> = vec![0.0; n];
    let mut stalled = 0;

    loop {
        if norm <= params.tol_residual {
            stats.final_residual = norm;
            stats.converged = true;
            return Ok(RowSolution { phi, xi, stats });
        }
        if stats.iterations >= params.max_iter {
            stats.final_residual = norm;
            return Err(Error::NoConvergence { stats, phi, xi });
        }

        let jac = if params.fd_jacobian {
            jacobian_fd(sys, &phi, xi, FD_STEP)?
        } else {
            sys.jacobian(&phi, xi)?
        };
        let freeze = !sys.constrains_xi(&phi);
        let step = jac
            .solve_newton(&r[..n], r[n], freeze)
            .ok_or(Error::SingularJacobian)?;
        if norm <= RESOLUTION_SLACK * params.tol_residual && below_resolution(&phi, xi, &step) {
            // no representable iterate is closer; reported as not converged
            stats.final_residual = norm;
            return Ok(RowSolution { phi, xi, stats });
        }

        let mut alpha = 1.0;
        let mut accepted = false;
        let mut best_norm = f64::INFINITY;
        let mut best_xi = xi;
        for halving in 0..=params.damping_max_halvings {
            if halving > 0 {
                alpha *= 0.5;
                stats.halvings_total += 1;
            }
            for i in 0..n {
                trial[i] = phi[i] + alpha * step.dphi[i];
            }
            let xi_t = xi + alpha * step.dxi;
            if !inside(&trial, bound) {
                continue;
            }
            let Some(nt) = residual_norm(sys, &trial, xi_t, &mut r_trial) else {
                continue;
            };
            if nt < norm {
                phi.copy_from_slice(&trial);
                xi = xi_t;
                r.copy_from_slice(&r_trial);
                norm = nt;
                accepted = true;
                stalled = 0;
                break;
            }
            if nt < best_norm {
                best_norm = nt;
                best.copy_from_slice(&trial);
                best_xi = xi_t;
            }
        }
        if !accepted {
            stalled += 1;
            if !best_norm.is_finite() || (params.multiplier_search && stalled >= STALL_LIMIT) {
                stats.final_residual = norm;
                return Err(Error::NoConvergence { stats, phi, xi });
            }
            phi.copy_from_slice(&best);
            xi = best_xi;
            sys.residual(&phi, xi, &mut r)?;
            norm = best_norm;
        }
        stats.iterations += 1;
        debug_assert!(inside(&phi, bound));
    }
}

/// Largest residual, in multiples of `tol_residual`, that is accepted when
/// the Newton correction is below the spacing of f64 values. Close to the
/// mobility's degeneracy a single ulp of φ can move a row by more than the
/// tolerance.
pub const RESOLUTION_SLACK: f64 = 1e3;
const RESOLUTION_ULPS: f64 = 4.0;

fn below_resolution(phi: &[f64], xi: f64, step: &BorderedStep) -> bool {
    let tiny = |d: f64, v: f64| d.abs() <= RESOLUTION_ULPS * f64::EPSILON * v.abs().max(1.0);
    tiny(step.dxi, xi) && step.dphi.iter().zip(phi).all(|(&d, &v)| tiny(d, v))
}

/// The line equations of `inner` with ξ pinned to `xi0`.
struct PinnedMultiplier<'a, S: ?Sized> {
    inner: &'a S,
    xi0: f64,
}

impl<S: RowSystem + ?Sized> RowSystem for PinnedMultiplier<'_, S> {
    fn len(&self) -> usize {
        self.inner.len()
    }

    fn bound(&self) -> f64 {
        self.inner.bound()
    }

    fn residual(&self, phi: &[f64], xi: f64, out: &mut [f64]) -> Result<()> {
        self.inner.residual(phi, xi, out)?;
        out[self.inner.len()] = xi - self.xi0;
        Ok(())
    }

    fn jacobian(&self, phi: &[f64], xi: f64) -> Result<BorderedMatrix> {
        let mut jac = self.inner.jacobian(phi, xi)?;
        jac.row.iter_mut().for_each(|v| *v = 0.0);
        jac.corner = 1.0;
        Ok(jac)
    }
}

/// Consecutive rejected damping sequences after which the coupled iteration
/// hands over to the multiplier search.
const STALL_LIMIT: usize = 3;

/// Largest distance from the starting ξ covered by the multiplier search.
pub const SEARCH_RADIUS: f64 = 16.0;
const SEARCH_FIRST_STEP: f64 = 1.0 / 64.0;
const SIDE_MISSES: usize = 3;
const BRACKET_WIDTH: f64 = 1e-6;
const MINIMIZE_WIDTH: f64 = 1e-6;

#[derive(Clone)]
struct Probe {
    xi: f64,
    g: f64,
    phi: Vec<f64>,
}

/// State of the scalar search: every successful probe is kept so that the
/// least-violation fallback can use the best point seen anywhere.
struct Search<'a, S: ?Sized> {
    sys: &'a S,
    params: &'a NewtonParams,
    stats: SolveStats,
    seen: Vec<Probe>,
    phi_init: &'a [f64],
}

impl<S: RowSystem + ?Sized> Search<'_, S> {
    /// Solves the line equations at fixed `xi`, warm-started from the
    /// nearest earlier probe, and evaluates the constraint there.
    fn probe(&mut self, xi: f64) -> Option<Probe> {
        let warm = self
            .seen
            .iter()
            .min_by(|a, b| (a.xi - xi).abs().total_cmp(&(b.xi - xi).abs()))
            .map_or(self.phi_init, |p| &p.phi);
        let pinned = PinnedMultiplier { inner: self.sys, xi0: xi };
        let sol = newton(&pinned, warm, xi, self.params).ok()?;
        self.stats.iterations += sol.stats.iterations;
        self.stats.halvings_total += sol.stats.halvings_total;
        let mut r = vec![0.0; self.sys.len() + 1];
        self.sys.residual(&sol.phi, xi, &mut r).ok()?;
        let g = r[self.sys.len()];
        if !g.is_finite() {
            return None;
        }
        let p = Probe { xi, g, phi: sol.phi };
        self.seen.push(p.clone());
        Some(p)
    }

    /// Samples outwards from `xi0`, alternating sides with doubling offsets,
    /// until g changes sign between neighbouring samples on one side. A side
    /// is abandoned after repeated failed probes or a run of growing |g|.
    fn expand(&mut self, xi0: f64) -> Option<(Probe, Probe)> {
        let mut last: [Option<Probe>; 2] = [None, None];
        if let Some(c) = self.probe(xi0) {
            last = [Some(c.clone()), Some(c)];
        }
        let mut misses = [0usize; 2];
        let mut rising = [0usize; 2];
        let open = |m: usize, r: usize| m < SIDE_MISSES && r < SIDE_MISSES;
        let mut offset = SEARCH_FIRST_STEP;
        while offset <= SEARCH_RADIUS && (0..2).any(|k| open(misses[k], rising[k])) {
            for (side, sign) in [(0, 1.0), (1, -1.0)] {
                if !open(misses[side], rising[side]) {
                    continue;
                }
                let Some(p) = self.probe(xi0 + sign * offset) else {
                    misses[side] += 1;
                    continue;
                };
                misses[side] = 0;
                if let Some(prev) = &last[side] {
                    if p.g == 0.0 || p.g.signum() != prev.g.signum() {
                        return Some((prev.clone(), p));
                    }
                    rising[side] = if p.g.abs() > prev.g.abs() { rising[side] + 1 } else { 0 };
                }
                last[side] = Some(p);
            }
            offset *= 2.0;
        }
        None
    }

    /// Golden-section search for the extremum of g towards zero around the
    /// sample of smallest |g|. Returns a sign-changing pair if one appears.
    fn approach_zero(&mut self) -> Option<(Probe, Probe)> {
        let mut sorted = self.seen.clone();
        sorted.sort_by(|a, b| a.xi.total_cmp(&b.xi));
        let k = (0..sorted.len()).min_by(|&a, &b| sorted[a].g.abs().total_cmp(&sorted[b].g.abs()))?;
        let anchor = sorted[k].clone();
        let sign = anchor.g.signum();
        let mut lo = sorted[k.saturating_sub(1)].xi;
        let mut hi = sorted[(k + 1).min(sorted.len() - 1)].xi;
        let inv_golden = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = hi - inv_golden * (hi - lo);
        let mut d = lo + inv_golden * (hi - lo);
        let mut pc = self.probe(c)?;
        let mut pd = self.probe(d)?;
        loop {
            for p in [&pc, &pd] {
                if p.g == 0.0 || p.g.signum() != sign {
                    return Some((anchor, p.clone()));
                }
            }
            if (hi - lo).abs() <= MINIMIZE_WIDTH * lo.abs().max(1.0) {
                return None;
            }
            if sign * pc.g < sign * pd.g {
                hi = d;
                d = c;
                pd = pc;
                c = hi - inv_golden * (hi - lo);
                pc = self.probe(c)?;
            } else {
                lo = c;
                c = d;
                pc = pd;
                d = lo + inv_golden * (hi - lo);
                pd = self.probe(d)?;
            }
        }
    }

    /// Bisects a sign-changing pair down to `BRACKET_WIDTH`, then hands the
    /// better end to the coupled iteration.
    fn bisect(&mut self, mut a: Probe, mut b: Probe) -> Option<RowSolution> {
        while (a.xi - b.xi).abs() > BRACKET_WIDTH * a.xi.abs().max(1.0) && b.g != 0.0 {
            let m = self.probe(0.5 * (a.xi + b.xi))?;
            if m.g.signum() == a.g.signum() {
                a = m;
            } else {
                b = m;
            }
        }
        let best = if a.g.abs() < b.g.abs() { a } else { b };
        let mut r = vec![0.0; self.sys.len() + 1];
        self.sys.residual(&best.phi, best.xi, &mut r).ok()?;
        let norm = max_abs(&r);
        if norm <= self.params.tol_residual {
            return Some(self.accept(best.phi, best.xi, norm, 0.0));
        }
        let sol = newton(self.sys, &best.phi, best.xi, self.params).ok()?;
        self.stats.iterations += sol.stats.iterations;
        self.stats.halvings_total += sol.stats.halvings_total;
        Some(self.accept(sol.phi, sol.xi, sol.stats.final_residual, 0.0))
    }

    fn accept(&mut self, phi: Vec<f64>, xi: f64, residual: f64, defect: f64) -> RowSolution {
        self.stats.final_residual = residual;
        self.stats.converged = defect == 0.0 && residual <= self.params.tol_residual;
        self.stats.constraint_defect = defect;
        RowSolution { phi, xi, stats: self.stats }
    }

    /// Line solution at the probe of least constraint violation. The line
    /// rows hold to tolerance or to the resolution limit; the constraint
    /// residual is the defect.
    fn least_violation(&mut self) -> Option<RowSolution> {
        let best = self
            .seen
            .iter()
            .min_by(|a, b| a.g.abs().total_cmp(&b.g.abs()))?
            .clone();
        let n = self.sys.len();
        let mut r = vec![0.0; n + 1];
        self.sys.residual(&best.phi, best.xi, &mut r).ok()?;
        let line = max_abs(&r[..n]);
        Some(self.accept(best.phi, best.xi, line, r[n].abs()))
    }
}

fn multiplier_search<S: RowSystem + ?Sized>(
    sys: &S,
    phi_init: &[f64],
    xi_init: f64,
    params: &NewtonParams,
    stats: SolveStats,
) -> Result<RowSolution> {
    let mut search = Search {
        sys,
        params,
        stats,
        seen: Vec::new(),
        phi_init,
    };
    let bracket = search.expand(xi_init).or_else(|| search.approach_zero());
    if let Some((a, b)) = bracket {
        if let Some(sol) = search.bisect(a, b) {
            return Ok(sol);
        }
    }
    if params.least_violation {
        if let Some(sol) = search.least_violation() {
            return Ok(sol);
        }
    }
    let mut stats = search.stats;
    let (phi, xi) = match search.seen.iter().min_by(|a, b| a.g.abs().total_cmp(&b.g.abs())) {
        Some(p) => {
            stats.final_residual = p.g.abs();
            (p.phi.clone(), p.xi)
        }
        None => (phi_init.to_vec(), xi_init),
    };
    Err(Error::NoConvergence { stats, phi, xi })
}

/// Default relative perturbation for [`jacobian_fd`].
pub const FD_STEP: f64 = 1e-7;

/// Centred finite-difference Jacobian with per-component step `h (1 + |z_j|)`.
///
/// Where one side of the stencil leaves the bound or the residual's domain
/// the difference is taken one-sided; if both sides fail the domain error is
/// returned.
pub fn jacobian_fd<S: RowSystem + ?Sized>(
    sys: &S,
    phi: &[f64],
    xi: f64,
    h: f64,
) -> Result<BorderedMatrix> {
    let n = sys.len();
    let bound = sys.bound();
    let mut dense = DMatrix::zeros(n + 1, n + 1);
    let mut z: Vec<f64> = phi.to_vec();
    z.push(xi);
    let mut base = vec![0.0; n + 1];
    sys.residual(phi, xi, &mut base)?;
    let mut rp = vec![0.0; n + 1];
    let mut rm = vec![0.0; n + 1];

    let eval = |z: &[f64], out: &mut [f64]| -> bool {
        let (p, x) = z.split_at(n);
        inside(p, bound) && sys.residual(p, x[0], out).is_ok() && out.iter().all(|v| v.is_finite())
    };

    for j in 0..=n {
        let hj = h * (1.0 + z[j].abs());
        let orig = z[j];
        z[j] = orig + hj;
        let plus = eval(&z, &mut rp);
        z[j] = orig - hj;
        let minus = eval(&z, &mut rm);
        z[j] = orig;
        for i in 0..=n {
            dense[(i, j)] = match (plus, minus) {
                (true, true) => (rp[i] - rm[i]) / (2.0 * hj),
                (true, false) => (rp[i] - base[i]) / hj,
                (false, true) => (base[i] - rm[i]) / hj,
                (false, false) => {
                    return Err(Error::Domain {
                        phi: z[j.min(n.saturating_sub(1))],
                    })
                }
            };
        }
    }
    Ok(BorderedMatrix {
        block: Block::Dense(dense.view((0, 0), (n, n)).into_owned()),
        col: (0..n).map(|i| dense[(i, n)]).collect(),
        row: (0..n).map(|j| dense[(n, j)]).collect(),
        corner: dense[(n, n)],
    })
}

/// Entry where two Jacobians disagree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancy {
    pub row: usize,
    pub col: usize,
    pub analytic: f64,
    pub finite_difference: f64,
}

/// Entries whose relative difference `|a − f| / max(|a|, |f|, floor)`
/// exceeds `rel_tol`. At upwind kinks (a face velocity exactly 0) the
/// semismooth Jacobian picks one branch, so disagreement there is expected.
pub fn jacobian_discrepancies(
    analytic: &BorderedMatrix,
    fd: &BorderedMatrix,
    rel_tol: f64,
    floor: f64,
) -> Vec<Discrepancy> {
    let a = analytic.to_dense();
    let f = fd.to_dense();
    let mut out = Vec::new();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let (x, y) = (a[(i, j)], f[(i, j)]);
            let scale = x.abs().max(y.abs()).max(floor);
            if (x - y).abs() / scale > rel_tol {
                out.push(Discrepancy {
                    row: i,
                    col: j,
                    analytic: x,
                    finite_difference: y,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::BandMatrix;

    /// r(x, ξ) = (x − c, ξ − 1)
    struct Affine {
        c: Vec<f64>,
    }

    impl RowSystem for Affine {
        fn len(&self) -> usize {
            self.c.len()
        }
        fn bound(&self) -> f64 {
            f64::INFINITY
        }
        fn residual(&self, phi: &[f64], xi: f64, out: &mut [f64]) -> Result<()> {
            for i in 0..self.c.len() {
                out[i] = phi[i] - self.c[i];
            }
            out[self.c.len()] = xi - 1.0;
            Ok(())
        }
        fn jacobian(&self, _phi: &[f64], _xi: f64) -> Result<BorderedMatrix> {
            let n = self.c.len();
            let mut b = BandMatrix::zeros(n, 0, 0);
            for i in 0..n {
                b.add(i, i, 1.0);
            }
            Ok(BorderedMatrix {
                block: Block::Banded(b),
                col: vec![0.0; n],
                row: vec![0.0; n],
                corner: 1.0,
            })
        }
    }

    /// Componentwise x_i² = a_i with a bound, plus ξ = 2.
    struct Roots {
        a: Vec<f64>,
        bound: f64,
    }

    impl RowSystem for Roots {
        fn len(&self) -> usize {
            self.a.len()
        }
        fn bound(&self) -> f64 {
            self.bound
        }
        fn residual(&self, phi: &[f64], xi: f64, out: &mut [f64]) -> Result<()> {
            for i in 0..self.a.len() {
                out[i] = phi[i] * phi[i] - self.a[i];
            }
            out[self.a.len()] = xi - 2.0;
            Ok(())
        }
        fn jacobian(&self, phi: &[f64], _xi: f64) -> Result<BorderedMatrix> {
            let n = self.a.len();
            let mut b = BandMatrix::zeros(n, 0, 0);
            for i in 0..n {
                b.add(i, i, 2.0 * phi[i]);
            }
            Ok(BorderedMatrix {
                block: Block::Banded(b),
                col: vec![0.0; n],
                row: vec![0.0; n],
                corner: 1.0,
            })
        }
    }

    #[test]
    fn affine_converges_in_one_iteration() {
        let sys = Affine {
            c: vec![0.3, -2.0, 5.0],
        };
        let sol = solve_row(&sys, &[10.0, 10.0, -10.0], 7.0, &NewtonParams::default()).unwrap();
        assert_eq!(sol.stats.iterations, 1);
        assert!(sol.stats.converged);
        for (a, b) in sol.phi.iter().zip(&sys.c) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((sol.xi - 1.0).abs() < 1e-14);
    }

    /// r = K((x − c) − δ) with δ a fraction of an ulp of c: no f64 x gets the
    /// residual below K·δ.
    struct Steep;

    const STEEP_K: f64 = 1e6;
    const STEEP_C: f64 = 0.7;

    fn steep_offset() -> f64 {
        0.3 * (STEEP_C.next_up() - STEEP_C)
    }

    impl RowSystem for Steep {
        fn len(&self) -> usize {
            1
        }
        fn bound(&self) -> f64 {
            1.0
        }
        fn residual(&self, phi: &[f64], xi: f64, out: &mut [f64]) -> Result<()> {
            out[0] = STEEP_K * ((phi[0] - STEEP_C) - steep_offset());
            out[1] = xi - 1.0;
            Ok(())
        }
        fn jacobian(&self, _phi: &[f64], _xi: f64) -> Result<BorderedMatrix> {
            let mut b = BandMatrix::zeros(1, 0, 0);
            b.add(0, 0, STEEP_K);
            Ok(BorderedMatrix {
                block: Block::Banded(b),
                col: vec![0.0],
                row: vec![0.0],
                corner: 1.0,
            })
        }
    }

    #[test]
    fn resolution_limited_solution_is_not_converged() {
        let sol = solve_row(&Steep, &[0.2], 1.0, &NewtonParams::default()).unwrap();
        let floor = STEEP_K * steep_offset();
        assert!(floor > NewtonParams::default().tol_residual);
        assert!(!sol.stats.converged);
        assert_eq!(sol.phi[0], STEEP_C);
        assert!((sol.stats.final_residual - floor).abs() < 1e-3 * floor);
    }

    #[test]
    fn affine_fd_jacobian_is_exact() {
        let sys = Affine {
            c: vec![0.3, -2.0, 5.0],
        };
        let fd = jacobian_fd(&sys, &[0.1, 0.2, 0.3], 0.5, FD_STEP).unwrap();
        let exact = sys.jacobian(&[0.0; 3], 0.0).unwrap();
        let diff = (fd.to_dense() - exact.to_dense()).amax();
        assert!(diff < 1e-8, "{diff}");
        let p = NewtonParams {
            fd_jacobian: true,
            ..NewtonParams::default()
        };
        let sol = solve_row(&sys, &[1.0, 1.0, 1.0], 0.0, &p).unwrap();
        assert!(sol.stats.iterations <= 2);
    }

    #[test]
    fn damping_keeps_iterates_inside_bound() {
        // Starting near 0 the full Newton step for x² = 0.81 overshoots far
        // past the bound 1; halving must pull it back.
        let sys = Roots {
            a: vec![0.81, 0.25],
            bound: 1.0,
        };
        let sol = solve_row(&sys, &[0.05, 0.9], 0.0, &NewtonParams::default()).unwrap();
        assert!(sol.stats.halvings_total > 0);
        assert!((sol.phi[0] - 0.9).abs() < 1e-12);
        assert!((sol.phi[1] - 0.5).abs() < 1e-12);
        assert!(sol.stats.final_residual <= sol.stats.initial_residual);
    }

    #[test]
    fn rejects_out_of_bound_start() {
        let sys = Roots {
            a: vec![0.25],
            bound: 1.0,
        };
        assert!(solve_row(&sys, &[1.0], 0.0, &NewtonParams::default()).is_err());
    }

    #[test]
    fn unreachable_root_reports_no_convergence() {
        // x² = 4 has no root inside |x| < 1
        let sys = Roots {
            a: vec![4.0],
            bound: 1.0,
        };
        let p = NewtonParams {
            max_iter: 8,
            ..NewtonParams::default()
        };
        match solve_row(&sys, &[0.5], 0.0, &p) {
            Err(Error::NoConvergence { stats, phi, .. }) => {
                assert!(!stats.converged);
                assert!(phi[0].abs() < 1.0);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn singular_jacobian_is_reported() {
        // x² = 0.25 from x = 0 has J = 0
        let sys = Roots {
            a: vec![0.25],
            bound: 1.0,
        };
        assert!(matches!(
            solve_row(&sys, &[0.0], 0.0, &NewtonParams::default()),
            Err(Error::SingularJacobian)
        ));
    }
}
