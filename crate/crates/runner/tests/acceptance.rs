//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion to stderr.
//!
//! `CHSAV_ACCEPTANCE=1,3,7` restricts the run to the listed criteria.
//! Failures are reported but only fail the test when
//! `CHSAV_ACCEPTANCE_STRICT=1` is set.

use std::fs;
use std::io::Write;
use std::time::Instant;

use chsav::diagnostics::zero_contour_area_in;
use chsav::line::{LineSystem, Transverse};
use chsav::newton::{jacobian_fd, FD_STEP};
use chsav::oracle::{oracle_residual_1d, oracle_solve, oracle_sweep_residual, OracleLine, ORACLE_TOL};
use chsav::scheme1d::{cert_tolerance, residual_1d};
use chsav::scheme2d::{sweep_x, sweep_y};
use chsav::{
    discrete_energy, random_field, step, step_1d, tanh_profile, Field, Grid, NewtonParams, PotentialSpec, RowSystem,
    SchemeParams, ShapeSpec, SplitState,
};
use chsav_runner::{recipe, run, RunConfig, Simulation, RECIPES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn say(line: &str) {
    // written to the raw handle so libtest does not capture it
    let mut err = std::io::stderr();
    let _ = writeln!(err, "{line}");
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn log(theta: f64) -> PotentialSpec {
    PotentialSpec::logarithmic(theta, 1.0).unwrap()
}

// ---------------------------------------------------------------- criterion 1

const CERT_EPSILON: f64 = 0.04;
const CERT_STEPS: usize = 50;

fn certification_run(phi0: Field, params: &SchemeParams) -> Result<(), String> {
    let tol = cert_tolerance(phi0.grid().len(), params);
    let sum0: f64 = phi0.values().iter().sum();
    let mut phi = phi0;
    let mut xi = 1.0;
    let mut energy = discrete_energy(&phi, params).map_err(|e| e.to_string())?;
    for n in 1..=CERT_STEPS {
        let r = step(&phi, xi, params).map_err(|e| format!("step {n}: {e}"))?;
        if let Some(v) = r.field.values().iter().find(|v| v.abs() >= 1.0) {
            return Err(format!("step {n}: |φ| = {} reaches 1", v.abs()));
        }
        let drift = (r.field.values().iter().sum::<f64>() - sum0).abs();
        if drift > tol {
            return Err(format!("step {n}: mass drift {drift:e} > {tol:e}"));
        }
        let e = discrete_energy(&r.field, params).map_err(|e| e.to_string())?;
        if e > energy + tol {
            return Err(format!("step {n}: energy rose by {:e}", e - energy));
        }
        if phi.grid().is_2d() {
            let trace = r.sweep_energies.as_ref().ok_or("no per-sweep trace")?;
            let mut prev = energy;
            for (k, &s) in trace.iter().enumerate() {
                if s > prev + tol {
                    return Err(format!("step {n}, sweep {k}: energy rose by {:e}", s - prev));
                }
                prev = s;
            }
        }
        phi = r.field;
        xi = r.xi;
        energy = e;
    }
    Ok(())
}

fn criterion_1() -> Verdict {
    let potentials = [
        ("log θ=0.15", log(0.15)),
        ("log θ=0.3", log(0.3)),
        ("log θ=0.45", log(0.45)),
        ("pol", PotentialSpec::Polynomial),
    ];
    let grids = [Grid::unit_1d(64, 1.0).unwrap(), Grid::unit_2d(32, 32, 1.0, 1.0).unwrap()];
    let mut runs = 0;
    let mut failures = Vec::new();
    for (name, pot) in &potentials {
        for grid in &grids {
            for dt in [1e-5, 1e-4, 1e-3, 1e-2] {
                let params = SchemeParams::new(CERT_EPSILON, dt, *pot).unwrap();
                let shape = if grid.is_2d() {
                    ShapeSpec::Circle { cx: 0.5, cy: 0.5, r: 0.25 }
                } else {
                    ShapeSpec::Rectangle { cx: 0.5, cy: 0.5, w: 0.5, h: 1.0 }
                };
                let initial = [
                    ("tanh", tanh_profile(*grid, &shape, CERT_EPSILON, chsav::initializers::DEFAULT_LAMBDA).unwrap()),
                    ("random", random_field(*grid, 0.1, 0.5, 7).unwrap()),
                ];
                for (init, phi0) in initial {
                    runs += 1;
                    if let Err(e) = certification_run(phi0, &params) {
                        failures.push(format!("{name} {}D Δt={dt:e} {init}: {e}", grid.dim()));
                    }
                }
            }
        }
    }
    for f in &failures {
        say(&format!("    {f}"));
    }
    Verdict::new(failures.is_empty(), format!("{}/{runs} runs certified over {CERT_STEPS} steps", runs - failures.len()))
}

// ---------------------------------------------------------------- criterion 2

fn random_potential(rng: &mut ChaCha8Rng) -> PotentialSpec {
    match rng.gen_range(0..4) {
        0 => PotentialSpec::Polynomial,
        k => log([0.15, 0.3, 0.45][k - 1]),
    }
}

fn tight(params: SchemeParams) -> SchemeParams {
    params.with_newton(NewtonParams {
        tol_residual: ORACLE_TOL,
        ..NewtonParams::default()
    })
}

fn oracle_roots<R>(residual: R, bound: f64, line: &[f64], candidate: (&[f64], f64)) -> Vec<(Vec<f64>, f64)>
where
    R: Fn(&[f64], f64) -> chsav::Result<Vec<f64>>,
{
    let nudged: Vec<f64> = candidate
        .0
        .iter()
        .enumerate()
        .map(|(i, v)| v + if i % 2 == 0 { 1e-4 } else { -1e-4 })
        .collect();
    let mut seeds: Vec<(Vec<f64>, f64)> = [0.5, 0.75, 1.0, 1.25, 1.5].iter().map(|&xi| (line.to_vec(), xi)).collect();
    seeds.push((nudged, candidate.1 + 1e-4));
    seeds
        .into_iter()
        .filter_map(|seed| oracle_solve(&residual, bound, &[seed]).ok())
        .collect()
}

fn matches_a_root(roots: &[(Vec<f64>, f64)], phi: &[f64], xi: f64) -> bool {
    roots.iter().any(|(p, x)| max_diff(p, phi) < 1e-10 && (x - xi).abs() < 1e-10)
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let n = rng.gen_range(2..=16);
        let pot = random_potential(&mut rng);
        let dt = 10f64.powf(rng.gen_range(-5.0..-2.0));
        let params = SchemeParams::new(rng.gen_range(0.01..0.1), dt, pot).unwrap();
        let old = random_field(Grid::unit_1d(n, 1.0).unwrap(), 0.0, 0.95, case).unwrap();
        let new: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.95..0.95)).collect();
        let xi = rng.gen_range(0.5..1.5);
        let a = residual_1d(&new, xi, &old, &params).unwrap();
        let b = oracle_residual_1d(&new, xi, &old, &params).unwrap();
        let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(max_diff(&a, &b) / scale);
    }

    let mut steps = (0, 0);
    for case in 0..40 {
        let n = rng.gen_range(3..=8);
        let pot = random_potential(&mut rng);
        let params = tight(SchemeParams::new(0.05, [1e-5, 1e-4, 1e-3][case % 3], pot).unwrap());
        let old = random_field(Grid::unit_1d(n, 1.0).unwrap(), 0.1, 0.6, case as u64).unwrap();
        let Ok(s) = step_1d(&old, 1.0, &params) else { continue };
        if s.stats.relaxed_solves > 0 {
            continue;
        }
        let roots = oracle_roots(
            |p, x| oracle_residual_1d(p, x, &old, &params),
            params.bound(),
            old.values(),
            (s.field.values(), s.xi),
        );
        steps.0 += matches_a_root(&roots, s.field.values(), s.xi) as usize;
        steps.1 += 1;
    }

    let params = tight(SchemeParams::new(0.1, 1e-4, log(0.3)).unwrap());
    let mut sweeps = (0, 0);
    for seed in 0..6u64 {
        let state = random_field(Grid::unit_2d(6, 5, 1.0, 1.0).unwrap(), -0.1, 0.5, seed).unwrap();
        for axis in [OracleLine::Row(seed as usize % 5), OracleLine::Column(seed as usize % 6)] {
            let mut split = SplitState::new(state.clone(), &params, false).unwrap();
            let solved = match axis {
                OracleLine::Row(q) => sweep_x(&mut split, q, 1.0, &params),
                OracleLine::Column(p) => sweep_y(&mut split, p, 1.0, &params),
            };
            let Ok((xi, stats)) = solved else { continue };
            if !stats.converged {
                continue;
            }
            let line_of = |f: &Field| match axis {
                OracleLine::Row(q) => f.row(q).to_vec(),
                OracleLine::Column(p) => f.column(p),
            };
            let roots = oracle_roots(
                |l, x| oracle_sweep_residual(l, x, &state, axis, &params),
                params.bound(),
                &line_of(&state),
                (&line_of(&split.phi), xi),
            );
            sweeps.0 += matches_a_root(&roots, &line_of(&split.phi), xi) as usize;
            sweeps.1 += 1;
        }
    }

    let pass = worst < 1e-13 && steps.0 == steps.1 && steps.1 >= 30 && sweeps.0 == sweeps.1 && sweeps.1 >= 10;
    Verdict::new(
        pass,
        format!(
            "residual worst scaled difference {worst:.2e} over 1000 instances; step_1d {}/{} and sweeps {}/{} match an oracle root to 1e-10",
            steps.0, steps.1, sweeps.0, sweeps.1
        ),
    )
}

// ---------------------------------------------------------------- criterion 3

fn worst_jacobian_discrepancy(params: &SchemeParams, transverse: bool, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 12;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let a = rng.gen_range(0.2..0.6);
        let k = rng.gen_range(1.0..3.0);
        let shift = rng.gen_range(-0.2..0.2);
        let old: Vec<f64> = (0..n).map(|i| shift + a * (k * i as f64 / n as f64).sin()).collect();
        let new: Vec<f64> = old.iter().map(|v| v + rng.gen_range(-0.05..0.05)).collect();
        let t = Transverse {
            constant: (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect(),
            coefficient: vec![2.0 * 144.0; n],
        };
        let sys = LineSystem::new(&old, 1.0 / n as f64, transverse.then_some(&t), params);
        let xi = rng.gen_range(0.8..1.2);
        let analytic = sys.jacobian(&new, xi).unwrap().to_dense();
        let fd = jacobian_fd(&sys, &new, xi, FD_STEP).unwrap().to_dense();
        worst = worst.max((&analytic - &fd).amax() / analytic.amax());
    }
    worst
}

fn criterion_3() -> Verdict {
    let mut worst: f64 = 0.0;
    let pots = [PotentialSpec::Polynomial, log(0.15), log(0.3), log(0.45)];
    for (i, pot) in pots.into_iter().enumerate() {
        let params = SchemeParams::new(0.05, 1e-3, pot).unwrap();
        for transverse in [false, true] {
            worst = worst.max(worst_jacobian_discrepancy(&params, transverse, 100 + 2 * i as u64 + transverse as u64));
        }
    }
    Verdict::new(worst < 1e-6, format!("worst relative discrepancy {worst:.2e} over 8 system types × 20 points"))
}

// ---------------------------------------------------------------- criteria 4-6

fn march(config: &RunConfig, mut each: impl FnMut(&Simulation, f64)) -> Result<Simulation, String> {
    let mut sim = Simulation::new(config).map_err(|e| e.to_string())?;
    while !sim.is_done() {
        let before = sim.record().map_err(|e| e.to_string())?.energy;
        sim.advance().map_err(|e| e.to_string())?;
        each(&sim, before);
    }
    Ok(sim)
}

fn criterion_4() -> Verdict {
    let mut rates = Vec::new();
    for dt in [1e-3, 5e-4, 1e-4] {
        let dt_set = format!("dt={dt}");
        let config = recipe("rose", &["nx=128", "ny=128", "t_end=1.0", &dt_set]).unwrap();
        match march(&config, |_, _| {}) {
            Ok(sim) => {
                let r = sim.record().unwrap();
                say(&format!("    Δt={dt:e}: δS(t={}) = {:+.4}%", r.t, 100.0 * r.delta_s));
                rates.push(r.delta_s.abs());
            }
            Err(e) => return Verdict::new(false, format!("Δt={dt:e}: {e}")),
        }
    }
    let monotone = rates.windows(2).all(|w| w[1] <= w[0]);
    let small = rates[2] < 0.01;
    Verdict::new(
        monotone && small,
        format!(
            "|δS| = {:.4}%, {:.4}%, {:.4}%; non-increasing: {monotone}; below 1% at Δt=1e-4: {small}",
            100.0 * rates[0],
            100.0 * rates[1],
            100.0 * rates[2]
        ),
    )
}

/// Cells right of and above the large circle, enclosing only the small one.
const SMALL_CIRCLE_WINDOW: [f64; 4] = [0.6, 0.6, 1.0, 1.0];
const DESK_DT: &str = "dt=5e-4";
const TOPOLOGY_DROP: f64 = 0.05;

struct TwoCircles {
    label: &'static str,
    delta_s: f64,
    small_areas: Vec<f64>,
    xi_worst: f64,
    topology_steps: usize,
}

fn two_circles(label: &'static str, set: &str) -> Result<TwoCircles, String> {
    let config = recipe("two-circles", &["nx=96", "ny=96", "t_end=0.5", DESK_DT, set]).unwrap();
    let mut small_areas = vec![zero_contour_area_in(&config.initial_field().unwrap(), SMALL_CIRCLE_WINDOW)];
    let mut xi_worst: f64 = 0.0;
    let mut topology_steps = 0;
    let sim = march(&config, |sim, before| {
        small_areas.push(zero_contour_area_in(sim.field(), SMALL_CIRCLE_WINDOW));
        let after = discrete_energy(sim.field(), sim.params()).unwrap();
        if before - after > TOPOLOGY_DROP * before.abs() {
            topology_steps += 1;
        } else {
            xi_worst = xi_worst.max((sim.xi() - 1.0).abs());
        }
    })?;
    Ok(TwoCircles {
        label,
        delta_s: sim.record().unwrap().delta_s,
        small_areas,
        xi_worst,
        topology_steps,
    })
}

fn two_circle_runs() -> Result<Vec<TwoCircles>, String> {
    [
        ("log θ=0.15", "theta=0.15"),
        ("log θ=0.3", "theta=0.3"),
        ("log θ=0.6", "theta=0.6"),
        ("pol", "potential=pol"),
    ]
    .into_iter()
    .map(|(label, set)| two_circles(label, set))
    .collect()
}

fn criterion_5(runs: &[TwoCircles]) -> Verdict {
    for r in runs {
        let (a0, a1) = (r.small_areas[0], *r.small_areas.last().unwrap());
        say(&format!("    {}: δS = {:+.4}%, small circle area {a0:.6} -> {a1:.6}", r.label, 100.0 * r.delta_s));
    }
    let ds = |i: usize| runs[i].delta_s.abs();
    let low_theta = ds(0) < 0.02 && ds(1) < 0.02;
    let high_theta = ds(2) > 0.03;
    let drops: Vec<f64> = runs[0].small_areas.windows(2).map(|w| w[0] - w[1]).filter(|&d| d > 0.0).collect();
    let kept = drops.is_empty();
    if !kept {
        say(&format!(
            "    log θ=0.15: small circle area decreased in {} of {} steps, by at most {:.2e}",
            drops.len(),
            runs[0].small_areas.len() - 1,
            drops.iter().fold(0.0f64, |m, &d| m.max(d))
        ));
    }
    let ripened = runs[3].small_areas.windows(2).all(|w| w[1] < w[0]);
    Verdict::new(
        low_theta && high_theta && kept && ripened,
        format!(
            "|δS| < 2% at θ=0.15, 0.3: {low_theta}; |δS| > 3% at θ=0.6: {high_theta}; small circle non-decreasing at θ=0.15: {kept}; strictly decreasing for pol: {ripened}"
        ),
    )
}

fn criterion_6(runs: &[TwoCircles]) -> Verdict {
    let worst = runs.iter().map(|r| r.xi_worst).fold(0.0, f64::max);
    let flagged: usize = runs.iter().map(|r| r.topology_steps).sum();
    for r in runs {
        say(&format!("    {}: max |ξ−1| = {:.3e}", r.label, r.xi_worst));
    }
    Verdict::new(worst < 0.05, format!("max |ξ−1| = {worst:.3e} over the criterion-5 runs, {flagged} topology steps excluded"))
}

// ---------------------------------------------------------------- criterion 7

fn criterion_7() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut identical = 0;
    for name in RECIPES {
        let mut bytes = Vec::new();
        for attempt in 0..2 {
            let csv = format!("csv_path={name}-{attempt}.csv");
            let config = recipe(
                name,
                &["nx=40", "ny=40", "dt=1e-3", "t_end=5e-3", "output.snapshot_dir=none", &csv],
            )
            .unwrap();
            run(&config, Some(dir.path())).unwrap();
            bytes.push(fs::read(dir.path().join(format!("{name}-{attempt}.csv"))).unwrap());
        }
        identical += (bytes[0] == bytes[1]) as usize;
    }
    Verdict::new(identical == RECIPES.len(), format!("{identical}/{} recipes byte-identical on rerun", RECIPES.len()))
}

// ---------------------------------------------------------------- driver

fn selected() -> Vec<u32> {
    match std::env::var("CHSAV_ACCEPTANCE") {
        Ok(list) => list.split(',').filter_map(|s| s.trim().parse().ok()).collect(),
        Err(_) => (1..=7).collect(),
    }
}

#[test]
fn acceptance() {
    let chosen = selected();
    let mut failed = Vec::new();
    let mut report = |n: u32, verdict: Verdict, started: Instant| {
        let tag = if verdict.pass { "PASS" } else { "FAIL" };
        say(&format!("criterion {n}: {tag} ({:.0} s) {}", started.elapsed().as_secs_f64(), verdict.detail));
        if !verdict.pass {
            failed.push(n);
        }
    };
    let simple: [(u32, fn() -> Verdict); 5] =
        [(1, criterion_1), (2, criterion_2), (3, criterion_3), (4, criterion_4), (7, criterion_7)];
    for (n, check) in simple {
        if n == 7 && (chosen.contains(&5) || chosen.contains(&6)) {
            let started = Instant::now();
            match two_circle_runs() {
                Ok(runs) => {
                    if chosen.contains(&5) {
                        report(5, criterion_5(&runs), started);
                    }
                    if chosen.contains(&6) {
                        report(6, criterion_6(&runs), Instant::now());
                    }
                }
                Err(e) => {
                    for k in [5, 6].into_iter().filter(|k| chosen.contains(k)) {
                        report(k, Verdict::new(false, e.clone()), started);
                    }
                }
            }
        }
        if chosen.contains(&n) {
            let started = Instant::now();
            report(n, check(), started);
        }
    }
    let strict = std::env::var("CHSAV_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    assert!(!strict || failed.is_empty(), "criteria {failed:?} failed");
}
