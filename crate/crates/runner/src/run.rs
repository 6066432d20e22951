//! The outer time loop.

use std::path::Path;

use chsav::{record, step, DiagnosticsRecord, Field, SchemeParams, StepStats};

use crate::config::RunConfig;
use crate::error::RunError;
use crate::output::{resolve, write_failure_dump, write_snapshot, write_snapshot_binary, CsvWriter};

/// State of a run between steps. The field is only replaced by accepted,
/// certified steps.
pub struct Simulation {
    params: SchemeParams,
    field: Field,
    xi: f64,
    step: usize,
    steps: usize,
    s0: f64,
    totals: StepStats,
}

impl Simulation {
    pub fn new(config: &RunConfig) -> Result<Self, RunError> {
        let field = config.initial_field()?;
        let params = config.scheme_params()?;
        let s0 = chsav::zero_contour_area(&field);
        Ok(Self {
            params,
            field,
            xi: 1.0,
            step: 0,
            steps: config.steps(),
            s0,
            totals: StepStats::default(),
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn t(&self) -> f64 {
        self.step as f64 * self.params.dt
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.steps
    }

    /// Solver statistics accumulated over all accepted steps.
    pub fn totals(&self) -> &StepStats {
        &self.totals
    }

    pub fn record(&self) -> Result<DiagnosticsRecord, RunError> {
        record(self.t(), &self.field, self.xi, Some(self.s0), &self.params).map_err(|source| RunError::Scheme {
            step: self.step,
            t: self.t(),
            source,
        })
    }

    /// Advances one step of size Δt.
    pub fn advance(&mut self) -> Result<StepStats, RunError> {
        let result = step(&self.field, self.xi, &self.params).map_err(|source| RunError::Scheme {
            step: self.step + 1,
            t: self.t(),
            source,
        })?;
        self.field = result.field;
        self.xi = result.xi;
        self.step += 1;
        let s = result.stats;
        let t = &mut self.totals;
        t.solves += s.solves;
        t.newton_iterations += s.newton_iterations;
        t.max_iterations = t.max_iterations.max(s.max_iterations);
        t.halvings += s.halvings;
        t.max_final_residual = t.max_final_residual.max(s.max_final_residual);
        t.relaxed_solves += s.relaxed_solves;
        t.max_constraint_defect = t.max_constraint_defect.max(s.max_constraint_defect);
        Ok(s)
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub last: DiagnosticsRecord,
    pub totals: StepStats,
}

/// Runs `config` to `t_end`, writing one CSV row per step (plus the initial
/// state) and snapshots on cadence. Relative output paths are placed under
/// `root` when given. On a scheme error the last accepted state is dumped
/// next to the CSV before the error is returned.
pub fn run(config: &RunConfig, root: Option<&Path>) -> Result<RunSummary, RunError> {
    let mut sim = Simulation::new(config)?;
    let csv_path = resolve(&config.output.csv_path, root);
    let snapshot_dir = config.output.snapshot_dir.as_ref().map(|d| resolve(d, root));
    let snapshot = |sim: &Simulation| -> Result<(), RunError> {
        let Some(dir) = &snapshot_dir else { return Ok(()) };
        let name = format!("step-{:08}", sim.step_index());
        write_snapshot(&dir.join(format!("{name}.txt")), sim.field(), sim.t())?;
        if config.output.binary_snapshots {
            write_snapshot_binary(&dir.join(format!("{name}.bin")), sim.field(), sim.t())?;
        }
        Ok(())
    };

    let mut csv = CsvWriter::create(&csv_path)?;
    let mut last = sim.record()?;
    csv.write(&last)?;
    snapshot(&sim)?;
    while !sim.is_done() {
        if let Err(e) = sim.advance() {
            csv.flush()?;
            if let RunError::Scheme { source, .. } = &e {
                write_failure_dump(&csv_path, sim.field(), sim.xi(), sim.step_index() + 1, sim.t(), source)?;
            }
            return Err(e);
        }
        last = sim.record()?;
        csv.write(&last)?;
        if sim.step_index() % config.output.snapshot_every == 0 {
            snapshot(&sim)?;
            csv.flush()?;
        }
    }
    if sim.step_index() % config.output.snapshot_every != 0 {
        snapshot(&sim)?;
    }
    csv.flush()?;
    Ok(RunSummary {
        steps: sim.step_index(),
        last,
        totals: *sim.totals(),
    })
}
