//! Solve, estimate, mark, refine loop and the uniform-refinement baseline.

use std::time::Instant;

use thiserror::Error;

use crate::error::Error;
use crate::estimator::{compute_indicators, IndicatorField};
use crate::fem::{assemble, SaddleSystem, Solution};
use crate::marking::{mark, MarkParams};
use crate::mesh::{refine, uniform_refine, Mesh, Topology};
use crate::problems::{BuiltinProblem, ErrorNorms};
use crate::solver::{solve_saddle, LinearSolveReport};

/// One solve on one mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub iter: usize,
    pub n_elements: usize,
    pub n_dofs: usize,
    pub estimate: f64,
    pub r1_sum: f64,
    pub r2_sum: f64,
    pub jump_sum: f64,
    pub wall_s: f64,
    pub errors: Option<ErrorNorms>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceLog {
    pub rows: Vec<LogRow>,
}

impl ConvergenceLog {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&LogRow> {
        self.rows.last()
    }

    pub fn n_dofs(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.n_dofs).collect()
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.estimate).collect()
    }

    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(|r| r.errors.is_some())
    }
}

/// Stopping rules shared by the adaptive and uniform drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    /// Number of refinements; the log has at most `max_iters + 1` rows.
    pub max_iters: usize,
    /// Stop once `n_dofs` exceeds this.
    pub dof_cap: Option<usize>,
    /// Stop once the global estimate is at most this.
    pub tol: Option<f64>,
}

impl StopRule {
    pub fn iterations(max_iters: usize) -> StopRule {
        StopRule {
            max_iters,
            dof_cap: None,
            tol: None,
        }
    }

    fn reached(&self, iter: usize, row: &LogRow) -> bool {
        iter >= self.max_iters
            || self.dof_cap.is_some_and(|cap| row.n_dofs > cap)
            || self.tol.is_some_and(|tol| row.estimate <= tol)
    }
}

/// Everything computed on the mesh of one iteration, handed to observers.
pub struct IterationState<'a> {
    pub iter: usize,
    pub mesh: &'a Mesh,
    pub topology: &'a Topology,
    pub system: &'a SaddleSystem,
    pub solution: &'a Solution,
    pub report: &'a LinearSolveReport,
    pub indicators: &'a IndicatorField,
    pub row: &'a LogRow,
}

/// Final state of a completed run.
#[derive(Debug, Clone)]
pub struct AmrOutcome {
    pub log: ConvergenceLog,
    pub mesh: Mesh,
    pub solution: Solution,
    pub indicators: IndicatorField,
}

/// A failed run together with the rows logged before the failure.
#[derive(Debug, Error)]
#[error("iteration {iter}: {source}")]
pub struct AmrFailure {
    pub iter: usize,
    pub log: ConvergenceLog,
    #[source]
    pub source: Error,
}

enum Marker<'a> {
    Adaptive(&'a MarkParams),
    Uniform,
}

/// Adaptive loop: solve, estimate, log, then mark with `params` and refine.
pub fn run_amr(
    problem: &BuiltinProblem,
    params: &MarkParams,
    stop: StopRule,
    observer: impl FnMut(&IterationState) -> Result<(), Error>,
) -> Result<AmrOutcome, AmrFailure> {
    drive(problem, Marker::Adaptive(params), stop, observer)
}

/// Baseline loop refining every element `n_refines` times.
pub fn run_uniform(
    problem: &BuiltinProblem,
    n_refines: usize,
    observer: impl FnMut(&IterationState) -> Result<(), Error>,
) -> Result<AmrOutcome, AmrFailure> {
    drive(problem, Marker::Uniform, StopRule::iterations(n_refines), observer)
}

/// Observer that ignores every iteration.
pub fn no_observer(_: &IterationState) -> Result<(), Error> {
    Ok(())
}

fn drive(
    problem: &BuiltinProblem,
    marker: Marker,
    stop: StopRule,
    mut observer: impl FnMut(&IterationState) -> Result<(), Error>,
) -> Result<AmrOutcome, AmrFailure> {
    let spec = &problem.spec;
    let classes = spec.bc_classes();
    let mut log = ConvergenceLog::default();
    let mut mesh = problem.mesh.clone();
    let mut iter = 0;
    loop {
        let mut step = || -> Result<_, Error> {
            let start = Instant::now();
            let topology = Topology::build(&mesh, &classes)?;
            let system = assemble(&mesh, &topology, spec)?;
            let (solution, report) = solve_saddle(&system)?;
            let indicators = compute_indicators(&mesh, &topology, spec, &solution)?;
            let errors = problem.error_norms(&mesh, &solution);
            let row = LogRow {
                iter,
                n_elements: mesh.n_elements(),
                n_dofs: system.n_dofs(),
                estimate: indicators.global_estimate,
                r1_sum: indicators.r1_sum(),
                r2_sum: indicators.r2_sum(),
                jump_sum: indicators.jump_sum(),
                wall_s: start.elapsed().as_secs_f64(),
                errors,
            };
            if !row.estimate.is_finite() {
                return Err(Error::Assembly(format!("non-finite error estimate {}", row.estimate)));
            }
            observer(&IterationState {
                iter,
                mesh: &mesh,
                topology: &topology,
                system: &system,
                solution: &solution,
                report: &report,
                indicators: &indicators,
                row: &row,
            })?;
            Ok((row, solution, indicators))
        };
        let fail = |log: &ConvergenceLog, source| AmrFailure {
            iter,
            log: log.clone(),
            source,
        };
        let (row, solution, indicators) = step().map_err(|e| fail(&log, e))?;
        log.rows.push(row);
        if stop.reached(iter, &row) {
            return Ok(AmrOutcome {
                log,
                mesh,
                solution,
                indicators,
            });
        }
        let next = match marker {
            Marker::Uniform => uniform_refine(&mesh),
            Marker::Adaptive(params) => mark(&indicators.eta, params).and_then(|m| refine(&mesh, &m)),
        };
        mesh = next.map_err(|e| fail(&log, e))?;
        iter += 1;
    }
}
