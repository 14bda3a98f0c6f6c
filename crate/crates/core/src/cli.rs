//! Command-line interface.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::amr::{run_amr, run_uniform, AmrFailure, AmrOutcome, IterationState, StopRule};
use crate::error::{Error, Result};
use crate::io::{read_problem, write_log, write_mesh, write_solution, write_vtk, VtkFields};
use crate::marking::{MarkParams, Statistics, Strategy};
use crate::problems::{builtin, default_h, BuiltinProblem, NAMES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "brinkman", version, about = "Adaptive Taylor-Hood solver for the Stokes-Brinkman equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One solve and error estimate on the initial mesh.
    Solve(Common),
    /// Adaptive refinement loop.
    Amr {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        marking: Marking,
        #[command(flatten)]
        stop: Stopping,
    },
    /// Uniform refinement baseline.
    Uniform {
        #[command(flatten)]
        common: Common,
        /// Number of uniform refinements.
        #[arg(long, default_value_t = 5)]
        iters: usize,
    },
    /// Both strategies over ε ∈ {0, 0.001, 0.01} and θ ∈ {0.25, 0.5, 0.75}.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        stop: Stopping,
    },
    /// Lists the built-in problems.
    ListProblems,
}

#[derive(Debug, Args)]
struct Common {
    /// Built-in problem name.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    problem: Option<String>,
    /// Problem configuration file (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Initial grid spacing of built-in problems.
    #[arg(long)]
    h: Option<f64>,
    /// Output directory (defaults to $OUT_DIR, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write iter_k.vtk every N iterations (0 disables).
    #[arg(long, default_value_t = 0)]
    vtk_every: usize,
    /// Reserved; the solver is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct Marking {
    #[arg(long, default_value = "equilibration", value_parser = parse_strategy)]
    strategy: Strategy,
    #[arg(long, default_value_t = 0.25)]
    theta: f64,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Take max and total over all elements instead of the unmarked remainder.
    #[arg(long)]
    global_statistics: bool,
}

#[derive(Debug, Args)]
struct Stopping {
    /// Maximum number of refinements.
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// Stop once the number of DOFs exceeds this.
    #[arg(long)]
    dof_cap: Option<usize>,
    /// Stop once the global estimate is at most this.
    #[arg(long)]
    tol: Option<f64>,
}

impl From<&Stopping> for StopRule {
    fn from(s: &Stopping) -> StopRule {
        StopRule {
            max_iters: s.iters,
            dof_cap: s.dof_cap,
            tol: s.tol,
        }
    }
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Common {
    fn load(&self) -> Result<BuiltinProblem> {
        match (&self.problem, &self.config) {
            (Some(name), _) => builtin(name, self.h),
            (None, Some(path)) => read_problem(path),
            (None, None) => Err(Error::InvalidArgument("either --problem or --config is required".into())),
        }
    }

    fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os("OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            EXIT_FAILURE
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Run(#[from] Error),
    #[error("run failed at {0}")]
    Amr(#[from] AmrFailure),
}

fn execute(command: &Command) -> std::result::Result<(), CliError> {
    match command {
        Command::ListProblems => {
            for name in NAMES {
                println!("{name:<12} default h = {}", default_h(name).unwrap_or(f64::NAN));
            }
            Ok(())
        }
        Command::Solve(common) => {
            let problem = common.load()?;
            let dir = prepare(&common.out_dir())?;
            let out = finish(&dir, run_uniform(&problem, 0, vtk_observer(&dir, &problem, common.vtk_every)))?;
            let header = format!("command: solve\nproblem: {}\n", problem.name);
            write_outputs(&dir, &problem, &out, &header)?;
            print_rows(&out);
            Ok(())
        }
        Command::Amr { common, marking, stop } => {
            let problem = common.load()?;
            let params = mark_params(marking);
            params.validate()?;
            let dir = prepare(&common.out_dir())?;
            let observer = vtk_observer(&dir, &problem, common.vtk_every);
            let out = finish(&dir, run_amr(&problem, &params, stop.into(), observer))?;
            let header = format!(
                "command: amr\nproblem: {}\nstrategy: {}\ntheta: {}\nepsilon: {}\n",
                problem.name, params.strategy, params.theta, params.epsilon
            );
            write_outputs(&dir, &problem, &out, &header)?;
            print_rows(&out);
            Ok(())
        }
        Command::Uniform { common, iters } => {
            let problem = common.load()?;
            let dir = prepare(&common.out_dir())?;
            let out = finish(&dir, run_uniform(&problem, *iters, vtk_observer(&dir, &problem, common.vtk_every)))?;
            let header = format!("command: uniform\nproblem: {}\n", problem.name);
            write_outputs(&dir, &problem, &out, &header)?;
            print_rows(&out);
            Ok(())
        }
        Command::Sweep { common, stop } => sweep(common, stop),
    }
}

fn mark_params(m: &Marking) -> MarkParams {
    let mut p = MarkParams::new(m.strategy, m.theta, m.epsilon);
    if m.global_statistics {
        p.statistics = Statistics::Global;
    }
    p
}

fn prepare(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir.to_path_buf())
}

/// Persists the partial log of a failed run before reporting the failure.
fn finish(dir: &Path, result: std::result::Result<AmrOutcome, AmrFailure>) -> std::result::Result<AmrOutcome, CliError> {
    result.map_err(|f| {
        if !f.log.is_empty() {
            let _ = write_log(dir.join("log.csv"), &f.log);
        }
        CliError::Amr(f)
    })
}

fn vtk_observer<'a>(
    dir: &'a Path,
    problem: &'a BuiltinProblem,
    every: usize,
) -> impl FnMut(&IterationState) -> Result<()> + 'a {
    move |s| {
        if every > 0 && s.iter % every == 0 {
            let fields = VtkFields {
                spec: Some(&problem.spec),
                solution: Some(s.solution),
                indicators: Some(s.indicators),
            };
            write_vtk(dir.join(format!("iter_{}.vtk", s.iter)), s.mesh, fields)?;
        }
        Ok(())
    }
}

fn write_outputs(dir: &Path, problem: &BuiltinProblem, out: &AmrOutcome, header: &str) -> Result<()> {
    write_log(dir.join("log.csv"), &out.log)?;
    write_mesh(&out.mesh, dir.join("mesh.json"))?;
    write_solution(&out.solution, dir.join("solution.json"))?;
    let summary = summary_text(problem, out, header);
    let path = dir.join("summary.txt");
    std::fs::write(&path, summary).map_err(|e| Error::io(&path, e))
}

fn summary_text(problem: &BuiltinProblem, out: &AmrOutcome, header: &str) -> String {
    let mut s = header.to_string();
    let last = out.log.last().expect("a finished run has at least one row");
    let total: f64 = out.log.rows.iter().map(|r| r.wall_s).sum();
    let _ = writeln!(s, "solves: {}", out.log.len());
    let _ = writeln!(s, "initial elements: {}", problem.mesh.n_elements());
    let _ = writeln!(s, "final elements: {}", last.n_elements);
    let _ = writeln!(s, "final dofs: {}", last.n_dofs);
    let _ = writeln!(s, "final estimate: {:.6e}", last.estimate);
    let _ = writeln!(
        s,
        "shape regularity: {:.4} -> {:.4}",
        problem.mesh.max_shape_regularity(),
        out.mesh.max_shape_regularity()
    );
    if let Some(e) = last.errors {
        let _ = writeln!(s, "final error H1(u): {:.6e}", e.velocity_h1);
        let _ = writeln!(s, "final error L2(p): {:.6e}", e.pressure_l2);
    }
    let _ = writeln!(s, "wall time: {total:.3} s");
    s
}

fn print_rows(out: &AmrOutcome) {
    println!("{:>4} {:>9} {:>9} {:>13}", "iter", "elements", "dofs", "estimate");
    for r in &out.log.rows {
        println!("{:>4} {:>9} {:>9} {:>13.6e}", r.iter, r.n_elements, r.n_dofs, r.estimate);
    }
}

fn sweep(common: &Common, stop: &Stopping) -> std::result::Result<(), CliError> {
    let problem = common.load()?;
    let root = prepare(&common.out_dir())?;
    let mut table = String::from("strategy,epsilon,theta,solves,final_dofs,final_estimate,wall_s\n");
    for strategy in [Strategy::Maximum, Strategy::Equilibration] {
        for epsilon in [0.0, 0.001, 0.01] {
            for theta in [0.25, 0.5, 0.75] {
                let params = MarkParams::new(strategy, theta, epsilon);
                let dir = prepare(&root.join(format!("{strategy}_eps{epsilon}_theta{theta}")))?;
                let start = Instant::now();
                let observer = vtk_observer(&dir, &problem, common.vtk_every);
                let out = finish(&dir, run_amr(&problem, &params, stop.into(), observer))?;
                let header = format!(
                    "command: sweep\nproblem: {}\nstrategy: {strategy}\ntheta: {theta}\nepsilon: {epsilon}\n",
                    problem.name
                );
                write_outputs(&dir, &problem, &out, &header)?;
                let last = out.log.last().expect("nonempty log");
                let _ = writeln!(
                    table,
                    "{strategy},{epsilon},{theta},{},{},{:e},{:.3}",
                    out.log.len(),
                    last.n_dofs,
                    last.estimate,
                    start.elapsed().as_secs_f64()
                );
                println!(
                    "{strategy:<13} eps={epsilon:<6} theta={theta:<5} dofs={:<8} estimate={:.4e}",
                    last.n_dofs, last.estimate
                );
            }
        }
    }
    let path = root.join("summary.txt");
    std::fs::write(&path, table).map_err(|e| Error::io(&path, e))?;
    Ok(())
}
