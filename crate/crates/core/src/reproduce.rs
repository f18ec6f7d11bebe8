//! Experiment harness for the two built-in problems and the random grid.
//!
//! Every run draws from its own ChaCha8 stream, selected by the run index
//! under the master seed, so reports do not depend on the executor.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::builtin::{paper_problem_1, paper_problem_2, PAPER_1_OPTIMUM, PAPER_2_OPTIMUM};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::gen::{generate_instance, random_start, GenSpec};
use crate::model::{Problem, Vector};
use crate::outer::{solve, Algorithm, SolverConfig};
use crate::report::{RunReport, RunSummary};

/// Distance from the known optimum that still counts as a hit.
pub const HIT_TOL_PAPER_1: f64 = 1e-3;
pub const HIT_TOL_PAPER_2: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Paper1,
    Paper2,
    Paper3,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Paper1 => "paper1",
            Experiment::Paper2 => "paper2",
            Experiment::Paper3 => "paper3",
        })
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper1" | "paper-1" => Ok(Experiment::Paper1),
            "paper2" | "paper-2" => Ok(Experiment::Paper2),
            "paper3" | "paper-3" => Ok(Experiment::Paper3),
            other => Err(Error::InvalidConfig(format!("unknown experiment `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReproduceConfig {
    /// Random starts for the built-ins; instances per cell for the grid.
    pub runs: usize,
    pub seed: u64,
    pub grid_n: Vec<usize>,
    pub grid_terms: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    /// Base solver settings; the algorithm field is overridden per report.
    pub solver: SolverConfig,
    pub exec: Execution,
}

impl Default for ReproduceConfig {
    fn default() -> Self {
        ReproduceConfig {
            runs: 100,
            seed: 0,
            grid_n: vec![10, 50],
            grid_terms: vec![5, 10, 50],
            algorithms: vec![Algorithm::Newton, Algorithm::ModifiedNewton],
            solver: SolverConfig::default(),
            exec: Execution::default(),
        }
    }
}

/// Generator for run `index` under the master seed.
pub fn run_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform point on the edge `{x₁ + x₂ = 1, x ≥ 0}`.
pub fn simplex_edge_start<R: Rng + ?Sized>(rng: &mut R) -> Vector {
    let t: f64 = rng.random();
    Vector::from_vec(vec![t, 1.0 - t])
}

fn timed_run(problem: &Problem, y0: &Vector, cfg: &SolverConfig, run: usize, target: Option<(f64, f64)>) -> RunSummary {
    let started = Instant::now();
    let out = solve(problem, Some(y0), cfg);
    let secs = started.elapsed().as_secs_f64();
    match out {
        Ok(sol) => RunSummary::from_solution(run, &sol, target, secs),
        Err(e) => RunSummary::from_error(run, &e, secs),
    }
}

/// Runs one experiment and returns one report per (start family or cell,
/// algorithm).
///
/// The built-ins give an `origin` report (the single start `(0, 0)`) and a
/// `random` report (`runs` starts on the simplex edge) per algorithm. The
/// grid gives one report per `(n, N, algorithm)`; each cell solves `runs`
/// generated instances from random box starts, the same instance and start
/// for every algorithm.
pub fn run_reproduce(which: Experiment, cfg: &ReproduceConfig) -> Result<Vec<RunReport>> {
    cfg.solver.validate()?;
    if cfg.algorithms.is_empty() {
        return Err(Error::InvalidConfig("no algorithms selected".into()));
    }
    match which {
        Experiment::Paper1 => Ok(builtin_reports("paper1", &paper_problem_1(), (PAPER_1_OPTIMUM, HIT_TOL_PAPER_1), cfg)),
        Experiment::Paper2 => Ok(builtin_reports("paper2", &paper_problem_2(), (PAPER_2_OPTIMUM, HIT_TOL_PAPER_2), cfg)),
        Experiment::Paper3 => grid_reports(cfg),
    }
}

fn builtin_reports(id: &str, problem: &Problem, target: (f64, f64), cfg: &ReproduceConfig) -> Vec<RunReport> {
    let starts: Vec<Vector> = (0..cfg.runs)
        .map(|i| simplex_edge_start(&mut run_rng(cfg.seed, i as u64)))
        .collect();
    let mut reports = Vec::new();
    for &alg in &cfg.algorithms {
        let solver = SolverConfig {
            algorithm: alg,
            ..cfg.solver.clone()
        };
        let origin = timed_run(problem, &Vector::zeros(2), &solver, 0, Some(target));
        reports.push(RunReport::new(format!("{id}/origin"), alg, None, vec![origin]));
        let runs = map_indexed(cfg.exec, starts.len(), |i| timed_run(problem, &starts[i], &solver, i, Some(target)));
        reports.push(RunReport::new(format!("{id}/random"), alg, None, runs));
    }
    reports
}

/// Seed of instance `index` in cell `(n, N)`.
pub fn instance_seed(seed: u64, n: usize, terms: usize, index: usize) -> u64 {
    let cell = ((n as u64) << 32) ^ (terms as u64);
    run_rng(seed ^ cell.rotate_left(17), index as u64).next_u64()
}

fn grid_reports(cfg: &ReproduceConfig) -> Result<Vec<RunReport>> {
    if cfg.grid_n.is_empty() || cfg.grid_terms.is_empty() {
        return Err(Error::InvalidConfig("empty grid".into()));
    }
    let mut reports = Vec::new();
    for &n in &cfg.grid_n {
        for &terms in &cfg.grid_terms {
            let per_instance = map_indexed(cfg.exec, cfg.runs, |i| {
                let seed = instance_seed(cfg.seed, n, terms, i);
                let setup = generate_instance(&GenSpec::new(n, terms, seed)).and_then(|g| {
                    let mut rng = run_rng(seed, 1);
                    let y0 = random_start(g.problem.region(), &mut rng)?;
                    Ok((g.problem, y0))
                });
                cfg.algorithms
                    .iter()
                    .map(|&alg| {
                        let mut summary = match &setup {
                            Ok((problem, y0)) => {
                                let solver = SolverConfig {
                                    algorithm: alg,
                                    ..cfg.solver.clone()
                                };
                                timed_run(problem, y0, &solver, i, None)
                            }
                            Err(e) => RunSummary::from_error(i, e, 0.0),
                        };
                        summary.instance_seed = Some(seed);
                        summary
                    })
                    .collect::<Vec<_>>()
            });
            for (a, &alg) in cfg.algorithms.iter().enumerate() {
                let runs = per_instance.iter().map(|r| r[a].clone()).collect();
                reports.push(RunReport::new("paper3", alg, Some((n, terms)), runs));
            }
        }
    }
    Ok(reports)
}
