//! Global solver for sum-of-ratios problems
//! `min/max Σᵢ fᵢ(x)/hᵢ(x)` over a convex set.
//!
//! The ratio problem is traded for a family of convex subproblems
//! parameterized by `α = (β, u)`; an outer Newton-type iteration drives the
//! residual `ψ(α)` to zero, at which point the subproblem solution is a
//! global optimum of the ratio problem.
//!
//! * [`model`]: problem instances and evaluation.
//! * [`inner`]: log-barrier solver for the parametric subproblem.
//! * [`outer`]: Newton, modified Newton and projection outer iterations.
//! * [`gen`]: seeded random instances built from Householder reflectors.
//! * [`oracle`]: brute-force grid search for low-dimensional checks.
//! * [`problem_file`], [`report`], [`reproduce`]: file format, reports and
//!   experiment harness behind the `sumratio` binary.

pub mod builtin;
pub mod error;
pub mod exec;
pub mod gen;
pub mod inner;
pub mod model;
pub mod oracle;
pub mod outer;
pub mod phase1;
pub mod problem_file;
pub mod report;
pub mod reproduce;

pub use error::{Error, Result};
pub use exec::Execution;
pub use inner::{solve_subproblem, InnerConfig, SubproblemSolution};
pub use model::{FeasibleRegion, ParamVector, Problem, QuadAffine, RatioTerm, Sense};
pub use outer::{solve, Algorithm, IterationRecord, Solution, SolverConfig, Status};
pub use oracle::{grid_search, GridResult};
pub use problem_file::parse_problem_file;
pub use report::{format_report, ReportStyle, RunReport};
pub use reproduce::{run_reproduce, Experiment, ReproduceConfig};
