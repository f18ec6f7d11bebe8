//! Outer iterations on the parameter vector `α = (β, u)`.
//!
//! A point `x` solves the sum-of-ratios problem when it solves the
//! parametric subproblem for some `α` at which the residual system
//!
//! ```text
//! ψᵢ(α)     = −fᵢ(x(α)) + βᵢ hᵢ(x(α))
//! ψ_{N+i}(α) = −1        + uᵢ hᵢ(x(α))
//! ```
//!
//! vanishes. The Jacobian used for the Newton step is the diagonal
//! `(h₁ … h_N, h₁ … h_N)` evaluated at `x(α)`, which makes the full Newton
//! step equal to the fixed-point map `A(α) = (fᵢ/hᵢ, 1/hᵢ)`.
//!
//! Three outer schemes are offered: plain Newton (`N`), Newton with a
//! backtracking step on `‖ψ‖` (`MN`), and the projection iteration
//! `α ← π_Ω(α − λψ(α))` (`PROJ`).

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner::{solve_subproblem, InnerConfig, SubproblemSolution};
use crate::model::{ParamVector, Problem, Vector, DEFAULT_U_FLOOR};
use crate::phase1::{find_feasible_point, PhaseOne};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    /// Full Newton steps (`λₖ ≡ 1`).
    #[serde(rename = "N")]
    Newton,
    /// Newton with backtracking `λₖ = ξ^i`.
    #[serde(rename = "MN")]
    ModifiedNewton,
    /// Projected residual iteration.
    #[serde(rename = "PROJ")]
    Projection,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Newton => "N",
            Algorithm::ModifiedNewton => "MN",
            Algorithm::Projection => "PROJ",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "n" | "newton" => Ok(Algorithm::Newton),
            "mn" | "modified-newton" => Ok(Algorithm::ModifiedNewton),
            "proj" | "projection" => Ok(Algorithm::Projection),
            other => Err(Error::InvalidConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Stop once `‖ψ‖₂ ≤ psi_tol`.
    pub psi_tol: f64,
    /// Backtracking factor, in (0, 1).
    pub xi: f64,
    /// Sufficient-decrease constant, in (0, 1).
    pub eps: f64,
    pub max_outer: usize,
    pub max_backtracks: usize,
    /// Step of the projection method. Convergence needs it small relative
    /// to the (unknown) Lipschitz constant of `ψ`.
    pub lambda_proj: f64,
    /// Lower bound `l` of the `u` block.
    pub u_floor: f64,
    pub inner: InnerConfig,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            algorithm: Algorithm::ModifiedNewton,
            psi_tol: 1e-6,
            xi: 0.5,
            eps: 0.1,
            max_outer: 100,
            max_backtracks: 30,
            lambda_proj: 0.1,
            u_floor: DEFAULT_U_FLOOR,
            inner: InnerConfig::default(),
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_algorithm(algorithm: Algorithm) -> Self {
        SolverConfig {
            algorithm,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.inner.validate()?;
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(Error::InvalidConfig(format!("xi = {} must lie in (0, 1)", self.xi)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidConfig(format!("eps = {} must lie in (0, 1)", self.eps)));
        }
        if !(self.psi_tol > self.inner.kkt_tol) {
            return Err(Error::InvalidConfig(format!(
                "psi_tol = {} must exceed the inner kkt_tol = {}",
                self.psi_tol, self.inner.kkt_tol
            )));
        }
        if !(self.lambda_proj > 0.0) {
            return Err(Error::InvalidConfig("lambda_proj must be positive".into()));
        }
        if !(self.u_floor > 0.0) {
            return Err(Error::InvalidConfig("u_floor must be positive".into()));
        }
        if self.max_backtracks == 0 {
            return Err(Error::InvalidConfig("max_backtracks must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Converged,
    MaxOuter,
    LineSearchFailed,
    InnerFailed,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// State at `αᵏ`, together with the step that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub alpha: ParamVector,
    pub x: Vector,
    pub psi_norm: f64,
    /// Step length that produced `αᵏ` (1 for `k = 0`).
    pub lambda_k: f64,
    /// Subproblem solves spent reaching `αᵏ`, rejected trials included.
    pub subproblem_solves_this_iter: usize,
    /// Seconds since the start of the solve.
    pub elapsed: f64,
    pub non_unique_suspected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x_star: Vector,
    pub f_star: f64,
    pub alpha_star: ParamVector,
    pub status: Status,
    pub trace: Vec<IterationRecord>,
    /// Number of parameter updates.
    pub outer_iters: usize,
    /// Subproblem solves spent on updates (excludes the initial solve at `α⁰`).
    pub total_subproblem_solves: usize,
    pub psi_norm: f64,
    /// The error behind `InnerFailed`.
    pub failure: Option<Error>,
}

impl Solution {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

/// `β⁰ = f(y⁰)/h(y⁰)`, `u⁰ = 1/h(y⁰)`, projected onto `Ω`.
pub fn init_alpha(problem: &Problem, y0: &Vector, u_floor: f64) -> Result<ParamVector> {
    newton_map(problem, y0, u_floor)
}

/// Residual `ψ(α)` evaluated at the subproblem solution `x_alpha`.
pub fn psi(problem: &Problem, alpha: &ParamVector, x_alpha: &Vector) -> Result<Vector> {
    let vals = problem.term_values(x_alpha)?;
    let n = vals.len();
    Ok(Vector::from_fn(2 * n, |k, _| {
        if k < n {
            let (f, h) = vals[k];
            -f + alpha.beta[k] * h
        } else {
            let (_, h) = vals[k - n];
            -1.0 + alpha.u[k - n] * h
        }
    }))
}

/// Diagonal of the Jacobian: `(h₁ … h_N, h₁ … h_N)` at `x_alpha`.
pub fn jacobian_diag(problem: &Problem, x_alpha: &Vector) -> Result<Vector> {
    let vals = problem.term_values(x_alpha)?;
    let n = vals.len();
    Ok(Vector::from_fn(2 * n, |k, _| vals[k % n].1))
}

/// The fixed-point map `A`: `β = (fᵢ/hᵢ)`, `u = (1/hᵢ)` at `x_k`, projected onto `Ω`.
pub fn newton_map(problem: &Problem, x_k: &Vector, u_floor: f64) -> Result<ParamVector> {
    let vals = problem.term_values(x_k)?;
    let beta = Vector::from_iterator(vals.len(), vals.iter().map(|(f, h)| f / h));
    let u = Vector::from_iterator(vals.len(), vals.iter().map(|(_, h)| 1.0 / h));
    let (alpha, moved) = ParamVector::clamped(beta, u, u_floor);
    if moved > 0 {
        debug!("newton map: {moved} components clamped into Ω");
    }
    Ok(alpha)
}

/// Damped Newton update `αᵏ⁺¹ = (1 − λ)αᵏ + λ·A(αᵏ)`, projected onto `Ω`.
pub fn mn_update(alpha_k: &ParamVector, x_k: &Vector, lambda_k: f64, problem: &Problem) -> Result<ParamVector> {
    let target = newton_map(problem, x_k, alpha_k.l)?;
    let beta = &alpha_k.beta * (1.0 - lambda_k) + &target.beta * lambda_k;
    let u = &alpha_k.u * (1.0 - lambda_k) + &target.u * lambda_k;
    let (alpha, moved) = ParamVector::clamped(beta, u, alpha_k.l);
    if moved > 0 {
        debug!("damped update: {moved} components clamped into Ω");
    }
    Ok(alpha)
}

/// `π_Ω(α − λψ)`.
pub fn projection_step(alpha_k: &ParamVector, psi_k: &Vector, lambda: f64) -> ParamVector {
    let stacked = alpha_k.stacked() - psi_k * lambda;
    let raw = ParamVector::from_stacked(&stacked, alpha_k.l);
    ParamVector::clamped(raw.beta, raw.u, alpha_k.l).0
}

/// Margin below which a warm start is pulled toward the phase-I point.
const WARM_START_MARGIN: f64 = 1e-10;
const WARM_START_PULL: f64 = 1e-3;

/// Previous iterate, nudged into the interior if it sits on a constraint.
pub fn warm_start(problem: &Problem, x: &Vector, interior: &Vector) -> Vector {
    let region = problem.region();
    if region.min_margin(x) >= WARM_START_MARGIN {
        return x.clone();
    }
    let pulled = x + (interior - x) * WARM_START_PULL;
    if region.min_margin(&pulled) > 0.0 {
        pulled
    } else {
        interior.clone()
    }
}

/// Outcome of one backtracking search.
#[derive(Debug, Clone)]
pub struct LineSearch {
    pub lambda: f64,
    pub alpha: ParamVector,
    pub solution: SubproblemSolution,
    pub psi_norm: f64,
    pub solves_used: usize,
}

/// Finds the largest `λ = ξⁱ` with `‖ψ(αᵏ + λpᵏ)‖ ≤ (1 − ελ)‖ψ(αᵏ)‖`.
///
/// Every trial costs one subproblem solve, started from `x_k` (warm).
/// Fails with [`Error::LineSearchFailed`] after `max_backtracks` trials.
pub fn line_search(
    problem: &Problem,
    alpha_k: &ParamVector,
    x_k: &Vector,
    psi_norm_k: f64,
    interior: &Vector,
    cfg: &SolverConfig,
) -> Result<LineSearch> {
    let start = warm_start(problem, x_k, interior);
    let mut lambda = 1.0;
    for trial in 0..cfg.max_backtracks {
        let alpha = mn_update(alpha_k, x_k, lambda, problem)?;
        let solution = solve_subproblem(problem, &alpha, &start, &cfg.inner)?;
        let psi_norm = psi(problem, &alpha, &solution.x)?.norm();
        if psi_norm <= (1.0 - cfg.eps * lambda) * psi_norm_k {
            return Ok(LineSearch {
                lambda,
                alpha,
                solution,
                psi_norm,
                solves_used: trial + 1,
            });
        }
        lambda *= cfg.xi;
    }
    Err(Error::LineSearchFailed {
        trials: cfg.max_backtracks,
    })
}

/// Runs the configured outer algorithm from `y0` (or from a phase-I point
/// when `y0` is `None`) until `‖ψ‖ ≤ psi_tol` or a limit is hit.
///
/// Invalid input (bad config, infeasible region, nonpositive denominator at
/// `y0`) is an `Err`; algorithmic outcomes are reported through
/// [`Solution::status`].
pub fn solve(problem: &Problem, y0: Option<&Vector>, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    let started = Instant::now();
    let region = problem.region();
    let interior = match find_feasible_point(region) {
        PhaseOne::Feasible { point, .. } => point,
        PhaseOne::Infeasible { best_violation } => return Err(Error::Infeasible { best_violation }),
    };
    let y0 = match y0 {
        Some(y) => {
            if y.len() != problem.dim() {
                return Err(Error::DimensionMismatch {
                    what: "starting point".into(),
                    expected: problem.dim(),
                    got: y.len(),
                });
            }
            y.clone()
        }
        None => interior.clone(),
    };
    let violation = problem.feasibility_residuals(&y0).max_violation;
    if violation > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "starting point violates the constraints by {violation:e}"
        )));
    }

    let mut alpha = init_alpha(problem, &y0, cfg.u_floor)?;
    let first = solve_subproblem(problem, &alpha, &warm_start(problem, &y0, &interior), &cfg.inner)?;
    let mut x = first.x;
    let mut psi_vec = psi(problem, &alpha, &x)?;
    let mut trace = vec![IterationRecord {
        k: 0,
        alpha: alpha.clone(),
        x: x.clone(),
        psi_norm: psi_vec.norm(),
        lambda_k: 1.0,
        subproblem_solves_this_iter: 1,
        elapsed: started.elapsed().as_secs_f64(),
        non_unique_suspected: first.non_unique_suspected,
    }];
    let mut total = 0;
    let mut failure = None;

    let status = loop {
        let k = trace.len() - 1;
        let psi_norm = psi_vec.norm();
        if psi_norm <= cfg.psi_tol {
            break Status::Converged;
        }
        if k >= cfg.max_outer {
            break Status::MaxOuter;
        }
        let step = match cfg.algorithm {
            Algorithm::ModifiedNewton => line_search(problem, &alpha, &x, psi_norm, &interior, cfg)
                .map(|ls| (ls.alpha, ls.solution, ls.lambda, ls.solves_used)),
            Algorithm::Newton => newton_map(problem, &x, cfg.u_floor).and_then(|next| {
                let sol = solve_subproblem(problem, &next, &warm_start(problem, &x, &interior), &cfg.inner)?;
                Ok((next, sol, 1.0, 1))
            }),
            Algorithm::Projection => {
                let next = projection_step(&alpha, &psi_vec, cfg.lambda_proj);
                solve_subproblem(problem, &next, &warm_start(problem, &x, &interior), &cfg.inner)
                    .map(|sol| (next, sol, cfg.lambda_proj, 1))
            }
        };
        let (next_alpha, sol, lambda, solves) = match step {
            Ok(s) => s,
            Err(Error::LineSearchFailed { trials }) => {
                total += trials;
                break Status::LineSearchFailed;
            }
            Err(e) => {
                failure = Some(e);
                break Status::InnerFailed;
            }
        };
        total += solves;
        alpha = next_alpha;
        x = sol.x;
        psi_vec = match psi(problem, &alpha, &x) {
            Ok(p) => p,
            Err(e) => {
                failure = Some(e);
                break Status::InnerFailed;
            }
        };
        trace.push(IterationRecord {
            k: k + 1,
            alpha: alpha.clone(),
            x: x.clone(),
            psi_norm: psi_vec.norm(),
            lambda_k: lambda,
            subproblem_solves_this_iter: solves,
            elapsed: started.elapsed().as_secs_f64(),
            non_unique_suspected: sol.non_unique_suspected,
        });
    };

    let f_star = problem.eval_objective(&x)?;
    Ok(Solution {
        outer_iters: trace.len() - 1,
        psi_norm: psi_vec.norm(),
        x_star: x,
        f_star,
        alpha_star: alpha,
        status,
        trace,
        total_subproblem_solves: total,
        failure,
    })
}

/// `minᵢ hᵢ(x)`, the sampled stand-in for the strong-monotonicity constant.
pub fn delta_hat(problem: &Problem, x: &Vector) -> Result<f64> {
    Ok(problem
        .term_values(x)?
        .into_iter()
        .map(|(_, h)| h)
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{paper_problem_1, paper_problem_2};
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    const L: f64 = DEFAULT_U_FLOOR;

    fn alpha(beta: Vector, u: Vector) -> ParamVector {
        ParamVector { beta, u, l: L }
    }

    #[test]
    fn init_alpha_examples() {
        let a = init_alpha(&paper_problem_1(), &dvector![0.0, 0.0], L).unwrap();
        assert_eq!(a.beta, dvector![0.0, 0.0]);
        assert_eq!(a.u, dvector![1.0, 1.0]);
        let a = init_alpha(&paper_problem_2(), &dvector![1.0, 0.0], L).unwrap();
        assert_eq!(a.beta, dvector![0.5, 0.0]);
        assert_eq!(a.u, dvector![0.5, 1.0]);
    }

    #[test]
    fn psi_examples() {
        let p = paper_problem_2();
        let x = dvector![0.5, 0.5];
        let r = psi(&p, &alpha(dvector![0.4, 0.4], dvector![0.8, 0.8]), &x).unwrap();
        assert!(r.amax() < 1e-15);
        let r = psi(&p, &alpha(dvector![0.0, 0.0], dvector![1.0, 1.0]), &x).unwrap();
        assert_relative_eq!(r, dvector![-0.5, -0.5, 0.25, 0.25], epsilon = 1e-15);
    }

    #[test]
    fn jacobian_examples() {
        let d = jacobian_diag(&paper_problem_2(), &dvector![0.5, 0.5]).unwrap();
        assert_eq!(d, dvector![1.25, 1.25, 1.25, 1.25]);
        let d = jacobian_diag(&paper_problem_1(), &dvector![0.0, 0.0]).unwrap();
        assert_eq!(d, dvector![1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn newton_map_matches_newton_step() {
        let p = paper_problem_2();
        let x = dvector![0.5, 0.5];
        let m = newton_map(&p, &x, L).unwrap();
        assert_relative_eq!(m.beta, dvector![0.4, 0.4], epsilon = 1e-15);
        assert_relative_eq!(m.u, dvector![0.8, 0.8], epsilon = 1e-15);
        let a = alpha(dvector![0.0, 0.0], dvector![1.0, 1.0]);
        let r = psi(&p, &a, &x).unwrap();
        let d = jacobian_diag(&p, &x).unwrap();
        let step = a.stacked() - r.component_div(&d);
        assert_relative_eq!(step, m.stacked(), epsilon = 1e-12);
    }

    #[test]
    fn mn_update_examples() {
        let p = paper_problem_2();
        let x = dvector![0.5, 0.5];
        let a = alpha(dvector![0.0, 0.0], dvector![1.0, 1.0]);
        assert_eq!(mn_update(&a, &x, 1.0, &p).unwrap(), newton_map(&p, &x, L).unwrap());
        let half = mn_update(&a, &x, 0.5, &p).unwrap();
        assert_relative_eq!(half.beta[0], 0.2, epsilon = 1e-15);
        assert_eq!(mn_update(&a, &x, 0.0, &p).unwrap(), a);
    }

    #[test]
    fn projection_examples() {
        let a = alpha(dvector![0.3], dvector![0.7]);
        assert_eq!(projection_step(&a, &dvector![0.0, 0.0], 0.5), a);
        let a = alpha(dvector![0.1], dvector![L]);
        let next = projection_step(&a, &dvector![1.0, 1.0], 0.2);
        assert_eq!(next.beta[0], 0.0);
        assert_eq!(next.u[0], L);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::default();
        cfg.xi = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = SolverConfig::default();
        cfg.psi_tol = 1e-10;
        assert!(cfg.validate().is_err());
        assert_eq!("mn".parse::<Algorithm>().unwrap(), Algorithm::ModifiedNewton);
        assert!("bfgs".parse::<Algorithm>().is_err());
    }

    #[test]
    fn paper_2_newton_from_origin() {
        let p = paper_problem_2();
        let sol = solve(&p, Some(&dvector![0.0, 0.0]), &SolverConfig::with_algorithm(Algorithm::Newton)).unwrap();
        assert!(sol.converged(), "{:?}", sol.status);
        assert!((sol.f_star - 0.8).abs() < 1e-6, "{}", sol.f_star);
        assert!(sol.outer_iters <= 10);
        assert_eq!(sol.total_subproblem_solves, sol.outer_iters);
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let p = paper_problem_2();
        let err = solve(&p, Some(&dvector![1.0, 1.0]), &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }
}
