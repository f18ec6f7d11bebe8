//! Parametric convex subproblem solver.
//!
//! For fixed `α = (β, u)` the subproblem optimizes
//! `Σᵢ uᵢ (fᵢ(x) − βᵢ hᵢ(x))` over the feasible region (minimized for
//! `Min` problems, maximized for `Max`). It is solved with a log-barrier
//! interior-point method: for increasing `t` the barrier function
//! `t·φ(x) − Σₖ log sₖ(x)` is minimized by damped Newton steps, where `φ`
//! is the objective in minimization form and `sₖ` are the constraint slacks.
//! The method stops once the duality gap `m/t` drops below `kkt_tol`.

use log::debug;
use nalgebra::{Cholesky, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::{Matrix, ParamVector, Problem, RatioTerm, SmoothFn, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct InnerConfig {
    /// Target KKT residual (duality gap and stationarity).
    pub kkt_tol: f64,
    /// Factor applied to `t` after each centering stage.
    pub barrier_mu: f64,
    pub initial_t: f64,
    /// Newton steps allowed per centering stage.
    pub max_newton: usize,
    /// Step of the central-difference Hessian for callbacks without one.
    pub fd_hessian_step: f64,
}

impl Default for InnerConfig {
    fn default() -> Self {
        InnerConfig {
            kkt_tol: 1e-9,
            barrier_mu: 10.0,
            initial_t: 1.0,
            max_newton: 200,
            fd_hessian_step: 1e-5,
        }
    }
}

impl InnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kkt_tol > 0.0) {
            return Err(Error::InvalidConfig("kkt_tol must be positive".into()));
        }
        if !(self.barrier_mu > 1.0) {
            return Err(Error::InvalidConfig("barrier_mu must exceed 1".into()));
        }
        if !(self.initial_t > 0.0) {
            return Err(Error::InvalidConfig("initial_t must be positive".into()));
        }
        if self.max_newton == 0 {
            return Err(Error::InvalidConfig("max_newton must be at least 1".into()));
        }
        if !(self.fd_hessian_step > 0.0) {
            return Err(Error::InvalidConfig("fd_hessian_step must be positive".into()));
        }
        Ok(())
    }
}

/// Barrier dual estimates, one per constraint, in the same order as the
/// region's constraints: linear rows, finite lower bounds, finite upper
/// bounds, smooth constraints.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Multipliers {
    pub linear: Vec<f64>,
    pub lower: Vec<(usize, f64)>,
    pub upper: Vec<(usize, f64)>,
    pub smooth: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub x: Vector,
    /// `Σᵢ uᵢ (fᵢ(x) − βᵢ hᵢ(x))` at `x`, in the problem's own sense.
    pub objective: f64,
    pub kkt_residual: f64,
    pub barrier_outer_iters: usize,
    pub newton_iters: usize,
    pub multipliers: Multipliers,
    /// Objective after each centering stage (in the problem's own sense).
    pub stage_objectives: Vec<f64>,
    /// Flat curvature along the active face: the optimum may not be unique.
    pub non_unique_suspected: bool,
}

/// Value and gradient of `Σᵢ uᵢ (fᵢ(x) − βᵢ hᵢ(x))` in the problem's own
/// sense (no sign flip for maximization).
pub fn subproblem_value_grad(problem: &Problem, alpha: &ParamVector, x: &Vector) -> Result<(f64, Vector)> {
    check_alpha(problem, alpha)?;
    let mut value = 0.0;
    let mut grad = Vector::zeros(problem.dim());
    for (i, term) in problem.terms().iter().enumerate() {
        let e = term.eval_unchecked(x);
        let (u, b) = (alpha.u[i], alpha.beta[i]);
        value += u * (e.f - b * e.h);
        grad += (e.grad_f - e.grad_h * b) * u;
    }
    Ok((value, grad))
}

fn check_alpha(problem: &Problem, alpha: &ParamVector) -> Result<()> {
    let n = problem.term_count();
    if alpha.beta.len() != n || alpha.u.len() != n {
        return Err(Error::DimensionMismatch {
            what: "parameter vector".into(),
            expected: n,
            got: alpha.beta.len().min(alpha.u.len()),
        });
    }
    if !alpha.in_omega() {
        return Err(Error::InvalidConfig("parameter vector lies outside Ω".into()));
    }
    Ok(())
}

/// The subproblem objective in minimization form, with the quadratic-affine
/// terms folded into a single quadratic.
struct ParamObjective<'a> {
    problem: &'a Problem,
    sign: f64,
    alpha: &'a ParamVector,
    quad_h: Matrix,
    quad_g: Vector,
    quad_c: f64,
    callbacks: Vec<usize>,
    fd_step: f64,
}

impl<'a> ParamObjective<'a> {
    fn new(problem: &'a Problem, alpha: &'a ParamVector, fd_step: f64) -> Self {
        let n = problem.dim();
        let mut quad_h = Matrix::zeros(n, n);
        let mut quad_g = Vector::zeros(n);
        let mut quad_c = 0.0;
        let mut callbacks = Vec::new();
        for (i, term) in problem.terms().iter().enumerate() {
            let (u, b) = (alpha.u[i], alpha.beta[i]);
            match term {
                RatioTerm::QuadAffine(t) => {
                    quad_h += &t.a0 * u;
                    quad_g += (&t.q0 - &t.c * b) * u;
                    quad_c += u * (t.r0 - b * t.d);
                }
                RatioTerm::Callback(_) => callbacks.push(i),
            }
        }
        ParamObjective {
            problem,
            sign: problem.sense().sign(),
            alpha,
            quad_h,
            quad_g,
            quad_c,
            callbacks,
            fd_step,
        }
    }

    fn value(&self, x: &Vector) -> f64 {
        let mut v = 0.5 * x.dot(&(&self.quad_h * x)) + self.quad_g.dot(x) + self.quad_c;
        for &i in &self.callbacks {
            let (f, h) = self.problem.terms()[i].values(x);
            v += self.alpha.u[i] * (f - self.alpha.beta[i] * h);
        }
        self.sign * v
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let mut g = &self.quad_h * x + &self.quad_g;
        for &i in &self.callbacks {
            let e = self.problem.terms()[i].eval_unchecked(x);
            g += (e.grad_f - e.grad_h * self.alpha.beta[i]) * self.alpha.u[i];
        }
        g * self.sign
    }

    fn callback_gradient(&self, i: usize, x: &Vector) -> Vector {
        let e = self.problem.terms()[i].eval_unchecked(x);
        (e.grad_f - e.grad_h * self.alpha.beta[i]) * self.alpha.u[i]
    }

    fn hessian(&self, x: &Vector) -> Matrix {
        let mut h = self.quad_h.clone();
        for &i in &self.callbacks {
            let (hf, hh) = self.problem.terms()[i].hessians(x);
            let (u, b) = (self.alpha.u[i], self.alpha.beta[i]);
            match (hf, hh) {
                (Some(hf), Some(hh)) => h += (hf - hh * b) * u,
                _ => h += fd_hessian(|y| self.callback_gradient(i, y), x, self.fd_step),
            }
        }
        h * self.sign
    }
}

/// Symmetric central-difference Hessian from a gradient oracle.
pub fn fd_hessian<G: Fn(&Vector) -> Vector>(grad: G, x: &Vector, step: f64) -> Matrix {
    let n = x.len();
    let mut h = Matrix::zeros(n, n);
    for j in 0..n {
        let d = step * (1.0 + x[j].abs());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += d;
        xm[j] -= d;
        let col = (grad(&xp) - grad(&xm)) / (2.0 * d);
        h.set_column(j, &col);
    }
    (&h + h.transpose()) * 0.5
}

fn smooth_hessian(g: &dyn SmoothFn, x: &Vector, step: f64) -> Matrix {
    g.eval(x)
        .hessian
        .unwrap_or_else(|| fd_hessian(|y| g.eval(y).gradient, x, step))
}

/// Constraint slacks at a point, in region order.
struct Slacks {
    linear: Vector,
    lower: Vec<(usize, f64)>,
    upper: Vec<(usize, f64)>,
    smooth: Vec<f64>,
}

impl Slacks {
    fn at(problem: &Problem, x: &Vector) -> Self {
        let r = problem.region();
        let linear = &r.lin_b - &r.lin_a * x;
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for i in 0..r.dim() {
            if r.box_lo[i].is_finite() {
                lower.push((i, x[i] - r.box_lo[i]));
            }
            if r.box_hi[i].is_finite() {
                upper.push((i, r.box_hi[i] - x[i]));
            }
        }
        let smooth = r.smooth.iter().map(|g| -g.value(x)).collect();
        Slacks {
            linear,
            lower,
            upper,
            smooth,
        }
    }

    fn all(&self) -> impl Iterator<Item = f64> + '_ {
        self.linear
            .iter()
            .copied()
            .chain(self.lower.iter().map(|p| p.1))
            .chain(self.upper.iter().map(|p| p.1))
            .chain(self.smooth.iter().copied())
    }

    fn strictly_positive(&self) -> bool {
        self.all().all(|s| s > 0.0)
    }

    fn log_barrier(&self) -> f64 {
        -self.all().map(f64::ln).sum::<f64>()
    }
}

struct Barrier<'a> {
    problem: &'a Problem,
    objective: ParamObjective<'a>,
    fd_step: f64,
}

impl Barrier<'_> {
    fn centering_value(&self, t: f64, x: &Vector) -> Option<f64> {
        let s = Slacks::at(self.problem, x);
        if !s.strictly_positive() {
            return None;
        }
        Some(t * self.objective.value(x) + s.log_barrier())
    }

    /// Newton direction for `t·φ − Σ log s` and its squared decrement.
    ///
    /// General rows go through the augmented system
    ///
    /// ```text
    /// [ H    Gᵀ   ] [d]   [−(∇φ + b/t)]
    /// [ G  −t·S²  ] [v] = [    −s     ]
    /// ```
    ///
    /// (the Newton equations divided by `t`, with `H = ∇²φ + Σ ∇²gⱼ/(t·sⱼ)`
    /// plus the diagonal box barrier `/t`), which stays well scaled when
    /// active slacks reach 1e-11 and the reduced Hessian would not.
    fn newton_step(&self, t: f64, x: &Vector) -> Result<(Vector, f64)> {
        let r = self.problem.region();
        let n = self.problem.dim();
        let s = Slacks::at(self.problem, x);
        let obj_hess = self.objective.hessian(x);
        let mut h = obj_hess.clone();
        let mut rhs_top = -self.objective.gradient(x);
        for &(i, sl) in &s.lower {
            rhs_top[i] += 1.0 / (t * sl);
            h[(i, i)] += 1.0 / (t * sl * sl);
        }
        for &(i, sl) in &s.upper {
            rhs_top[i] -= 1.0 / (t * sl);
            h[(i, i)] += 1.0 / (t * sl * sl);
        }
        let mut rows: Vec<(Vector, f64)> = r
            .lin_a
            .row_iter()
            .zip(s.linear.iter())
            .map(|(a, &sl)| (a.transpose(), sl))
            .collect();
        for (g, &sl) in r.smooth.iter().zip(&s.smooth) {
            h += smooth_hessian(g.as_ref(), x, self.fd_step) / (t * sl);
            rows.push((g.eval(x).gradient, sl));
        }
        let m = rows.len();
        let mut k = Matrix::zeros(n + m, n + m);
        k.view_mut((0, 0), (n, n)).copy_from(&h);
        let mut rhs = Vector::zeros(n + m);
        rhs.rows_mut(0, n).copy_from(&rhs_top);
        for (j, (a, sl)) in rows.iter().enumerate() {
            for i in 0..n {
                k[(n + j, i)] = a[i];
                k[(i, n + j)] = a[i];
            }
            k[(n + j, n + j)] = -t * sl * sl;
            rhs[n + j] = -sl;
        }
        // Symmetric row/column equilibration.
        let scale = Vector::from_fn(n + m, |i, _| {
            let amax = k.row(i).amax();
            if amax > 0.0 {
                1.0 / amax.sqrt()
            } else {
                1.0
            }
        });
        let ks = Matrix::from_fn(n + m, n + m, |i, j| k[(i, j)] * scale[i] * scale[j]);
        let rs = rhs.component_mul(&scale);
        let sol = ks
            .clone()
            .lu()
            .solve(&rs)
            .filter(|z| z.iter().all(|v| v.is_finite()))
            .or_else(|| ks.full_piv_lu().solve(&rs))
            .ok_or_else(|| self.nonconvex_or_singular(&obj_hess))?;
        let d = sol.rows(0, n).component_mul(&scale.rows(0, n));

        // dᵀ(∇² of the barrier function)d, assembled term by term.
        let mut dec = t * d.dot(&(&h * &d));
        for (a, sl) in &rows {
            dec += (a.dot(&d) / sl).powi(2);
        }
        if !(dec >= -1e-12 * (1.0 + t * d.norm_squared())) {
            return Err(self.nonconvex_or_singular(&obj_hess));
        }
        Ok((d, dec.max(0.0)))
    }

    fn nonconvex_or_singular(&self, obj_hess: &Matrix) -> Error {
        let min_eig = min_eigenvalue(obj_hess);
        if min_eig < -1e-8 * obj_hess.amax().max(1.0) {
            Error::NonConvexDetected { min_eigenvalue: min_eig }
        } else {
            Error::MaxIterations {
                iters: 0,
                decrement: f64::NAN,
            }
        }
    }

    /// Largest step along `d` keeping the linear and box slacks positive.
    fn max_linear_step(&self, x: &Vector, d: &Vector) -> f64 {
        let r = self.problem.region();
        let s = Slacks::at(self.problem, x);
        let ad = &r.lin_a * d;
        let mut step = f64::INFINITY;
        for k in 0..ad.len() {
            if ad[k] > 0.0 {
                step = step.min(s.linear[k] / ad[k]);
            }
        }
        for &(i, sl) in &s.lower {
            if d[i] < 0.0 {
                step = step.min(sl / -d[i]);
            }
        }
        for &(i, sl) in &s.upper {
            if d[i] > 0.0 {
                step = step.min(sl / d[i]);
            }
        }
        step
    }
}

fn min_eigenvalue(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

const NEWTON_TOL: f64 = 1e-10;
const ARMIJO: f64 = 0.25;

/// Solves the subproblem for `alpha` from the strictly feasible `x_start`.
///
/// For `Max` problems the negated objective is minimized; the returned
/// `objective` is reported in the problem's own sense.
pub fn solve_subproblem(
    problem: &Problem,
    alpha: &ParamVector,
    x_start: &Vector,
    cfg: &InnerConfig,
) -> Result<SubproblemSolution> {
    cfg.validate()?;
    check_alpha(problem, alpha)?;
    if x_start.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            what: "x_start".into(),
            expected: problem.dim(),
            got: x_start.len(),
        });
    }
    let margin = problem.region().min_margin(x_start);
    if !(margin > 0.0) {
        return Err(Error::Infeasible {
            best_violation: -margin,
        });
    }

    let barrier = Barrier {
        problem,
        objective: ParamObjective::new(problem, alpha, cfg.fd_hessian_step),
        fd_step: cfg.fd_hessian_step,
    };
    check_quadratic_convexity(&barrier.objective)?;

    let m = problem.region().constraint_count();
    let mut x = x_start.clone();
    let mut t = cfg.initial_t;
    let mut newton_iters = 0;
    let mut stages = 0;
    let mut stage_objectives = Vec::new();
    loop {
        stages += 1;
        newton_iters += center(&barrier, t, &mut x, cfg.max_newton)?;
        stage_objectives.push(barrier.objective.sign * barrier.objective.value(&x));
        if m == 0 || (m as f64) / t <= cfg.kkt_tol {
            break;
        }
        t *= cfg.barrier_mu;
    }

    let multipliers = refit_active_multipliers(
        problem,
        &barrier.objective,
        &x,
        barrier_multipliers(problem, &x, if m == 0 { 1.0 } else { t }),
    );
    let kkt_residual = kkt_residual(problem, alpha, &x, &multipliers)?;
    let non_unique_suspected = flat_active_face(&barrier, &x);
    debug!(
        "subproblem solved: {stages} stages, {newton_iters} Newton steps, kkt {kkt_residual:.3e}"
    );
    Ok(SubproblemSolution {
        objective: barrier.objective.sign * barrier.objective.value(&x),
        x,
        kkt_residual,
        barrier_outer_iters: stages,
        newton_iters,
        multipliers,
        stage_objectives,
        non_unique_suspected,
    })
}

fn check_quadratic_convexity(obj: &ParamObjective<'_>) -> Result<()> {
    let h = &obj.quad_h * obj.sign;
    let n = h.nrows();
    let scale = h.amax().max(1.0);
    if Cholesky::new(&h + Matrix::identity(n, n) * (1e-10 * scale)).is_some() {
        return Ok(());
    }
    let min_eig = min_eigenvalue(&h);
    if min_eig < -1e-8 * scale {
        Err(Error::NonConvexDetected { min_eigenvalue: min_eig })
    } else {
        Ok(())
    }
}

/// Damped Newton centering for fixed `t`. Returns the number of steps.
const STALL_DECREMENT: f64 = 1e-4;

fn center(barrier: &Barrier<'_>, t: f64, x: &mut Vector, max_newton: usize) -> Result<usize> {
    let mut decrement = f64::INFINITY;
    for it in 0..max_newton {
        let (d, dec) = barrier.newton_step(t, x)?;
        decrement = dec;
        let gd = -dec;
        if !(decrement.is_finite()) {
            return Err(Error::MaxIterations { iters: it, decrement });
        }
        if decrement / 2.0 <= NEWTON_TOL {
            return Ok(it);
        }
        let current = barrier
            .centering_value(t, x)
            .expect("iterate stays strictly feasible");
        // The direction is below the spacing of the iterate: nothing left to gain.
        let resolution = f64::EPSILON * x.amax().max(1.0);
        if decrement < STALL_DECREMENT && d.amax() <= 4.0 * resolution {
            return Ok(it);
        }
        let mut step = (0.99 * barrier.max_linear_step(x, &d)).min(1.0);
        let mut accepted = false;
        while step * d.amax() > resolution {
            let trial = &*x + &d * step;
            if let Some(v) = barrier.centering_value(t, &trial) {
                let sufficient = v <= current + ARMIJO * step * gd;
                // Near the center rounding dominates the decrease test.
                let flat = decrement < 1e-6 && v <= current + 1e-12 * current.abs().max(1.0);
                if sufficient || flat {
                    *x = trial;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            // No representable progress left along the Newton direction.
            if decrement < STALL_DECREMENT {
                return Ok(it + 1);
            }
            return Err(Error::MaxIterations { iters: it + 1, decrement });
        }
    }
    Err(Error::MaxIterations {
        iters: max_newton,
        decrement,
    })
}

/// Dual estimates `λₖ = 1/(t·sₖ)` from the central path.
fn barrier_multipliers(problem: &Problem, x: &Vector, t: f64) -> Multipliers {
    let s = Slacks::at(problem, x);
    Multipliers {
        linear: s.linear.iter().map(|v| 1.0 / (t * v)).collect(),
        lower: s.lower.iter().map(|&(i, v)| (i, 1.0 / (t * v))).collect(),
        upper: s.upper.iter().map(|&(i, v)| (i, 1.0 / (t * v))).collect(),
        smooth: s.smooth.iter().map(|v| 1.0 / (t * v)).collect(),
    }
}

const ACTIVE_TOL: f64 = 1e-6;

/// Replaces the barrier estimates of the active constraints with the
/// least-squares multipliers that best cancel the objective gradient.
///
/// Far along the central path `1/(t·sₖ)` loses digits because the slack is
/// tiny; the refit is exact up to rounding in the gradients.
fn refit_active_multipliers(problem: &Problem, obj: &ParamObjective<'_>, x: &Vector, mut mult: Multipliers) -> Multipliers {
    let r = problem.region();
    let n = problem.dim();
    let s = Slacks::at(problem, x);
    // (gradient, slot) for each active constraint.
    enum Slot {
        Linear(usize),
        Lower(usize),
        Upper(usize),
        Smooth(usize),
    }
    let mut active: Vec<(Vector, Slot)> = Vec::new();
    let mut residual = obj.gradient(x);
    for k in 0..r.lin_a.nrows() {
        let a = r.lin_a.row(k).transpose();
        if s.linear[k] <= ACTIVE_TOL * (1.0 + r.lin_b[k].abs()) {
            active.push((a, Slot::Linear(k)));
        } else {
            residual += a * mult.linear[k];
        }
    }
    for (j, &(i, sl)) in s.lower.iter().enumerate() {
        let mut e = Vector::zeros(n);
        e[i] = -1.0;
        if sl <= ACTIVE_TOL * (1.0 + x[i].abs()) {
            active.push((e, Slot::Lower(j)));
        } else {
            residual += e * mult.lower[j].1;
        }
    }
    for (j, &(i, sl)) in s.upper.iter().enumerate() {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        if sl <= ACTIVE_TOL * (1.0 + x[i].abs()) {
            active.push((e, Slot::Upper(j)));
        } else {
            residual += e * mult.upper[j].1;
        }
    }
    for (j, g) in r.smooth.iter().enumerate() {
        let grad = g.eval(x).gradient;
        if s.smooth[j] <= ACTIVE_TOL {
            active.push((grad, Slot::Smooth(j)));
        } else {
            residual += grad * mult.smooth[j];
        }
    }
    if active.is_empty() {
        return mult;
    }
    let g = Matrix::from_fn(n, active.len(), |i, k| active[k].0[i]);
    let Ok(lambda) = g.svd(true, true).solve(&(-residual), 1e-12) else {
        return mult;
    };
    if lambda.iter().any(|l| !(*l >= 0.0)) {
        return mult;
    }
    for ((_, slot), &l) in active.iter().zip(lambda.iter()) {
        match *slot {
            Slot::Linear(k) => mult.linear[k] = l,
            Slot::Lower(j) => mult.lower[j].1 = l,
            Slot::Upper(j) => mult.upper[j].1 = l,
            Slot::Smooth(j) => mult.smooth[j] = l,
        }
    }
    mult
}

/// KKT residual of the subproblem (minimization form) at `(x, λ)`:
/// the largest of stationarity `‖∇φ + Σ λₖ ∇cₖ‖∞`, complementarity
/// `Σ λₖ sₖ`, primal violation, and dual sign violation.
pub fn kkt_residual(problem: &Problem, alpha: &ParamVector, x: &Vector, mult: &Multipliers) -> Result<f64> {
    let r = problem.region();
    let (_, grad) = subproblem_value_grad(problem, alpha, x)?;
    let mut station = grad * problem.sense().sign();
    let mut comp = 0.0;
    let mut primal: f64 = 0.0;
    let mut dual: f64 = 0.0;

    let slack_lin = &r.lin_b - &r.lin_a * x;
    for (k, &lam) in mult.linear.iter().enumerate() {
        station += r.lin_a.row(k).transpose() * lam;
        comp += lam * slack_lin[k];
        primal = primal.max(-slack_lin[k]);
        dual = dual.max(-lam);
    }
    for &(i, lam) in &mult.lower {
        station[i] -= lam;
        let s = x[i] - r.box_lo[i];
        comp += lam * s;
        primal = primal.max(-s);
        dual = dual.max(-lam);
    }
    for &(i, lam) in &mult.upper {
        station[i] += lam;
        let s = r.box_hi[i] - x[i];
        comp += lam * s;
        primal = primal.max(-s);
        dual = dual.max(-lam);
    }
    for (g, &lam) in r.smooth.iter().zip(&mult.smooth) {
        let e = g.eval(x);
        station += e.gradient * lam;
        comp += lam * -e.value;
        primal = primal.max(e.value);
        dual = dual.max(-lam);
    }
    Ok(station.amax().max(comp.abs()).max(primal).max(dual))
}

/// Checks for a direction of (near) zero objective curvature inside the
/// face spanned by the active constraints.
fn flat_active_face(barrier: &Barrier<'_>, x: &Vector) -> bool {
    let problem = barrier.problem;
    let r = problem.region();
    let n = problem.dim();
    let s = Slacks::at(problem, x);
    let active_tol = ACTIVE_TOL;
    let mut rows: Vec<Vector> = Vec::new();
    for k in 0..r.lin_a.nrows() {
        if s.linear[k] <= active_tol * (1.0 + r.lin_b[k].abs()) {
            rows.push(r.lin_a.row(k).transpose());
        }
    }
    for &(i, sl) in s.lower.iter().chain(&s.upper) {
        if sl <= active_tol * (1.0 + x[i].abs()) {
            let mut e = Vector::zeros(n);
            e[i] = 1.0;
            rows.push(e);
        }
    }
    for (g, &sl) in r.smooth.iter().zip(&s.smooth) {
        if sl <= active_tol {
            rows.push(g.eval(x).gradient);
        }
    }
    let hess = barrier.objective.hessian(x);
    let scale = hess.amax().max(1.0);
    let mut projector = Matrix::identity(n, n);
    if !rows.is_empty() {
        let g = Matrix::from_fn(rows.len(), n, |k, j| rows[k][j]);
        let svd = g.svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let smax = svd.singular_values.max();
        for (k, sv) in svd.singular_values.iter().enumerate() {
            if *sv > 1e-10 * smax.max(1.0) {
                let v = v_t.row(k).transpose();
                projector -= &v * v.transpose();
            }
        }
    }
    let free_dims = projector.trace().round() as usize;
    if free_dims == 0 {
        return false;
    }
    let penalized = &projector * &hess * &projector + (Matrix::identity(n, n) - &projector) * (10.0 * scale);
    let eig = SymmetricEigen::<f64, Dyn>::new((&penalized + penalized.transpose()) * 0.5);
    eig.eigenvalues.min() < 1e-8 * scale
}
