//! Sum-of-ratios problem instances.
//!
//! A [`Problem`] optimizes `F(x) = Σᵢ fᵢ(x)/hᵢ(x)` over a [`FeasibleRegion`].
//! Terms come in two families: explicit quadratic-over-affine terms
//! ([`QuadAffine`]) and general smooth callbacks ([`CallbackTerm`]).

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Default lower bound `l` on the `u` block of the parameter vector.
pub const DEFAULT_U_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

impl Sense {
    /// +1 for minimization, -1 for maximization.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Min => 1.0,
            Sense::Max => -1.0,
        }
    }

    /// True when `a` is strictly better than `b` under this sense.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Min => a < b,
            Sense::Max => a > b,
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Min => "min",
            Sense::Max => "max",
        })
    }
}

/// Value, gradient and (optionally) Hessian of a smooth scalar function.
#[derive(Debug, Clone)]
pub struct SmoothEval {
    pub value: f64,
    pub gradient: Vector,
    pub hessian: Option<Matrix>,
}

/// A differentiable scalar function of `x`. Implementations must be pure.
pub trait SmoothFn: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn eval(&self, x: &Vector) -> SmoothEval;

    /// Value only. Override when it is cheaper than a full evaluation.
    fn value(&self, x: &Vector) -> f64 {
        self.eval(x).value
    }
}

/// `½ xᵀPx + qᵀx + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub p: Matrix,
    pub q: Vector,
    pub r: f64,
}

impl Quadratic {
    pub fn new(p: Matrix, q: Vector, r: f64) -> Self {
        Quadratic { p, q, r }
    }

    pub fn affine(q: Vector, r: f64) -> Self {
        let n = q.len();
        Quadratic {
            p: Matrix::zeros(n, n),
            q,
            r,
        }
    }
}

impl SmoothFn for Quadratic {
    fn dim(&self) -> usize {
        self.q.len()
    }

    fn eval(&self, x: &Vector) -> SmoothEval {
        let px = &self.p * x;
        SmoothEval {
            value: 0.5 * x.dot(&px) + self.q.dot(x) + self.r,
            gradient: px + &self.q,
            hessian: Some(self.p.clone()),
        }
    }

    fn value(&self, x: &Vector) -> f64 {
        quad_form_value(&self.p, &self.q, self.r, x.as_slice())
    }
}

type EvalFn = dyn Fn(&Vector) -> SmoothEval + Send + Sync;

/// Adapts a closure into a [`SmoothFn`].
#[derive(Clone)]
pub struct FnSmooth {
    dim: usize,
    name: String,
    f: Arc<EvalFn>,
}

impl FnSmooth {
    pub fn new<F>(dim: usize, name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Vector) -> SmoothEval + Send + Sync + 'static,
    {
        FnSmooth {
            dim,
            name: name.into(),
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for FnSmooth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnSmooth")
            .field("dim", &self.dim)
            .field("name", &self.name)
            .finish()
    }
}

impl SmoothFn for FnSmooth {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &Vector) -> SmoothEval {
        (self.f)(x)
    }
}

/// Quadratic numerator over affine denominator:
/// `f(x) = ½xᵀA₀x + q₀ᵀx + r₀`, `h(x) = cᵀx + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadAffine {
    pub a0: Matrix,
    pub q0: Vector,
    pub r0: f64,
    pub c: Vector,
    pub d: f64,
}

/// Which curvature pairing a callback term was written for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermShape {
    /// Convex numerator over concave denominator (minimization problems).
    ConvexOverConcave,
    /// Concave numerator over convex denominator (maximization problems).
    ConcaveOverConvex,
}

impl TermShape {
    pub fn for_sense(sense: Sense) -> Self {
        match sense {
            Sense::Min => TermShape::ConvexOverConcave,
            Sense::Max => TermShape::ConcaveOverConvex,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CallbackTerm {
    pub numerator: Arc<dyn SmoothFn>,
    pub denominator: Arc<dyn SmoothFn>,
    pub shape: TermShape,
}

#[derive(Debug, Clone)]
pub enum RatioTerm {
    QuadAffine(QuadAffine),
    Callback(CallbackTerm),
}

/// Numerator and denominator values with their gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct TermEval {
    pub f: f64,
    pub h: f64,
    pub grad_f: Vector,
    pub grad_h: Vector,
}

impl TermEval {
    pub fn ratio(&self) -> f64 {
        self.f / self.h
    }
}

impl RatioTerm {
    pub fn callback<F, H>(numerator: F, denominator: H, shape: TermShape) -> Self
    where
        F: SmoothFn + 'static,
        H: SmoothFn + 'static,
    {
        RatioTerm::Callback(CallbackTerm {
            numerator: Arc::new(numerator),
            denominator: Arc::new(denominator),
            shape,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            RatioTerm::QuadAffine(t) => t.q0.len(),
            RatioTerm::Callback(t) => t.numerator.dim(),
        }
    }

    fn check_dims(&self) -> Result<()> {
        let n = self.dim();
        let check = |what: &str, got: usize| {
            if got == n {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    what: what.to_string(),
                    expected: n,
                    got,
                })
            }
        };
        match self {
            RatioTerm::QuadAffine(t) => {
                check("A0 rows", t.a0.nrows())?;
                check("A0 columns", t.a0.ncols())?;
                check("c", t.c.len())
            }
            RatioTerm::Callback(t) => check("denominator", t.denominator.dim()),
        }
    }

    /// Values and gradients without the positivity check.
    pub fn eval_unchecked(&self, x: &Vector) -> TermEval {
        match self {
            RatioTerm::QuadAffine(t) => {
                let ax = &t.a0 * x;
                TermEval {
                    f: 0.5 * x.dot(&ax) + t.q0.dot(x) + t.r0,
                    h: t.c.dot(x) + t.d,
                    grad_f: ax + &t.q0,
                    grad_h: t.c.clone(),
                }
            }
            RatioTerm::Callback(t) => {
                let fe = t.numerator.eval(x);
                let he = t.denominator.eval(x);
                TermEval {
                    f: fe.value,
                    h: he.value,
                    grad_f: fe.gradient,
                    grad_h: he.gradient,
                }
            }
        }
    }

    /// `(f(x), h(x))` without gradients.
    pub fn values(&self, x: &Vector) -> (f64, f64) {
        match self {
            RatioTerm::QuadAffine(t) => {
                let xs = x.as_slice();
                let f = quad_form_value(&t.a0, &t.q0, t.r0, xs);
                let h = t.c.iter().zip(xs).map(|(c, x)| c * x).sum::<f64>() + t.d;
                (f, h)
            }
            RatioTerm::Callback(t) => (t.numerator.value(x), t.denominator.value(x)),
        }
    }

    /// Hessians of numerator and denominator, when available analytically.
    pub fn hessians(&self, x: &Vector) -> (Option<Matrix>, Option<Matrix>) {
        match self {
            RatioTerm::QuadAffine(t) => {
                let n = t.q0.len();
                (Some(t.a0.clone()), Some(Matrix::zeros(n, n)))
            }
            RatioTerm::Callback(t) => (t.numerator.eval(x).hessian, t.denominator.eval(x).hessian),
        }
    }
}

fn quad_form_value(p: &Matrix, q: &Vector, r: f64, x: &[f64]) -> f64 {
    let n = x.len();
    let mut quad = 0.0;
    for j in 0..n {
        let col = p.column(j);
        let mut s = 0.0;
        for i in 0..n {
            s += col[i] * x[i];
        }
        quad += s * x[j];
    }
    0.5 * quad + q.iter().zip(x).map(|(q, x)| q * x).sum::<f64>() + r
}

/// Exact numerator/denominator values and gradients at `x`.
///
/// Fails with [`Error::DenominatorNonpositive`] when `h(x) ≤ 0`.
pub fn eval_term(term: &RatioTerm, x: &Vector) -> Result<TermEval> {
    check_len(x, term.dim(), "x")?;
    let e = term.eval_unchecked(x);
    if e.h <= 0.0 || e.h.is_nan() {
        return Err(Error::DenominatorNonpositive { term: 0, value: e.h });
    }
    Ok(e)
}

fn check_len(x: &Vector, n: usize, what: &str) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            what: what.to_string(),
            expected: n,
            got: x.len(),
        });
    }
    Ok(())
}

/// The convex set `{x : Ax ≤ b, lo ≤ x ≤ hi, gⱼ(x) ≤ 0}`.
///
/// Box bounds may be infinite. They are kept apart from the general rows so
/// the barrier can treat them separately.
#[derive(Debug, Clone)]
pub struct FeasibleRegion {
    pub lin_a: Matrix,
    pub lin_b: Vector,
    pub box_lo: Vector,
    pub box_hi: Vector,
    pub smooth: Vec<Arc<dyn SmoothFn>>,
}

impl FeasibleRegion {
    pub fn unbounded(n: usize) -> Self {
        FeasibleRegion {
            lin_a: Matrix::zeros(0, n),
            lin_b: Vector::zeros(0),
            box_lo: Vector::from_element(n, f64::NEG_INFINITY),
            box_hi: Vector::from_element(n, f64::INFINITY),
            smooth: Vec::new(),
        }
    }

    pub fn with_box(mut self, lo: Vector, hi: Vector) -> Self {
        self.box_lo = lo;
        self.box_hi = hi;
        self
    }

    pub fn with_rows(mut self, a: Matrix, b: Vector) -> Self {
        self.lin_a = a;
        self.lin_b = b;
        self
    }

    pub fn with_smooth(mut self, g: Arc<dyn SmoothFn>) -> Self {
        self.smooth.push(g);
        self
    }

    pub fn dim(&self) -> usize {
        self.box_lo.len()
    }

    pub fn validate_dims(&self) -> Result<()> {
        let n = self.dim();
        let pairs = [
            ("box_hi", self.box_hi.len(), n),
            ("lin_A columns", self.lin_a.ncols(), n),
            ("lin_b", self.lin_b.len(), self.lin_a.nrows()),
        ];
        for (what, got, expected) in pairs {
            if got != expected {
                return Err(Error::DimensionMismatch {
                    what: what.to_string(),
                    expected,
                    got,
                });
            }
        }
        for g in &self.smooth {
            if g.dim() != n {
                return Err(Error::DimensionMismatch {
                    what: "smooth constraint".to_string(),
                    expected: n,
                    got: g.dim(),
                });
            }
        }
        if self.box_lo.iter().zip(self.box_hi.iter()).any(|(l, h)| l > h) {
            return Err(Error::InvalidProblem("box_lo exceeds box_hi".into()));
        }
        Ok(())
    }

    /// Number of inequality constraints seen by the barrier.
    pub fn constraint_count(&self) -> usize {
        self.lin_a.nrows()
            + self.box_lo.iter().filter(|v| v.is_finite()).count()
            + self.box_hi.iter().filter(|v| v.is_finite()).count()
            + self.smooth.len()
    }

    pub fn has_general_rows(&self) -> bool {
        self.lin_a.nrows() > 0 || !self.smooth.is_empty()
    }

    /// Signed residuals `aₖᵀx − bₖ` followed by `gⱼ(x)`.
    pub fn general_residuals(&self, x: &Vector) -> Vec<f64> {
        let mut out: Vec<f64> = (&self.lin_a * x - &self.lin_b).iter().copied().collect();
        out.extend(self.smooth.iter().map(|g| g.value(x)));
        out
    }

    /// Signed residuals `lo − x` and `x − hi` for the finite bounds.
    pub fn box_residuals(&self, x: &Vector) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..self.dim() {
            if self.box_lo[i].is_finite() {
                out.push(self.box_lo[i] - x[i]);
            }
            if self.box_hi[i].is_finite() {
                out.push(x[i] - self.box_hi[i]);
            }
        }
        out
    }

    /// Smallest slack over all constraints; positive means strictly feasible.
    pub fn min_margin(&self, x: &Vector) -> f64 {
        self.general_residuals(x)
            .into_iter()
            .chain(self.box_residuals(x))
            .map(|r| -r)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn project_box(&self, x: &mut Vector) {
        for i in 0..self.dim() {
            x[i] = x[i].clamp(self.box_lo[i], self.box_hi[i]);
        }
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    sense: Sense,
    terms: Vec<RatioTerm>,
    region: FeasibleRegion,
}

impl Problem {
    pub fn new(sense: Sense, terms: Vec<RatioTerm>, region: FeasibleRegion) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidProblem("at least one ratio term is required".into()));
        }
        region.validate_dims()?;
        let n = region.dim();
        for (i, t) in terms.iter().enumerate() {
            if t.dim() != n {
                return Err(Error::DimensionMismatch {
                    what: format!("term {i}"),
                    expected: n,
                    got: t.dim(),
                });
            }
            t.check_dims()?;
            if let RatioTerm::Callback(cb) = t {
                if cb.shape != TermShape::for_sense(sense) {
                    return Err(Error::InvalidProblem(format!(
                        "term {i} has shape {:?}, incompatible with a {sense} problem",
                        cb.shape
                    )));
                }
            }
        }
        Ok(Problem {
            sense,
            terms,
            region,
        })
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn terms(&self) -> &[RatioTerm] {
        &self.terms
    }

    pub fn region(&self) -> &FeasibleRegion {
        &self.region
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Checked evaluation of term `i`.
    pub fn eval_term(&self, i: usize, x: &Vector) -> Result<TermEval> {
        eval_term(&self.terms[i], x).map_err(|e| relabel(e, i))
    }

    /// `(fᵢ(x), hᵢ(x))` for every term, failing on a nonpositive denominator.
    pub fn term_values(&self, x: &Vector) -> Result<Vec<(f64, f64)>> {
        check_len(x, self.dim(), "x")?;
        self.terms
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let (f, h) = t.values(x);
                if h <= 0.0 || h.is_nan() {
                    Err(Error::DenominatorNonpositive { term: i, value: h })
                } else {
                    Ok((f, h))
                }
            })
            .collect()
    }

    pub fn eval_objective(&self, x: &Vector) -> Result<f64> {
        Ok(self.term_values(x)?.into_iter().map(|(f, h)| f / h).sum())
    }

    pub fn feasibility_residuals(&self, x: &Vector) -> FeasibilityResiduals {
        feasibility_residuals(self, x)
    }
}

fn relabel(e: Error, term: usize) -> Error {
    match e {
        Error::DenominatorNonpositive { value, .. } => Error::DenominatorNonpositive { term, value },
        other => other,
    }
}

/// `Σᵢ fᵢ(x)/hᵢ(x)`.
pub fn eval_objective(problem: &Problem, x: &Vector) -> Result<f64> {
    problem.eval_objective(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResiduals {
    /// `≤ 0` means feasible.
    pub max_violation: f64,
    /// General rows (signed), then finite box bounds (signed).
    pub per_constraint: Vec<f64>,
}

/// Constraint residuals at `x`.
///
/// General rows (linear and smooth) contribute their signed residual, so a
/// strictly satisfied row reports negative slack. Box bounds contribute only
/// when violated; a coordinate sitting on its bound counts as zero violation.
/// Regions with no general rows report the largest signed box residual.
pub fn feasibility_residuals(problem: &Problem, x: &Vector) -> FeasibilityResiduals {
    let region = problem.region();
    let general = region.general_residuals(x);
    let boxed = region.box_residuals(x);
    let box_violation = boxed.iter().copied().filter(|r| *r > 0.0).fold(f64::NEG_INFINITY, f64::max);
    let max_violation = if general.is_empty() {
        boxed.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        general.iter().copied().fold(box_violation, f64::max)
    };
    let mut per_constraint = general;
    per_constraint.extend(boxed);
    FeasibilityResiduals {
        max_violation,
        per_constraint,
    }
}

/// The `u`-block lower bound and both halves of `α = (β, u) ∈ Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub beta: Vector,
    pub u: Vector,
    pub l: f64,
}

impl ParamVector {
    /// Builds a parameter vector and projects it onto `Ω`.
    ///
    /// Returns the projected vector together with the number of components
    /// that had to be moved.
    pub fn clamped(mut beta: Vector, mut u: Vector, l: f64) -> (Self, usize) {
        let mut moved = 0;
        for b in beta.iter_mut() {
            if *b < 0.0 {
                *b = 0.0;
                moved += 1;
            }
        }
        for v in u.iter_mut() {
            if *v < l {
                *v = l;
                moved += 1;
            }
        }
        (ParamVector { beta, u, l }, moved)
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    pub fn in_omega(&self) -> bool {
        self.l > 0.0 && self.beta.iter().all(|b| *b >= 0.0) && self.u.iter().all(|u| *u >= self.l)
    }

    /// `(β₁ … β_N, u₁ … u_N)`.
    pub fn stacked(&self) -> Vector {
        let n = self.len();
        Vector::from_fn(2 * n, |i, _| if i < n { self.beta[i] } else { self.u[i - n] })
    }

    pub fn from_stacked(v: &Vector, l: f64) -> Self {
        let n = v.len() / 2;
        ParamVector {
            beta: v.rows(0, n).into_owned(),
            u: v.rows(n, n).into_owned(),
            l,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    NegativeNumerator { probe: usize, term: usize, value: f64 },
    NonpositiveDenominator { probe: usize, term: usize, value: f64 },
    BadGradient { probe: usize, term: usize },
    EmptyInteriorSuspected { margin: f64 },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub probes_checked: usize,
    pub issues: Vec<ValidationIssue>,
    /// Strict-feasibility margin of the phase-I point, if one was found.
    pub phase1_margin: Option<f64>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Margin below which a region is reported as having a suspiciously thin interior.
pub const EMPTY_INTERIOR_TOL: f64 = 1e-6;

/// Spot-checks the standing assumptions `fᵢ ≥ 0`, `hᵢ > 0` at the probes,
/// that gradients are finite and well-shaped, and that the region has a
/// strictly feasible point.
pub fn validate(problem: &Problem, probe_points: &[Vector]) -> ValidationReport {
    let mut report = ValidationReport {
        probes_checked: probe_points.len(),
        ..Default::default()
    };
    let n = problem.dim();
    for (p, x) in probe_points.iter().enumerate() {
        for (i, term) in problem.terms().iter().enumerate() {
            let e = term.eval_unchecked(x);
            if e.f < 0.0 || e.f.is_nan() {
                report.issues.push(ValidationIssue::NegativeNumerator {
                    probe: p,
                    term: i,
                    value: e.f,
                });
            }
            if e.h <= 0.0 || e.h.is_nan() {
                report.issues.push(ValidationIssue::NonpositiveDenominator {
                    probe: p,
                    term: i,
                    value: e.h,
                });
            }
            let grads_ok = e.grad_f.len() == n
                && e.grad_h.len() == n
                && e.grad_f.iter().chain(e.grad_h.iter()).all(|g| g.is_finite());
            if !grads_ok {
                report.issues.push(ValidationIssue::BadGradient { probe: p, term: i });
            }
        }
    }
    match crate::phase1::find_feasible_point(problem.region()) {
        crate::phase1::PhaseOne::Feasible { margin, .. } => {
            report.phase1_margin = Some(margin);
            if margin < EMPTY_INTERIOR_TOL {
                report.issues.push(ValidationIssue::EmptyInteriorSuspected { margin });
            }
        }
        crate::phase1::PhaseOne::Infeasible { best_violation } => {
            report.issues.push(ValidationIssue::EmptyInteriorSuspected {
                margin: -best_violation,
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{paper_problem_1, paper_problem_2};
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn simple_quad_affine() -> RatioTerm {
        RatioTerm::QuadAffine(QuadAffine {
            a0: Matrix::identity(2, 2),
            q0: dvector![0.0, 0.0],
            r0: 0.0,
            c: dvector![1.0, 1.0],
            d: 1.0,
        })
    }

    #[test]
    fn eval_term_examples() {
        let p2 = paper_problem_2();
        let e = p2.eval_term(0, &dvector![0.5, 0.5]).unwrap();
        assert_relative_eq!(e.f, 0.5);
        assert_relative_eq!(e.h, 1.25);

        let p1 = paper_problem_1();
        let e = p1.eval_term(1, &dvector![0.0, 0.0]).unwrap();
        assert_eq!((e.f, e.h), (0.0, 1.0));

        let e = eval_term(&simple_quad_affine(), &dvector![2.0, 0.0]).unwrap();
        assert_eq!((e.f, e.h), (2.0, 3.0));
        assert_eq!(e.grad_f, dvector![2.0, 0.0]);
        assert_eq!(e.grad_h, dvector![1.0, 1.0]);
    }

    #[test]
    fn nonpositive_denominator_is_an_error() {
        let term = simple_quad_affine();
        let err = eval_term(&term, &dvector![-1.0, -1.0]).unwrap_err();
        assert!(matches!(err, Error::DenominatorNonpositive { value, .. } if value == -1.0));
        let region = FeasibleRegion::unbounded(2);
        let p = Problem::new(Sense::Min, vec![simple_quad_affine(), term], region).unwrap();
        let err = p.eval_objective(&dvector![-0.5, -0.5]).unwrap_err();
        assert_eq!(err, Error::DenominatorNonpositive { term: 0, value: 0.0 });
    }

    #[test]
    fn objective_examples() {
        let p2 = paper_problem_2();
        assert_relative_eq!(p2.eval_objective(&dvector![0.5, 0.5]).unwrap(), 0.8, epsilon = 1e-15);
        let p1 = paper_problem_1();
        assert_eq!(p1.eval_objective(&dvector![0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn residual_examples() {
        let p1 = paper_problem_1();
        let r = p1.feasibility_residuals(&dvector![0.0, 0.0]);
        assert_eq!(r.max_violation, -1.0);
        let r = p1.feasibility_residuals(&dvector![1.0, 1.0]);
        assert_eq!(r.max_violation, 1.0);
        let r = p1.feasibility_residuals(&dvector![-0.5, 0.0]);
        assert_eq!(r.max_violation, 0.5);

        let region = FeasibleRegion::unbounded(3).with_box(Vector::from_element(3, 1.0), Vector::from_element(3, 5.0));
        let p = Problem::new(
            Sense::Min,
            vec![RatioTerm::QuadAffine(QuadAffine {
                a0: Matrix::identity(3, 3),
                q0: Vector::zeros(3),
                r0: 0.0,
                c: Vector::from_element(3, 1.0),
                d: 0.0,
            })],
            region,
        )
        .unwrap();
        assert_eq!(p.feasibility_residuals(&Vector::from_element(3, 1.0)).max_violation, 0.0);
    }

    #[test]
    fn dimension_checks() {
        let bad = RatioTerm::QuadAffine(QuadAffine {
            a0: Matrix::identity(2, 2),
            q0: dvector![0.0, 0.0],
            r0: 0.0,
            c: dvector![1.0, 1.0, 1.0],
            d: 1.0,
        });
        let err = Problem::new(Sense::Min, vec![bad], FeasibleRegion::unbounded(2)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        let err = Problem::new(Sense::Min, vec![], FeasibleRegion::unbounded(2)).unwrap_err();
        assert!(matches!(err, Error::InvalidProblem(_)));
    }

    #[test]
    fn callback_shape_must_match_sense() {
        let f = Quadratic::affine(dvector![1.0], 0.0);
        let h = Quadratic::affine(dvector![0.0], 1.0);
        let term = RatioTerm::callback(f, h, TermShape::ConcaveOverConvex);
        assert!(Problem::new(Sense::Min, vec![term.clone()], FeasibleRegion::unbounded(1)).is_err());
        assert!(Problem::new(Sense::Max, vec![term], FeasibleRegion::unbounded(1)).is_ok());
    }

    #[test]
    fn validate_flags_bad_denominator() {
        let p1 = paper_problem_1();
        let report = validate(&p1, &[dvector![0.0, 0.0], dvector![0.3, 0.3]]);
        assert!(report.passed(), "{report:?}");
        assert!(report.phase1_margin.unwrap() > 0.1);

        let f = Quadratic::affine(dvector![0.0, 0.0], 1.0);
        let h = Quadratic::affine(dvector![1.0, 0.0], -2.0);
        let term = RatioTerm::callback(f, h, TermShape::ConvexOverConcave);
        let region = FeasibleRegion::unbounded(2).with_box(dvector![-1.0, -1.0], dvector![1.0, 1.0]);
        let p = Problem::new(Sense::Min, vec![term], region).unwrap();
        let report = validate(&p, &[dvector![0.0, 0.0]]);
        assert_eq!(
            report.issues,
            vec![ValidationIssue::NonpositiveDenominator {
                probe: 0,
                term: 0,
                value: -2.0
            }]
        );
    }

    #[test]
    fn param_vector_clamps_into_omega() {
        let (a, moved) = ParamVector::clamped(dvector![-1e-17, 0.3], dvector![0.0, 2.0], 1e-8);
        assert_eq!(moved, 2);
        assert!(a.in_omega());
        assert_eq!(a.beta[0], 0.0);
        assert_eq!(a.u[0], 1e-8);
        let s = a.stacked();
        assert_eq!(ParamVector::from_stacked(&s, 1e-8), a);
    }
}
