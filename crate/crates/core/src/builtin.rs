//! The two small maximization instances used as named built-ins.
//!
//! Both maximize over the simplex corner `{x₁ + x₂ ≤ 1, x ≥ 0}`:
//!
//! * `paper-1`: `x₁/(x₁² + x₂² + 1) + x₂/(x₁ + x₂ + 1)`, optimum ≈ 0.5958.
//! * `paper-2`: `x₁/(x₁² + 1) + x₂/(x₂² + 1)`, optimum 4/5 at (½, ½).

use nalgebra::{dmatrix, dvector};

use crate::model::{FeasibleRegion, Problem, Quadratic, RatioTerm, Sense, TermShape};

/// Reference optimal value of `paper-1`, to four digits.
pub const PAPER_1_OPTIMUM: f64 = 0.5958;
pub const PAPER_2_OPTIMUM: f64 = 0.8;

fn simplex_corner() -> FeasibleRegion {
    FeasibleRegion::unbounded(2)
        .with_rows(dmatrix![1.0, 1.0], dvector![1.0])
        .with_box(dvector![0.0, 0.0], dvector![f64::INFINITY, f64::INFINITY])
}

fn term(num: Quadratic, den: Quadratic) -> RatioTerm {
    RatioTerm::callback(num, den, TermShape::ConcaveOverConvex)
}

pub fn paper_problem_1() -> Problem {
    let terms = vec![
        term(
            Quadratic::affine(dvector![1.0, 0.0], 0.0),
            Quadratic::new(dmatrix![2.0, 0.0; 0.0, 2.0], dvector![0.0, 0.0], 1.0),
        ),
        term(
            Quadratic::affine(dvector![0.0, 1.0], 0.0),
            Quadratic::affine(dvector![1.0, 1.0], 1.0),
        ),
    ];
    Problem::new(Sense::Max, terms, simplex_corner()).expect("built-in problem is well formed")
}

pub fn paper_problem_2() -> Problem {
    let terms = vec![
        term(
            Quadratic::affine(dvector![1.0, 0.0], 0.0),
            Quadratic::new(dmatrix![2.0, 0.0; 0.0, 0.0], dvector![0.0, 0.0], 1.0),
        ),
        term(
            Quadratic::affine(dvector![0.0, 1.0], 0.0),
            Quadratic::new(dmatrix![0.0, 0.0; 0.0, 2.0], dvector![0.0, 0.0], 1.0),
        ),
    ];
    Problem::new(Sense::Max, terms, simplex_corner()).expect("built-in problem is well formed")
}

/// Looks up a built-in by its CLI name.
pub fn builtin(name: &str) -> Option<Problem> {
    match name {
        "paper-1" | "paper1" => Some(paper_problem_1()),
        "paper-2" | "paper2" => Some(paper_problem_2()),
        _ => None,
    }
}
