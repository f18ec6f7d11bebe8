//! JSON problem files.
//!
//! ```json
//! {
//!   "sense": "min",
//!   "n": 2,
//!   "terms": [
//!     { "A0": [[1, 0], [0, 1]], "q0": [0, 0], "r0": 0, "c": [1, 1], "d": 1 }
//!   ],
//!   "region": {
//!     "lin_A": [[1, 1]], "lin_b": [1],
//!     "box_lo": [0, 0], "box_hi": [null, null]
//!   }
//! }
//! ```
//!
//! Each term is `fᵢ = ½xᵀA0x + q0ᵀx + r0` over `hᵢ = cᵀx + d`. `A0` is a
//! list of rows and may be omitted for a linear numerator; `r0` and `d`
//! default to 0. Missing box bounds and `null` entries are unbounded.
//! Callback terms and smooth constraints have no file form, which is why the
//! two paper problems are built-ins (`paper-1`, `paper-2`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::builtin::builtin;
use crate::error::{Error, Result};
use crate::model::{FeasibleRegion, Matrix, Problem, QuadAffine, RatioTerm, Sense, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub sense: Sense,
    pub n: usize,
    pub terms: Vec<TermSpec>,
    #[serde(default)]
    pub region: RegionSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(rename = "A0", default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<Vec<Vec<f64>>>,
    pub q0: Vec<f64>,
    #[serde(default)]
    pub r0: f64,
    pub c: Vec<f64>,
    #[serde(default)]
    pub d: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    #[serde(rename = "lin_A", default)]
    pub lin_a: Vec<Vec<f64>>,
    #[serde(default)]
    pub lin_b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_lo: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_hi: Option<Vec<Option<f64>>>,
}

fn mismatch(what: impl Into<String>, expected: usize, got: usize) -> Error {
    Error::DimensionMismatch {
        what: what.into(),
        expected,
        got,
    }
}

fn vector(what: String, v: &[f64], n: usize) -> Result<Vector> {
    if v.len() != n {
        return Err(mismatch(what, n, v.len()));
    }
    Ok(Vector::from_column_slice(v))
}

fn matrix(what: &str, rows: &[Vec<f64>], nrows: usize, n: usize) -> Result<Matrix> {
    if rows.len() != nrows {
        return Err(mismatch(format!("{what} rows"), nrows, rows.len()));
    }
    for (k, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(mismatch(format!("{what}[{k}]"), n, r.len()));
        }
    }
    Ok(Matrix::from_fn(nrows, n, |i, j| rows[i][j]))
}

fn bounds(what: &str, v: &Option<Vec<Option<f64>>>, n: usize, missing: f64) -> Result<Vector> {
    match v {
        None => Ok(Vector::from_element(n, missing)),
        Some(v) if v.len() != n => Err(mismatch(what, n, v.len())),
        Some(v) => Ok(Vector::from_iterator(n, v.iter().map(|b| b.unwrap_or(missing)))),
    }
}

fn finite_or_null(v: &Vector) -> Option<Vec<Option<f64>>> {
    if v.iter().all(|b| b.is_infinite()) {
        return None;
    }
    Some(v.iter().map(|b| b.is_finite().then_some(*b)).collect())
}

impl ProblemFile {
    pub fn to_problem(&self) -> Result<Problem> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidProblem("n must be at least 1".into()));
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for (i, t) in self.terms.iter().enumerate() {
            let a0 = match &t.a0 {
                Some(rows) => matrix(&format!("terms[{i}].A0"), rows, n, n)?,
                None => Matrix::zeros(n, n),
            };
            terms.push(RatioTerm::QuadAffine(QuadAffine {
                a0,
                q0: vector(format!("terms[{i}].q0"), &t.q0, n)?,
                r0: t.r0,
                c: vector(format!("terms[{i}].c"), &t.c, n)?,
                d: t.d,
            }));
        }
        let r = &self.region;
        let region = FeasibleRegion::unbounded(n)
            .with_rows(
                matrix("region.lin_A", &r.lin_a, r.lin_a.len(), n)?,
                vector("region.lin_b".into(), &r.lin_b, r.lin_a.len())?,
            )
            .with_box(
                bounds("region.box_lo", &r.box_lo, n, f64::NEG_INFINITY)?,
                bounds("region.box_hi", &r.box_hi, n, f64::INFINITY)?,
            );
        Problem::new(self.sense, terms, region)
    }

    /// File form of a problem; fails for callback terms and smooth constraints.
    pub fn from_problem(problem: &Problem) -> Result<Self> {
        let region = problem.region();
        if !region.smooth.is_empty() {
            return Err(Error::InvalidProblem("smooth constraints have no file form".into()));
        }
        let rows = |m: &Matrix| -> Vec<Vec<f64>> { m.row_iter().map(|r| r.iter().copied().collect()).collect() };
        let terms = problem
            .terms()
            .iter()
            .map(|t| match t {
                RatioTerm::QuadAffine(q) => Ok(TermSpec {
                    a0: (q.a0.iter().any(|v| *v != 0.0)).then(|| rows(&q.a0)),
                    q0: q.q0.iter().copied().collect(),
                    r0: q.r0,
                    c: q.c.iter().copied().collect(),
                    d: q.d,
                }),
                RatioTerm::Callback(_) => Err(Error::InvalidProblem("callback terms have no file form".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ProblemFile {
            sense: problem.sense(),
            n: problem.dim(),
            terms,
            region: RegionSpec {
                lin_a: rows(&region.lin_a),
                lin_b: region.lin_b.iter().copied().collect(),
                box_lo: finite_or_null(&region.box_lo),
                box_hi: finite_or_null(&region.box_hi),
            },
        })
    }
}

pub fn parse_problem_str(text: &str) -> Result<Problem> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.to_problem()
}

/// Reads a problem file, or builds a built-in when `path` names one.
pub fn parse_problem_file(path: impl AsRef<Path>) -> Result<Problem> {
    let path = path.as_ref();
    if let Some(p) = path.to_str().and_then(builtin) {
        return Ok(p);
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_problem_str(&text)
}

pub fn serialize_problem(problem: &Problem) -> Result<String> {
    let file = ProblemFile::from_problem(problem)?;
    serde_json::to_string_pretty(&file).map_err(|e| Error::Io(e.to_string()))
}

pub fn write_problem_file(problem: &Problem, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serialize_problem(problem)?;
    text.push('\n');
    std::fs::write(path.as_ref(), text).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))
}
