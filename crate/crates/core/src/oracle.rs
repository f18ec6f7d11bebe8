//! Brute-force grid search over low-dimensional feasible sets.
//!
//! Used as an independent check of the solver on 1-, 2- and 3-variable
//! problems. Grid points are `loᵢ + wᵢ·k/stepsᵢ` for `k = 0..=stepsᵢ`, so
//! both box faces are sampled and the spacing never exceeds the resolution.

use crate::error::{Error, Result};
use crate::exec::{chunked_reduce, Execution};
use crate::model::{FeasibleRegion, Problem, Sense, Vector};

/// Largest dimension accepted by [`grid_search`].
pub const MAX_GRID_DIM: usize = 3;
/// Constraint slack tolerated at grid points.
pub const GRID_FEAS_TOL: f64 = 1e-9;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best_x: Vector,
    pub best_value: f64,
    pub resolution: f64,
    /// Grid points visited, feasible or not.
    pub points_evaluated: usize,
}

/// Finite per-coordinate bounds for the grid.
///
/// Infinite box bounds are tightened by interval propagation through the
/// linear rows: `aₖᵢxᵢ ≤ bₖ − Σⱼ≠ᵢ min(aₖⱼxⱼ)`.
pub fn grid_bounds(region: &FeasibleRegion) -> Result<(Vector, Vector)> {
    let n = region.dim();
    let mut lo = region.box_lo.clone();
    let mut hi = region.box_hi.clone();
    let a = &region.lin_a;
    for _ in 0..(2 * n + 2) {
        let mut changed = false;
        for k in 0..a.nrows() {
            for i in 0..n {
                let aki = a[(k, i)];
                if aki == 0.0 {
                    continue;
                }
                let rest: f64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| {
                        let akj = a[(k, j)];
                        if akj > 0.0 {
                            akj * lo[j]
                        } else if akj < 0.0 {
                            akj * hi[j]
                        } else {
                            0.0
                        }
                    })
                    .sum();
                if !rest.is_finite() {
                    continue;
                }
                let bound = (region.lin_b[k] - rest) / aki;
                if aki > 0.0 && bound < hi[i] {
                    hi[i] = bound;
                    changed = true;
                } else if aki < 0.0 && bound > lo[i] {
                    lo[i] = bound;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    for i in 0..n {
        if !lo[i].is_finite() || !hi[i].is_finite() {
            return Err(Error::UnboundedGrid { coord: i });
        }
        if lo[i] > hi[i] {
            return Err(Error::EmptyGrid);
        }
    }
    Ok((lo, hi))
}

fn is_feasible(region: &FeasibleRegion, x: &Vector) -> bool {
    region.general_residuals(x).iter().all(|r| *r <= GRID_FEAS_TOL)
        && region.box_residuals(x).iter().all(|r| *r <= GRID_FEAS_TOL)
}

fn objective(problem: &Problem, x: &Vector) -> Option<f64> {
    let mut total = 0.0;
    for t in problem.terms() {
        let (f, h) = t.values(x);
        if !(h > 0.0) {
            return None;
        }
        total += f / h;
    }
    total.is_finite().then_some(total)
}

/// Grid search on the default (parallel) executor.
pub fn grid_search(problem: &Problem, resolution: f64) -> Result<GridResult> {
    grid_search_with(problem, resolution, Execution::default())
}

/// Best feasible grid point for the problem's sense.
///
/// Ties keep the lexicographically smallest grid index (first coordinate most
/// significant), independent of how the sweep is scheduled.
pub fn grid_search_with(problem: &Problem, resolution: f64, exec: Execution) -> Result<GridResult> {
    let n = problem.dim();
    if n > MAX_GRID_DIM {
        return Err(Error::DimensionTooLarge { n });
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::InvalidConfig(format!("grid resolution must be positive, got {resolution}")));
    }
    let (lo, hi) = grid_bounds(problem.region())?;
    let steps: Vec<usize> = (0..n)
        .map(|i| ((hi[i] - lo[i]) / resolution - 1e-9).ceil().max(0.0) as usize)
        .collect();
    let total = steps.iter().try_fold(1usize, |acc, s| acc.checked_mul(s + 1));
    let Some(total) = total.filter(|t| *t <= 1 << 32) else {
        return Err(Error::InvalidConfig(format!("grid resolution {resolution} is too fine")));
    };
    let sense = problem.sense();
    let region = problem.region();

    let point = |mut idx: usize| -> Vector {
        let mut x = Vector::zeros(n);
        for i in (0..n).rev() {
            let k = idx % (steps[i] + 1);
            idx /= steps[i] + 1;
            x[i] = if steps[i] == 0 {
                lo[i]
            } else {
                lo[i] + (hi[i] - lo[i]) * (k as f64 / steps[i] as f64)
            };
        }
        x
    };

    let best = chunked_reduce(
        exec,
        total,
        CHUNK,
        |range| {
            let mut best: Option<(usize, f64)> = None;
            for idx in range {
                let x = point(idx);
                if !is_feasible(region, &x) {
                    continue;
                }
                let Some(v) = objective(problem, &x) else { continue };
                if best.is_none_or(|(_, b)| sense.better(v, b)) {
                    best = Some((idx, v));
                }
            }
            best
        },
        |a, b| pick(sense, a, b),
    );
    let (idx, best_value) = best.ok_or(Error::EmptyGrid)?;
    Ok(GridResult {
        best_x: point(idx),
        best_value,
        resolution,
        points_evaluated: total,
    })
}

fn pick(sense: Sense, a: (usize, f64), b: (usize, f64)) -> (usize, f64) {
    if sense.better(b.1, a.1) || (b.1 == a.1 && b.0 < a.0) {
        b
    } else {
        a
    }
}
