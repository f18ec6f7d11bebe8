//! Phase-I search for a strictly feasible point.
//!
//! Minimizes the largest normalized constraint residual with a projected
//! subgradient method over the box.

use crate::model::{FeasibleRegion, Vector};

/// Best max-violation must fall below this for the region to count as
/// having a nonempty interior.
pub const STRICT_MARGIN: f64 = 1e-6;

const MAX_ITERS: usize = 20_000;
const STALL_ITERS: usize = 1_000;

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseOne {
    Feasible { point: Vector, margin: f64 },
    Infeasible { best_violation: f64 },
}

impl PhaseOne {
    pub fn point(&self) -> Option<&Vector> {
        match self {
            PhaseOne::Feasible { point, .. } => Some(point),
            PhaseOne::Infeasible { .. } => None,
        }
    }
}

/// Box center, or an offset from the single finite bound.
pub fn box_center(region: &FeasibleRegion) -> Vector {
    Vector::from_fn(region.dim(), |i, _| {
        let (lo, hi) = (region.box_lo[i], region.box_hi[i]);
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo + 1.0,
            (false, true) => hi - 1.0,
            (false, false) => 0.0,
        }
    })
}

pub fn find_feasible_point(region: &FeasibleRegion) -> PhaseOne {
    find_feasible_point_from(region, &box_center(region))
}

/// Phase-I started from `start` (projected onto the box first).
pub fn find_feasible_point_from(region: &FeasibleRegion, start: &Vector) -> PhaseOne {
    let n = region.dim();
    let row_norms: Vec<f64> = region
        .lin_a
        .row_iter()
        .map(|r| r.norm().max(f64::MIN_POSITIVE))
        .collect();
    let widths: Vec<f64> = (0..n)
        .map(|i| region.box_hi[i] - region.box_lo[i])
        .filter(|w| w.is_finite() && *w > 0.0)
        .collect();
    let scale = if widths.is_empty() {
        1.0
    } else {
        widths.iter().sum::<f64>() / widths.len() as f64
    };

    // Largest normalized residual and a unit subgradient of it.
    let worst = |x: &Vector| -> (f64, Vector) {
        let mut best = f64::NEG_INFINITY;
        let mut grad = Vector::zeros(n);
        for (k, row) in region.lin_a.row_iter().enumerate() {
            let r = (row.dot(&x.transpose()) - region.lin_b[k]) / row_norms[k];
            if r > best {
                best = r;
                grad = row.transpose() / row_norms[k];
            }
        }
        for g in &region.smooth {
            let e = g.eval(x);
            let gn = e.gradient.norm().max(f64::MIN_POSITIVE);
            let r = e.value / gn;
            if r > best {
                best = r;
                grad = e.gradient / gn;
            }
        }
        for i in 0..n {
            if region.box_lo[i].is_finite() && region.box_lo[i] - x[i] > best {
                best = region.box_lo[i] - x[i];
                grad = Vector::zeros(n);
                grad[i] = -1.0;
            }
            if region.box_hi[i].is_finite() && x[i] - region.box_hi[i] > best {
                best = x[i] - region.box_hi[i];
                grad = Vector::zeros(n);
                grad[i] = 1.0;
            }
        }
        (best, grad)
    };

    let mut x = start.clone();
    region.project_box(&mut x);
    let mut best_x = x.clone();
    let (mut best_val, _) = worst(&x);
    let mut since_improvement = 0;
    let step0 = 0.25 * scale;
    for k in 0..MAX_ITERS {
        let (val, grad) = worst(&x);
        if val < best_val {
            best_val = val;
            best_x = x.clone();
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement > STALL_ITERS {
                break;
            }
        }
        let gn = grad.norm();
        if gn == 0.0 {
            break;
        }
        let step = step0 / ((k + 1) as f64).sqrt();
        x -= grad * (step / gn);
        region.project_box(&mut x);
    }

    let margin = region.min_margin(&best_x);
    if margin > STRICT_MARGIN {
        PhaseOne::Feasible {
            point: best_x,
            margin,
        }
    } else {
        PhaseOne::Infeasible {
            best_violation: -margin,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::paper_problem_1;
    use crate::model::Matrix;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn simplex_corner_interior() {
        let p = paper_problem_1();
        let res = find_feasible_point(p.region());
        let PhaseOne::Feasible { point, margin } = res else {
            panic!("expected feasible, got {res:?}")
        };
        assert!(margin > 0.2, "margin {margin}");
        assert!((point[0] - 0.29).abs() < 0.05 && (point[1] - 0.29).abs() < 0.05, "{point}");
    }

    #[test]
    fn contradictory_region() {
        let region = FeasibleRegion::unbounded(1)
            .with_rows(dmatrix![1.0], dvector![-1.0])
            .with_box(dvector![1.0], dvector![5.0]);
        assert!(matches!(find_feasible_point(&region), PhaseOne::Infeasible { .. }));
    }

    #[test]
    fn unbounded_region_is_trivially_feasible() {
        let region = FeasibleRegion::unbounded(2).with_rows(Matrix::zeros(0, 2), Vector::zeros(0));
        // No constraints at all: every point has infinite margin.
        assert!(matches!(find_feasible_point(&region), PhaseOne::Feasible { .. }));
    }
}
