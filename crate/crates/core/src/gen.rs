//! Seeded random instances: convex quadratic numerators over positive
//! linear denominators on `{Ax ≤ b, 1 ≤ x ≤ 5}`.
//!
//! For term `i = 1..N` (1-based in the formulas below):
//!
//! ```text
//! fᵢ(x) = ½ xᵀA₀ᵢx + q₀ᵢᵀx,   hᵢ(x) = cᵢᵀx
//! A₀ᵢ  = UᵢD₀ᵢUᵢᵀ,  Uᵢ = Q₁Q₂Q₃,  Qⱼ = I − 2ωⱼωⱼᵀ/‖ωⱼ‖²
//! ω₁ = −i + r,  ω₂ = −2i + 2r,  ω₃ = −3i + 3r
//! cᵢ = i − i·r,  q₀ᵢ = i + i·r,  D₀ᵢ = diag(d_low + (d_high − d_low)·r)
//! A = −1 + 2·r (5×n),  b = 2 + 3·r (5)
//! ```
//!
//! where each `r` is a fresh vector of i.i.d. uniform draws.
//!
//! Random stream: a ChaCha8 generator seeded with `seed_from_u64(seed)`.
//! For each term in index order the draws are ω₁, ω₂, ω₃, D₀ᵢ, cᵢ, q₀ᵢ
//! (n each); then `A` row-major and `b`. A rejected (infeasible) draw is
//! followed by a complete fresh draw from the same stream.

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{FeasibleRegion, Matrix, Problem, QuadAffine, RatioTerm, Sense, Vector};
pub use crate::phase1::{find_feasible_point, find_feasible_point_from, PhaseOne};

pub const LINEAR_ROWS: usize = 5;
pub const BOX_LO: f64 = 1.0;
pub const BOX_HI: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    /// Number of ratio terms `N`.
    pub terms: usize,
    pub seed: u64,
    pub d_low: f64,
    pub d_high: f64,
    pub max_resample: usize,
}

impl GenSpec {
    pub fn new(n: usize, terms: usize, seed: u64) -> Self {
        GenSpec {
            n,
            terms,
            seed,
            d_low: 0.1,
            d_high: 1.0,
            max_resample: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.terms == 0 {
            return Err(Error::InvalidConfig("n and the term count must be at least 1".into()));
        }
        if !(0.0 <= self.d_low && self.d_low <= self.d_high) {
            return Err(Error::InvalidConfig("need 0 ≤ d_low ≤ d_high".into()));
        }
        if self.max_resample == 0 {
            return Err(Error::InvalidConfig("max_resample must be at least 1".into()));
        }
        Ok(())
    }
}

/// `I − 2ωωᵀ/‖ω‖²`.
pub fn householder(omega: &Vector) -> Result<Matrix> {
    let norm2 = omega.norm_squared();
    if norm2 == 0.0 || !norm2.is_finite() {
        return Err(Error::ZeroVector);
    }
    let n = omega.len();
    Ok(Matrix::identity(n, n) - omega * omega.transpose() * (2.0 / norm2))
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, offset: f64, scale: f64) -> Vector {
    Vector::from_fn(n, |_, _| offset + scale * rng.random::<f64>())
}

/// A generated instance together with its generation diagnostics.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub problem: Problem,
    /// Draws made, including rejected ones.
    pub attempts: usize,
    /// Phase-I point of the accepted region.
    pub interior: Vector,
    /// The orthogonal factors `Uᵢ`, kept for checks.
    pub factors: Vec<Matrix>,
}

fn draw(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Result<(Vec<RatioTerm>, Vec<Matrix>, FeasibleRegion)> {
    let n = spec.n;
    let mut terms = Vec::with_capacity(spec.terms);
    let mut factors = Vec::with_capacity(spec.terms);
    for idx in 1..=spec.terms {
        let i = idx as f64;
        let w1 = uniform_vec(rng, n, -i, 1.0);
        let w2 = uniform_vec(rng, n, -2.0 * i, 2.0);
        let w3 = uniform_vec(rng, n, -3.0 * i, 3.0);
        let d = uniform_vec(rng, n, spec.d_low, spec.d_high - spec.d_low);
        let c = uniform_vec(rng, n, i, -i);
        let q0 = uniform_vec(rng, n, i, i);
        let u = householder(&w1)? * householder(&w2)? * householder(&w3)?;
        let a0 = &u * Matrix::from_diagonal(&d) * u.transpose();
        let a0 = (&a0 + a0.transpose()) * 0.5;
        factors.push(u);
        terms.push(RatioTerm::QuadAffine(QuadAffine {
            a0,
            q0,
            r0: 0.0,
            c,
            d: 0.0,
        }));
    }
    let lin_a = Matrix::from_row_iterator(
        LINEAR_ROWS,
        n,
        (0..LINEAR_ROWS * n).map(|_| -1.0 + 2.0 * rng.random::<f64>()),
    );
    let lin_b = uniform_vec(rng, LINEAR_ROWS, 2.0, 3.0);
    let region = FeasibleRegion::unbounded(n)
        .with_rows(lin_a, lin_b)
        .with_box(Vector::from_element(n, BOX_LO), Vector::from_element(n, BOX_HI));
    Ok((terms, factors, region))
}

/// Draws instances until one has a strictly feasible region.
pub fn generate_instance(spec: &GenSpec) -> Result<GeneratedInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for attempt in 1..=spec.max_resample {
        let (terms, factors, region) = draw(spec, &mut rng)?;
        if let PhaseOne::Feasible { point, .. } = find_feasible_point(&region) {
            if attempt > 1 {
                debug!("generator: seed {} accepted after {attempt} draws", spec.seed);
            }
            return Ok(GeneratedInstance {
                problem: Problem::new(Sense::Min, terms, region)?,
                attempts: attempt,
                interior: point,
                factors,
            });
        }
    }
    Err(Error::GenerationFailed {
        attempts: spec.max_resample,
    })
}

pub fn generate(spec: &GenSpec) -> Result<Problem> {
    generate_instance(spec).map(|g| g.problem)
}

/// Uniform point in the (finite) box, repaired to strict feasibility with
/// a phase-I search from that point when it violates a general row.
pub fn random_start<R: Rng + ?Sized>(region: &FeasibleRegion, rng: &mut R) -> Result<Vector> {
    let x = Vector::from_fn(region.dim(), |i, _| {
        let (lo, hi) = (region.box_lo[i], region.box_hi[i]);
        lo + (hi - lo) * rng.random::<f64>()
    });
    if region.min_margin(&x) > 0.0 {
        return Ok(x);
    }
    match find_feasible_point_from(region, &x) {
        PhaseOne::Feasible { point, .. } => Ok(point),
        PhaseOne::Infeasible { best_violation } => Err(Error::Infeasible { best_violation }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    #[test]
    fn householder_examples() {
        let q = householder(&dvector![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(q, Matrix::from_diagonal(&dvector![-1.0, 1.0, 1.0]));
        let w = dvector![0.3, -1.2, 2.5, 0.7];
        let q = householder(&w).unwrap();
        assert_relative_eq!(&q * &w, -&w, epsilon = 1e-12);
        assert_relative_eq!(q.transpose() * &q, Matrix::identity(4, 4), epsilon = 1e-12);
        assert_relative_eq!(&q * &q, Matrix::identity(4, 4), epsilon = 1e-12);
        assert_eq!(householder(&Vector::zeros(3)), Err(Error::ZeroVector));
    }

    #[test]
    fn shapes() {
        let g = generate_instance(&GenSpec::new(10, 5, 42)).unwrap();
        let p = &g.problem;
        assert_eq!(p.term_count(), 5);
        assert_eq!(p.dim(), 10);
        assert_eq!(p.region().lin_a.shape(), (5, 10));
        assert_eq!(p.region().box_lo, Vector::from_element(10, 1.0));
        assert_eq!(p.region().box_hi, Vector::from_element(10, 5.0));
        assert!(p.region().min_margin(&g.interior) > 0.0);
        for t in p.terms() {
            let RatioTerm::QuadAffine(t) = t else { panic!() };
            assert!(t.c.iter().all(|c| *c > 0.0));
            assert!(t.q0.iter().all(|q| *q > 0.0));
        }
    }

    #[test]
    fn invalid_spec() {
        assert!(generate(&GenSpec::new(0, 5, 1)).is_err());
        let mut s = GenSpec::new(3, 2, 1);
        s.d_low = 2.0;
        assert!(generate(&s).is_err());
    }

    #[test]
    fn random_start_is_strictly_feasible() {
        let g = generate_instance(&GenSpec::new(10, 3, 7)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = random_start(g.problem.region(), &mut rng).unwrap();
            assert!(g.problem.region().min_margin(&x) > 0.0);
        }
    }
}
