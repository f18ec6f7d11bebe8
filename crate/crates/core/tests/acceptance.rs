//! Acceptance suite: one PASS/FAIL line per criterion, then a single
//! assertion over all of them.

use std::time::Instant;

use nalgebra::dvector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sumratio::builtin::{paper_problem_1, paper_problem_2, PAPER_1_OPTIMUM, PAPER_2_OPTIMUM};
use sumratio::gen::{generate_instance, random_start, GenSpec};
use sumratio::model::{eval_term, Matrix, Problem, Sense, Vector};
use sumratio::oracle::grid_search;
use sumratio::outer::{delta_hat, jacobian_diag, newton_map, psi, solve, Algorithm, Solution, SolverConfig};
use sumratio::problem_file::serialize_problem;
use sumratio::report::{format_report, ReportStyle, RunReport};
use sumratio::reproduce::{run_reproduce, run_rng, simplex_edge_start, Experiment, ReproduceConfig};
use sumratio::{Execution, FeasibleRegion, QuadAffine, RatioTerm};

struct Verdict {
    id: usize,
    pass: bool,
    detail: String,
}

fn verdict(id: usize, pass: bool, detail: String) -> Verdict {
    println!("criterion {id}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    Verdict { id, pass, detail }
}

fn find<'a>(reports: &'a [RunReport], id: &str, alg: Algorithm) -> &'a RunReport {
    reports
        .iter()
        .find(|r| r.problem_id == id && r.algorithm == alg)
        .unwrap_or_else(|| panic!("no report {id}/{alg}"))
}

/// Every converged solve seen by the suite, kept for the certificate check.
#[derive(Default)]
struct Collected {
    runs: Vec<(Problem, Solution, SolverConfig)>,
}

impl Collected {
    fn solve(&mut self, problem: &Problem, y0: &Vector, cfg: &SolverConfig) -> Solution {
        let sol = solve(problem, Some(y0), cfg).expect("solve");
        self.runs.push((problem.clone(), sol.clone(), cfg.clone()));
        sol
    }
}

fn criterion_1(all: &mut Collected) -> Verdict {
    let started = Instant::now();
    let cfg = SolverConfig::with_algorithm(Algorithm::ModifiedNewton);
    let sol = all.solve(&paper_problem_1(), &dvector![0.0, 0.0], &cfg);
    let secs = started.elapsed().as_secs_f64();
    let pass = sol.converged()
        && sol.psi_norm <= 1e-6
        && (sol.f_star - PAPER_1_OPTIMUM).abs() <= 1e-3
        && sol.outer_iters <= 15
        && secs < 5.0;
    verdict(
        1,
        pass,
        format!(
            "paper1 MN from origin: f*={:.6} outer={} total={} psi={:.2e} time={secs:.3}s",
            sol.f_star, sol.outer_iters, sol.total_subproblem_solves, sol.psi_norm
        ),
    )
}

fn criterion_2() -> Verdict {
    let reports = run_reproduce(Experiment::Paper1, &ReproduceConfig::default()).unwrap();
    let mn = find(&reports, "paper1/random", Algorithm::ModifiedNewton);
    let hits = mn.hit_count.unwrap_or(0);
    let pass = mn.runs == 100 && hits == 100 && mn.mean_outer <= 12.0;
    verdict(
        2,
        pass,
        format!(
            "paper1 MN 100 edge starts: hits={hits}/100 mean_outer={:.2} mean_total={:.2}",
            mn.mean_outer, mn.mean_total
        ),
    )
}

fn criterion_3(all: &mut Collected) -> Verdict {
    let sol = all.solve(&paper_problem_2(), &dvector![0.0, 0.0], &SolverConfig::with_algorithm(Algorithm::Newton));
    let origin_ok = sol.converged() && (sol.f_star - PAPER_2_OPTIMUM).abs() <= 1e-6 && sol.outer_iters <= 10;
    let reports = run_reproduce(Experiment::Paper2, &ReproduceConfig::default()).unwrap();
    let mn = find(&reports, "paper2/random", Algorithm::ModifiedNewton);
    let n = find(&reports, "paper2/random", Algorithm::Newton);
    let mn_hits = mn.hit_count.unwrap_or(0);
    let n_hits = n.hit_count.unwrap_or(0);
    let gap = (mn_hits as f64 - n_hits as f64) / mn.runs as f64;
    let pass = origin_ok && mn_hits >= 95 && mn.mean_outer <= 8.0 && gap >= 0.5;
    verdict(
        3,
        pass,
        format!(
            "paper2 N origin: f*={:.7} outer={}; MN random: hits={mn_hits}/100 mean_outer={:.2} mean_total={:.2}; N random: hits={n_hits}/100",
            sol.f_star, sol.outer_iters, mn.mean_outer, mn.mean_total
        ),
    )
}

fn criterion_4() -> Verdict {
    let started = Instant::now();
    let cfg = ReproduceConfig {
        runs: 20,
        ..ReproduceConfig::default()
    };
    let reports = run_reproduce(Experiment::Paper3, &cfg).unwrap();
    let secs = started.elapsed().as_secs_f64();
    println!("{}", format_report(&reports, ReportStyle::Table, true));
    let mut pass = secs <= 600.0;
    let mut detail = Vec::new();
    for alg in [Algorithm::Newton, Algorithm::ModifiedNewton] {
        let cells: Vec<&RunReport> = reports.iter().filter(|r| r.algorithm == alg).collect();
        let runs: usize = cells.iter().map(|r| r.runs).sum();
        let fast: usize = cells
            .iter()
            .flat_map(|r| &r.per_run)
            .filter(|r| r.converged() && r.outer_iters <= 15)
            .count();
        let medians: Vec<f64> = cells.iter().map(|r| r.median_outer().unwrap_or(f64::INFINITY)).collect();
        let spread = medians.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - medians.iter().cloned().fold(f64::INFINITY, f64::min);
        let rate = fast as f64 / runs as f64;
        pass &= rate >= 0.95 && spread <= 3.0;
        detail.push(format!(
            "{alg}: {fast}/{runs} converged within 15 outer, cell medians {medians:?} (spread {spread})"
        ));
    }
    detail.push(format!("time={secs:.1}s"));
    verdict(4, pass, detail.join("; "))
}

fn random_term(rng: &mut ChaCha8Rng) -> RatioTerm {
    let l = Matrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
    RatioTerm::QuadAffine(QuadAffine {
        a0: &l * l.transpose(),
        q0: dvector![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)],
        r0: rng.random_range(0.0..1.0),
        c: dvector![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)],
        d: rng.random_range(0.5..1.5),
    })
}

fn random_2d(seed: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = vec![random_term(&mut rng), random_term(&mut rng)];
    let region = FeasibleRegion::unbounded(2)
        .with_box(dvector![0.0, 0.0], dvector![2.0, 2.0])
        .with_rows(Matrix::from_row_slice(1, 2, &[1.0, 1.0]), dvector![3.0]);
    Problem::new(Sense::Min, terms, region).unwrap()
}

fn criterion_5(all: &mut Collected) -> Verdict {
    let mut problems = vec![("paper1".to_string(), paper_problem_1()), ("paper2".to_string(), paper_problem_2())];
    problems.extend((0..5).map(|s| (format!("random2d-{s}"), random_2d(s))));
    let cfg = SolverConfig::with_algorithm(Algorithm::ModifiedNewton);
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (name, p) in &problems {
        let y0 = if p.sense() == Sense::Max { dvector![0.0, 0.0] } else { dvector![1.0, 1.0] };
        let sol = all.solve(p, &y0, &cfg);
        let grid = grid_search(p, 1e-3).unwrap();
        let gap = (sol.f_star - grid.best_value).abs();
        let gap = if sol.converged() { gap } else { f64::INFINITY };
        worst = worst.max(gap);
        detail.push(format!("{name}: {gap:.1e}"));
    }
    verdict(5, worst <= 1e-2, format!("|solver - grid| {}", detail.join(", ")))
}

fn criterion_6(all: &mut Collected) -> Verdict {
    let mut failures: Vec<String> = Vec::new();

    // Runs feeding (a)-(c): both built-ins from edge starts and small generated instances.
    for (pi, problem) in [paper_problem_1(), paper_problem_2()].iter().enumerate() {
        for i in 0..20 {
            let y0 = simplex_edge_start(&mut run_rng(100 + pi as u64, i));
            for alg in [Algorithm::Newton, Algorithm::ModifiedNewton] {
                all.solve(problem, &y0, &SolverConfig::with_algorithm(alg));
            }
        }
    }
    for seed in 0..10 {
        let g = generate_instance(&GenSpec::new(8, 4, seed)).unwrap();
        let y0 = random_start(g.problem.region(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        all.solve(&g.problem, &y0, &SolverConfig::with_algorithm(Algorithm::ModifiedNewton));
    }

    let (mut identity, mut descent, mut jacobian) = (0usize, 0usize, 0usize);
    for (problem, sol, cfg) in &all.runs {
        for rec in &sol.trace {
            let p = psi(problem, &rec.alpha, &rec.x).unwrap();
            let jac = jacobian_diag(problem, &rec.x).unwrap();
            let stepped = rec.alpha.stacked() - p.component_div(&jac);
            let mapped = newton_map(problem, &rec.x, 0.0).unwrap().stacked();
            if stepped.iter().zip(mapped.iter()).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0)) {
                identity += 1;
            }
            if jac.iter().any(|h| !(*h > 0.0)) {
                jacobian += 1;
            }
        }
        if cfg.algorithm == Algorithm::ModifiedNewton {
            for w in sol.trace.windows(2) {
                if w[1].psi_norm > (1.0 - cfg.eps * w[1].lambda_k) * w[0].psi_norm + 10.0 * cfg.inner.kkt_tol {
                    descent += 1;
                }
            }
        }
    }
    for (tag, count) in [("a", identity), ("b", descent), ("c", jacobian)] {
        if count > 0 {
            failures.push(format!("({tag}) {count} violations"));
        }
    }

    // (d) generator factors.
    for seed in 0..50 {
        let g = generate_instance(&GenSpec::new(10, 5, seed)).unwrap();
        let n = g.problem.dim();
        for (u, t) in g.factors.iter().zip(g.problem.terms()) {
            let RatioTerm::QuadAffine(q) = t else { unreachable!() };
            let orth = (u.transpose() * u - Matrix::identity(n, n)).amax();
            let min_eig = q.a0.clone().symmetric_eigen().eigenvalues.min();
            if orth > 1e-10 || min_eig < -1e-10 {
                failures.push(format!("(d) seed {seed}: orth {orth:.1e}, eig {min_eig:.1e}"));
            }
        }
    }

    // (e) analytic gradients against central differences.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = generate_instance(&GenSpec::new(5, 3, 1)).unwrap();
    let mut bad_grad = 0;
    for k in 0..100 {
        let (problem, x) = match k % 3 {
            0 => (paper_problem_1(), dvector![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]),
            1 => (paper_problem_2(), dvector![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]),
            _ => (g.problem.clone(), Vector::from_fn(5, |_, _| rng.random_range(1.0..5.0))),
        };
        for term in problem.terms() {
            let e = eval_term(term, &x).unwrap();
            for j in 0..x.len() {
                let step = 1e-6;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += step;
                xm[j] -= step;
                let (fp, hp) = term.values(&xp);
                let (fm, hm) = term.values(&xm);
                let df = (fp - fm) / (2.0 * step);
                let dh = (hp - hm) / (2.0 * step);
                if (df - e.grad_f[j]).abs() > 1e-5 * e.grad_f[j].abs().max(1.0)
                    || (dh - e.grad_h[j]).abs() > 1e-5 * e.grad_h[j].abs().max(1.0)
                {
                    bad_grad += 1;
                }
            }
        }
    }
    if bad_grad > 0 {
        failures.push(format!("(e) {bad_grad} gradient mismatches"));
    }

    // (f) determinism of instances and csv reports.
    let a = serialize_problem(&generate_instance(&GenSpec::new(10, 5, 42)).unwrap().problem).unwrap();
    let b = serialize_problem(&generate_instance(&GenSpec::new(10, 5, 42)).unwrap().problem).unwrap();
    let cfg = ReproduceConfig {
        runs: 10,
        seed: 3,
        ..ReproduceConfig::default()
    };
    let r1 = format_report(&run_reproduce(Experiment::Paper2, &cfg).unwrap(), ReportStyle::Csv, false);
    let seq = ReproduceConfig {
        exec: Execution::Sequential,
        ..cfg
    };
    let r2 = format_report(&run_reproduce(Experiment::Paper2, &seq).unwrap(), ReportStyle::Csv, false);
    if a != b || r1 != r2 {
        failures.push("(f) output differs between identical seeds".into());
    }

    let pass = failures.is_empty();
    let detail = if pass {
        format!("(a)-(f) hold over {} solves", all.runs.len())
    } else {
        failures.join("; ")
    };
    verdict(6, pass, detail)
}

fn criterion_7(all: &Collected) -> Verdict {
    let mut checked = 0;
    let mut worst_ratio: f64 = 0.0;
    for (problem, sol, cfg) in &all.runs {
        if !sol.converged() {
            continue;
        }
        checked += 1;
        let d = delta_hat(problem, &sol.x_star).unwrap();
        let bound = problem.term_count() as f64 * cfg.psi_tol / d;
        worst_ratio = worst_ratio.max((sol.f_star - sol.alpha_star.beta.sum()).abs() / bound);
    }
    verdict(
        7,
        checked > 0 && worst_ratio <= 1.0,
        format!("{checked} converged solutions, worst |F - sum beta| / bound = {worst_ratio:.3}"),
    )
}

#[test]
fn acceptance() {
    let mut all = Collected::default();
    let verdicts = [
        criterion_1(&mut all),
        criterion_2(),
        criterion_3(&mut all),
        criterion_4(),
        criterion_5(&mut all),
        criterion_6(&mut all),
        criterion_7(&all),
    ];
    let failed: Vec<String> = verdicts
        .iter()
        .filter(|v| !v.pass)
        .map(|v| format!("{}: {}", v.id, v.detail))
        .collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
