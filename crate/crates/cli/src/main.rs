use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sumratio::gen::{generate_instance, random_start, GenSpec};
use sumratio::model::Vector;
use sumratio::outer::{solve, Algorithm, Solution, SolverConfig};
use sumratio::problem_file::{parse_problem_file, serialize_problem};
use sumratio::report::{format_report, sig6, ReportStyle};
use sumratio::reproduce::{run_reproduce, Experiment, ReproduceConfig};
use sumratio::Execution;

#[derive(Parser)]
#[command(name = "sumratio", version, about = "Global solver for sum-of-ratios problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file or a built-in (`paper-1`, `paper-2`).
    Solve(SolveArgs),
    /// Write a random instance as a problem file.
    Generate(GenerateArgs),
    /// Rerun an experiment and print its report.
    Reproduce(ReproduceArgs),
    /// Time the random-instance grid.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SolveArgs {
    problem: PathBuf,
    #[arg(long, default_value = "mn")]
    algorithm: Algorithm,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_outer: usize,
    #[arg(long, default_value_t = 0.5)]
    xi: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Starting point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    start: Option<Vec<f64>>,
    /// Draw a random starting point in the box from this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    terms: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `n-list/N-list`, e.g. `10,50/5,10,50`.
    #[arg(long, default_value = "10,50/5,10,50")]
    grid: String,
    /// Run everything on the calling thread.
    #[arg(long)]
    sequential: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    which: Experiment,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, default_value = "table")]
    format: ReportStyle,
    /// Include wall-clock times (csv and json-lines omit them otherwise).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Instances per cell.
    #[arg(long, default_value_t = 20)]
    runs: usize,
    #[command(flatten)]
    grid: GridArgs,
}

fn parse_grid(spec: &str) -> Result<(Vec<usize>, Vec<usize>)> {
    let Some((ns, terms)) = spec.split_once('/') else {
        bail!("grid must look like `10,50/5,10,50`");
    };
    let list = |s: &str| -> Result<Vec<usize>> {
        s.split(',')
            .map(|v| v.trim().parse::<usize>().with_context(|| format!("bad grid entry `{v}`")))
            .collect()
    };
    Ok((list(ns)?, list(terms)?))
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn trace_csv(sol: &Solution) -> String {
    let mut out = String::from("k,psi_norm,lambda_k,solves,elapsed_s\n");
    for r in &sol.trace {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.k,
            sig6(r.psi_norm),
            sig6(r.lambda_k),
            r.subproblem_solves_this_iter,
            sig6(r.elapsed)
        ));
    }
    out
}

fn run_solve(args: SolveArgs) -> Result<ExitCode> {
    let problem = parse_problem_file(&args.problem)?;
    let cfg = SolverConfig {
        psi_tol: args.tol,
        max_outer: args.max_outer,
        xi: args.xi,
        eps: args.eps,
        seed: args.seed.unwrap_or(0),
        ..SolverConfig::with_algorithm(args.algorithm)
    };
    let start = match (&args.start, args.seed) {
        (Some(v), _) => Some(Vector::from_column_slice(v)),
        (None, Some(seed)) => Some(random_start(problem.region(), &mut ChaCha8Rng::seed_from_u64(seed))?),
        (None, None) => None,
    };
    let sol = solve(&problem, start.as_ref(), &cfg)?;
    let x: Vec<String> = sol.x_star.iter().map(|v| sig6(*v)).collect();
    println!("status: {}", sol.status);
    println!("f*: {}", sig6(sol.f_star));
    println!("x*: {}", x.join(","));
    println!("outer: {}", sol.outer_iters);
    println!("total: {}", sol.total_subproblem_solves);
    println!("psi_norm: {}", sig6(sol.psi_norm));
    if let Some(e) = &sol.failure {
        println!("failure: {e}");
    }
    if let Some(path) = &args.trace {
        emit(&trace_csv(&sol), Some(path))?;
    }
    Ok(if sol.converged() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn run_generate(args: GenerateArgs) -> Result<ExitCode> {
    let g = generate_instance(&GenSpec::new(args.n, args.terms, args.seed))?;
    let mut text = serialize_problem(&g.problem)?;
    text.push('\n');
    emit(&text, args.output.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn reproduce_config(runs: usize, grid: &GridArgs) -> Result<ReproduceConfig> {
    let (grid_n, grid_terms) = parse_grid(&grid.grid)?;
    Ok(ReproduceConfig {
        runs,
        seed: grid.seed,
        grid_n,
        grid_terms,
        exec: if grid.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
        ..ReproduceConfig::default()
    })
}

fn run_reproduce_cmd(args: ReproduceArgs) -> Result<ExitCode> {
    let cfg = reproduce_config(args.runs, &args.grid)?;
    let reports = run_reproduce(args.which, &cfg)?;
    emit(&format_report(&reports, args.format, args.timing), args.grid.output.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn run_bench(args: BenchArgs) -> Result<ExitCode> {
    let cfg = reproduce_config(args.runs, &args.grid)?;
    let started = std::time::Instant::now();
    let reports = run_reproduce(Experiment::Paper3, &cfg)?;
    let mut text = format_report(&reports, ReportStyle::Table, true);
    text.push_str(&format!("wall time: {:.2} s\n", started.elapsed().as_secs_f64()));
    emit(&text, args.grid.output.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Generate(a) => run_generate(a),
        Command::Reproduce(a) => run_reproduce_cmd(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
