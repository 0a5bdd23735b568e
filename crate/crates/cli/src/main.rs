//! Command-line front end: solve, validate, generate, and benchmark.
//!
//! Exit codes: 0 success, 1 internal failure or failed validation, 2 usage
//! error, 3 unreadable or malformed files, 4 proven infeasible, 5 time
//! limit hit with no feasible solution.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pdpcd::bnc::{solve, SolveError, SolveOptions, SolveResult, SolveStatus};
use pdpcd::generate::{generate, GenerateParams};
use pdpcd::instance::{load_instance, store_instance, Instance};
use pdpcd::solution::{load_solution, store_solution, Solution};
use pdpcd::validate::validate;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_FILE: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;
const EXIT_NO_INCUMBENT: u8 = 5;

#[derive(Parser)]
#[command(
    name = "pdpcd",
    version,
    about = "Exact solver for pickup-and-delivery routing through a crossdock"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance to proven optimality.
    Solve(SolveCmd),
    /// Check a solution file against an instance.
    Validate(ValidateCmd),
    /// Generate a random feasible instance.
    Generate(GenerateCmd),
    /// Solve several instances and print a CSV summary.
    Bench(BenchCmd),
}

#[derive(Args)]
struct SolverFlags {
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 14_400.0)]
    time_limit: f64,
    /// Relative optimality gap to stop at.
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
    /// Solve the plain formulation without valid inequalities.
    #[arg(long)]
    no_cuts: bool,
    /// Seed for randomized components.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the tree search.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Stop after this many search nodes.
    #[arg(long)]
    node_limit: Option<u64>,
}

impl SolverFlags {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            time_limit_s: self.time_limit,
            gap_tol: self.gap,
            enable_cuts: !self.no_cuts,
            seed: self.seed,
            threads: self.threads,
            node_limit: self.node_limit,
        }
    }
}

#[derive(Args)]
struct SolveCmd {
    /// Instance file (JSON).
    instance: PathBuf,
    #[command(flatten)]
    flags: SolverFlags,
    /// Where to write the solution; defaults to `<instance>.solution.json`.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Print the search log.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct ValidateCmd {
    /// Instance file (JSON).
    instance: PathBuf,
    /// Solution file (JSON).
    solution: PathBuf,
}

#[derive(Args)]
struct GenerateCmd {
    /// Number of requests.
    #[arg(long)]
    requests: usize,
    /// Number of vehicles.
    #[arg(long)]
    vehicles: usize,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the instance.
    #[arg(long)]
    out: PathBuf,
    /// Also write the witness solution the instance was built around.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Args)]
struct BenchCmd {
    /// Instance files (JSON).
    #[arg(required = true)]
    instances: Vec<PathBuf>,
    #[command(flatten)]
    flags: SolverFlags,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Solve(cmd) => run_solve(&cmd),
        Command::Validate(cmd) => run_validate(&cmd),
        Command::Generate(cmd) => run_generate(&cmd),
        Command::Bench(cmd) => run_bench(&cmd),
    }
}

fn run_solve(cmd: &SolveCmd) -> ExitCode {
    let instance = match load_instance(&cmd.instance) {
        Ok(instance) => instance,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FILE);
        }
    };
    let result = match solve(&instance, &cmd.flags.options()) {
        Ok(result) => result,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(match e {
                SolveError::Internal(_) => EXIT_FAIL,
                _ => EXIT_FILE,
            });
        }
    };

    if cmd.verbose {
        print!("{}", result.log);
    }
    print_report(&instance, &result);

    if let Some(solution) = &result.solution {
        let path = cmd
            .json
            .clone()
            .unwrap_or_else(|| default_solution_path(&cmd.instance));
        if let Err(e) = store_solution(solution, &path) {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FILE);
        }
        println!("solution written to {}", path.display());
    }
    status_exit(result.status)
}

fn default_solution_path(instance: &Path) -> PathBuf {
    let stem = instance
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into());
    instance.with_file_name(format!("{stem}.solution.json"))
}

fn status_exit(status: SolveStatus) -> ExitCode {
    match status {
        SolveStatus::Optimal | SolveStatus::TimeLimitFeasible => ExitCode::SUCCESS,
        SolveStatus::Infeasible => ExitCode::from(EXIT_INFEASIBLE),
        SolveStatus::TimeLimitNoSolution => ExitCode::from(EXIT_NO_INCUMBENT),
    }
}

fn print_report(instance: &Instance, result: &SolveResult) {
    println!(
        "instance {}: {} requests, {} vehicles",
        instance.name,
        instance.num_requests(),
        instance.num_vehicles()
    );
    println!(
        "status: {}  constraints: {}  nodes: {}  cpu: {:.3}s",
        result.status, result.constraints, result.nodes_explored, result.cpu_seconds
    );
    println!(
        "objective: {:.3}  bound: {:.3}  gap: {:.6}",
        result.objective, result.bound, result.gap
    );
    let Some(solution) = &result.solution else {
        return;
    };
    let n = instance.num_requests();
    for (k, vehicle) in solution.vehicles.iter().enumerate() {
        println!("vehicle {}:", k + 1);
        println!("  pickup route:   {}", render_route(&vehicle.pickup_route, "o1", "o2"));
        println!(
            "  delivery route: {}",
            render_route(&vehicle.delivery_route, "o3", "o4")
        );
        println!(
            "  start {:.3} | crossdock {:.3} -> {:.3} (unload {:.3}, reload {:.3}) | end {:.3}",
            vehicle.start_time,
            vehicle.crossdock_arrival,
            vehicle.crossdock_departure,
            vehicle.unload_complete,
            vehicle.reload_start,
            vehicle.end_time
        );
        let unloaded = flagged(&vehicle.unloads);
        let reloaded = flagged(&vehicle.reloads);
        if !unloaded.is_empty() || !reloaded.is_empty() {
            println!("  unloads: {}  reloads: {}", list(&unloaded), list(&reloaded));
        }
    }
    println!("request   pickup     delivery   ready      ride");
    for i in 1..=n {
        println!(
            "{:<9} {:<10.3} {:<10.3} {:<10.3} {:<10.3}",
            i,
            solution.serve_times[i - 1],
            solution.serve_times[n + i - 1],
            solution.transfer_ready[i - 1],
            solution.ride_times[i - 1]
        );
    }
    println!("total travel cost: {:.3}", solution.total_cost);
}

fn render_route(route: &[usize], from: &str, to: &str) -> String {
    let mut out = String::from(from);
    for v in route {
        out.push_str(&format!(" -> {v}"));
    }
    out.push_str(&format!(" -> {to}"));
    out
}

fn flagged(flags: &[bool]) -> Vec<usize> {
    flags
        .iter()
        .enumerate()
        .filter_map(|(idx, &b)| b.then_some(idx + 1))
        .collect()
}

fn list(items: &[usize]) -> String {
    if items.is_empty() {
        "(none)".into()
    } else {
        items
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn run_validate(cmd: &ValidateCmd) -> ExitCode {
    let instance = match load_instance(&cmd.instance) {
        Ok(instance) => instance,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FILE);
        }
    };
    let solution: Solution = match load_solution(&cmd.solution) {
        Ok(solution) => solution,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FILE);
        }
    };
    match validate(&instance, &solution) {
        Ok(report) => {
            print!("{report}");
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAIL)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FILE)
        }
    }
}

fn run_generate(cmd: &GenerateCmd) -> ExitCode {
    let params = GenerateParams::new(cmd.requests, cmd.vehicles, cmd.seed);
    let generated = match generate(&params) {
        Ok(generated) => generated,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Err(e) = store_instance(&cmd.out, &generated.instance) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_FILE);
    }
    println!(
        "wrote {} ({} requests, {} vehicles, seed {})",
        cmd.out.display(),
        cmd.requests,
        cmd.vehicles,
        cmd.seed
    );
    if let Some(path) = &cmd.witness {
        if let Err(e) = store_solution(&generated.witness, path) {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FILE);
        }
        println!("wrote witness {}", path.display());
    }
    ExitCode::SUCCESS
}

fn run_bench(cmd: &BenchCmd) -> ExitCode {
    println!("instance,n,vehicles,CNS,NE,cpu_s,ost,status,gap");
    let mut worst = ExitCode::SUCCESS;
    for path in &cmd.instances {
        let instance = match load_instance(path) {
            Ok(instance) => instance,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_FILE);
            }
        };
        match solve(&instance, &cmd.flags.options()) {
            Ok(result) => {
                println!(
                    "{},{},{},{},{},{:.3},{:.6},{},{:.6}",
                    instance.name,
                    instance.num_requests(),
                    instance.num_vehicles(),
                    result.constraints,
                    result.nodes_explored,
                    result.cpu_seconds,
                    result.objective,
                    result.status,
                    result.gap
                );
            }
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                worst = ExitCode::from(EXIT_FAIL);
            }
        }
    }
    worst
}
