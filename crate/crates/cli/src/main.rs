//! `sml`: solve, simulate, classify and run experiment suites on stationary
//! bipartite matching instances.
//!
//! Exit codes: 0 on success, 1 when an experiment suite has a failing
//! criterion, 2 on usage, I/O or input errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stationary_matching::analytics::{classify, instance_transformation, is_vwhc};
use stationary_matching::experiments::{run_suite, ExperimentParams, Suite};
use stationary_matching::instance::{example_instance, validate, ExampleName, ProblemInstance};
use stationary_matching::lp::{
    proposal_probabilities, solve_tlp_with, Benchmark, LpSolution, SolveOptions, DEFAULT_LP_TOL,
};
use stationary_matching::simulator::{format_sig, replicate, Policy, SimConfig, CSV_HEADER};

#[derive(Parser)]
#[command(name = "sml", version, about = "Stationary bipartite matching toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the tightened LP and write the solution as JSON.
    Solve {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum, default_value_t = BenchmarkArg::Online)]
        benchmark: BenchmarkArg,
        #[arg(long, default_value_t = DEFAULT_LP_TOL)]
        lp_tol: f64,
        /// Directory for solution.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Simulate one or more policies and print one CSV row per replication.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum, default_values_t = [PolicyArg::Correlated])]
        policy: Vec<PolicyArg>,
        /// Run on the transformed instance, which carries TOP/BOT labels.
        #[arg(long)]
        transform: bool,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.05)]
        epsilon_prime: f64,
        #[arg(long, default_value_t = 1e4)]
        horizon: f64,
        /// Defaults to a fifth of the horizon.
        #[arg(long)]
        burnin: Option<f64>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = 20_240_601)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_LP_TOL)]
        lp_tol: f64,
        /// Also write simulate.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify online types and report whether the instance is VWHC.
    Classify {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.05)]
        epsilon_prime: f64,
        #[arg(long, default_value_t = DEFAULT_LP_TOL)]
        lp_tol: f64,
        /// Also write classify.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in experiment suite and print PASS/FAIL per criterion.
    Experiment {
        suite: Suite,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        epsilon_prime: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        burnin: Option<f64>,
        /// Also write results.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Source {
    /// Instance JSON path, or one of b1, b2, b3.
    #[arg(long)]
    instance: String,
    /// Size of a built-in instance.
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Use this solution JSON instead of solving.
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchmarkArg {
    Online,
    Offline,
}

impl From<BenchmarkArg> for Benchmark {
    fn from(b: BenchmarkArg) -> Self {
        match b {
            BenchmarkArg::Online => Benchmark::Online,
            BenchmarkArg::Offline => Benchmark::Offline,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum PolicyArg {
    Correlated,
    BalancedGreedy,
    Greedy,
    NoMatch,
}

enum Failure {
    Usage(String),
    Suite,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Result<T> = std::result::Result<T, Failure>;

struct Loaded {
    instance: ProblemInstance,
    /// Canonical solution shipped with a built-in, if any.
    canonical: Option<LpSolution>,
}

fn load(source: &Source) -> Result<Loaded> {
    if let Ok(name) = source.instance.parse::<ExampleName>() {
        let b = example_instance(name, source.n)?;
        return Ok(Loaded {
            instance: b.instance,
            canonical: b.solution,
        });
    }
    let path = Path::new(&source.instance);
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read instance {}: {e}", path.display())))?;
    let instance = ProblemInstance::from_json(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let problems = validate(&instance);
    if !problems.is_empty() {
        let list: Vec<_> = problems.iter().map(ToString::to_string).collect();
        return Err(Failure::Usage(format!(
            "{}: invalid instance: {}",
            path.display(),
            list.join("; ")
        )));
    }
    Ok(Loaded {
        instance,
        canonical: None,
    })
}

/// The solution given by `--solution`, else the built-in's canonical
/// solution, else a fresh solve.
fn solution(
    source: &Source,
    loaded: &Loaded,
    benchmark: Benchmark,
    tol: f64,
) -> Result<LpSolution> {
    if let Some(path) = &source.solution {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read solution {}: {e}", path.display())))?;
        let sol = LpSolution::from_json(&text)?;
        if sol.benchmark != benchmark {
            return Err(Failure::Usage(format!(
                "{}: expected a {benchmark} solution, found {}",
                path.display(),
                sol.benchmark
            )));
        }
        return Ok(sol);
    }
    match &loaded.canonical {
        Some(sol) if sol.benchmark == benchmark => Ok(sol.clone()),
        _ => Ok(solve(&loaded.instance, benchmark, tol)?.0),
    }
}

fn solve(
    inst: &ProblemInstance,
    benchmark: Benchmark,
    tol: f64,
) -> Result<(LpSolution, stationary_matching::lp::SolveStats)> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::Usage(format!(
            "--lp-tol must be positive, got {tol}"
        )));
    }
    let opts = SolveOptions {
        tolerance: tol,
        ..SolveOptions::default()
    };
    Ok(solve_tlp_with(inst, benchmark, &opts)?)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn check_epsilon(flag: &str, eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 0.1 {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "{flag} must lie in (0, 0.1), got {eps}"
        )))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve {
            source,
            benchmark,
            lp_tol,
            out,
        } => {
            let loaded = load(&source)?;
            let (sol, stats) = solve(&loaded.instance, benchmark.into(), lp_tol)?;
            write_file(&out, "solution.json", &sol.to_json())?;
            println!(
                "objective={} cuts={} rounds={} time_ms={:.3}",
                format_sig(sol.objective),
                stats.cuts,
                stats.rounds,
                stats.elapsed.as_secs_f64() * 1e3
            );
        }
        Command::Simulate {
            source,
            policy,
            transform,
            epsilon,
            epsilon_prime,
            horizon,
            burnin,
            reps,
            seed,
            lp_tol,
            out,
        } => {
            let loaded = load(&source)?;
            let needs_solution = transform || policy.contains(&PolicyArg::Correlated);
            let (inst, sol) = if needs_solution {
                let sol = solution(&source, &loaded, Benchmark::Online, lp_tol)?;
                if transform {
                    check_epsilon("--epsilon", epsilon)?;
                    check_epsilon("--epsilon-prime", epsilon_prime)?;
                    let t =
                        instance_transformation(&loaded.instance, &sol, epsilon, epsilon_prime)?;
                    (t.instance, Some(t.sol))
                } else {
                    (loaded.instance, Some(sol))
                }
            } else {
                (loaded.instance, None)
            };
            let mut cfg = SimConfig::new(horizon, seed);
            if let Some(b) = burnin {
                cfg = cfg.with_burn_in(b);
            }
            let mut csv = format!("{CSV_HEADER}\n");
            for p in policy {
                let policy = match p {
                    PolicyArg::Correlated => {
                        let sol = sol.as_ref().expect("solution computed for correlated");
                        Policy::correlated(proposal_probabilities(&inst, sol)?)
                    }
                    PolicyArg::BalancedGreedy => Policy::balanced_greedy(),
                    PolicyArg::Greedy => Policy::greedy(),
                    PolicyArg::NoMatch => Policy::no_match(),
                };
                for e in replicate(&inst, &policy, reps, &cfg)? {
                    let _ = writeln!(csv, "{}", e.csv_row());
                }
            }
            print!("{csv}");
            if let Some(dir) = out {
                write_file(&dir, "simulate.csv", &csv)?;
            }
        }
        Command::Classify {
            source,
            epsilon,
            epsilon_prime,
            lp_tol,
            out,
        } => {
            check_epsilon("--epsilon", epsilon)?;
            check_epsilon("--epsilon-prime", epsilon_prime)?;
            let loaded = load(&source)?;
            let sol = solution(&source, &loaded, Benchmark::Online, lp_tol)?;
            let c = classify(&loaded.instance, &sol, epsilon, epsilon_prime)?;
            let mut csv = String::from("type_id,verdict,r_threshold,gain_share\n");
            for t in &c.types {
                let r = t.r_threshold.map(format_sig).unwrap_or_default();
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    loaded.instance.names().online[t.j],
                    t.verdict.as_str(),
                    r,
                    format_sig(c.gain_share(t.j))
                );
            }
            print!("{csv}");
            println!("vwhc={}", is_vwhc(&c, epsilon)?);
            if let Some(dir) = out {
                write_file(&dir, "classify.csv", &csv)?;
            }
        }
        Command::Experiment {
            suite,
            reps,
            seed,
            epsilon,
            epsilon_prime,
            horizon,
            burnin,
            out,
        } => {
            let d = ExperimentParams::default();
            let params = ExperimentParams {
                seed: seed.unwrap_or(d.seed),
                reps: reps.unwrap_or(d.reps),
                epsilon: epsilon.unwrap_or(d.epsilon),
                epsilon_prime: epsilon_prime.unwrap_or(d.epsilon_prime),
                horizon,
                burn_in: burnin,
            };
            check_epsilon("--epsilon", params.epsilon)?;
            check_epsilon("--epsilon-prime", params.epsilon_prime)?;
            let results = run_suite(suite, &params)?;
            for r in &results {
                println!("{r}");
            }
            if let Some(dir) = out {
                write_file(
                    &dir,
                    "results.json",
                    &serde_json::to_string_pretty(&results)?,
                )?;
            }
            if results.iter().any(|r| !r.passed) {
                return Err(Failure::Suite);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = std::env::var("SML_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Suite) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("sml: {msg}");
            ExitCode::from(2)
        }
    }
}
