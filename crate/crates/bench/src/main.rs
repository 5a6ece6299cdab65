use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use aeicp::instances::gen_rand_instance;
use aeicp::linalg::write_matrix_market;
use aeicp::rng::derive_seed;
use aeicp::{DcaConfig, FormulationKind, RunStatus, Variant};
use aeicp_bench::{
    checks, emit_trace, load_nep_problem, load_problems, run_cell, run_experiment, BenchError,
    BenchResult, Dataset, ExperimentSpec,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aeicp-bench", version, about = "DC algorithms for the asymmetric eigenvalue complementarity problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write RAND instances as Matrix Market pairs <label>_A.mtx, <label>_B.mtx.
    Gen {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "instances")]
        out: PathBuf,
    },
    /// Solve one problem with one variant and print its report.
    Solve {
        #[arg(long, default_value = "dcp1")]
        formulation: String,
        #[arg(long, default_value = "DCA")]
        variant: String,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Matrix Market file to use instead of a RAND instance.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Where to write the trace CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        params: Params,
    },
    /// Run the (problem × formulation × variant) grid.
    Bench {
        /// Comma-separated list, or "all".
        #[arg(long, default_value = "all")]
        formulation: String,
        /// Comma-separated list, or "all".
        #[arg(long, default_value = "all")]
        variant: String,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory of Matrix Market files; replaces the RAND set.
        #[arg(long)]
        nep_dir: Option<PathBuf>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[command(flatten)]
        params: Params,
    },
    /// Run the quick invariant suites.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct Params {
    #[arg(long, default_value_t = 200)]
    maxit: usize,
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    #[arg(long, default_value_t = 10.0)]
    alpha_bar: f64,
    #[arg(long, default_value_t = 10)]
    q: usize,
    #[arg(long, default_value_t = 0.99)]
    beta_bar: f64,
    /// Relative stopping tolerance on successive objective values.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Apply inertia only from the third iterate on.
    #[arg(long)]
    conservative: bool,
}

impl Params {
    fn config(&self, variant: Variant) -> DcaConfig {
        DcaConfig {
            rho: self.rho,
            alpha_bar: self.alpha_bar,
            q: self.q,
            beta_bar: self.beta_bar,
            max_iter: self.maxit,
            eps_stop: self.tol,
            conservative_inertia: self.conservative,
            ..DcaConfig::new(variant)
        }
    }
}

fn usage(e: impl std::fmt::Display) -> BenchError {
    BenchError::Usage(e.to_string())
}

fn parse_list<T>(s: &str, all: &[T]) -> BenchResult<Vec<T>>
where
    T: Copy + std::str::FromStr,
    T::Err: std::fmt::Display,
{
    if s.eq_ignore_ascii_case("all") {
        return Ok(all.to_vec());
    }
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(usage))
        .collect()
}

fn gen(n: usize, count: usize, seed: u64, out: PathBuf) -> BenchResult<()> {
    fs::create_dir_all(&out)?;
    for i in 0..count as u64 {
        let inst = gen_rand_instance(n, derive_seed(seed, i)).map_err(usage)?;
        let stem = format!("rand{n}_{i}");
        write_matrix_market(&inst.a, fs::File::create(out.join(format!("{stem}_A.mtx")))?)?;
        write_matrix_market(&inst.b, fs::File::create(out.join(format!("{stem}_B.mtx")))?)?;
        println!("{stem}: mu = {}", inst.mu);
    }
    Ok(())
}

fn solve(
    formulation: &str,
    variant: &str,
    n: usize,
    seed: u64,
    matrix: Option<PathBuf>,
    out: Option<PathBuf>,
    params: &Params,
) -> BenchResult<()> {
    let kind: FormulationKind = formulation.parse().map_err(usage)?;
    let variant: Variant = variant.parse().map_err(usage)?;
    let cfg = params.config(variant);
    cfg.validate().map_err(usage)?;
    if !variant.supports(kind) {
        return Err(usage(format!("{variant} does not run on {kind}")));
    }
    let problem = match matrix {
        Some(path) => load_nep_problem(&path, seed)?,
        None => {
            let (mut ps, _) = load_problems(&Dataset::Rand { n, count: 1, base_seed: seed }, seed)?;
            ps.remove(0)
        }
    };
    let (run, cpu) = run_cell(&problem, kind, &cfg);
    let r = run.map_err(BenchError::Solver)?;
    println!(
        "{} {kind} {variant}: status={} iterations={} f={} c={} lambda={} cpu_s={cpu} monitor_violations={}",
        problem.label,
        r.status,
        r.trace.last().map_or(0, |t| t.k),
        r.final_f(),
        r.report.c,
        r.report.lambda,
        r.violations.len()
    );
    if let Some(path) = out {
        emit_trace(&r.trace, &path)?;
    }
    if r.status == RunStatus::SubproblemFailure {
        return Err(BenchError::Solver("subproblem solver failed twice in a row".into()));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bench(
    formulation: &str,
    variant: &str,
    n: usize,
    count: usize,
    seed: u64,
    nep_dir: Option<PathBuf>,
    out: PathBuf,
    jobs: usize,
    params: &Params,
) -> BenchResult<()> {
    let spec = ExperimentSpec {
        dataset: match nep_dir {
            Some(dir) => Dataset::NepDir(dir),
            None => Dataset::Rand { n, count, base_seed: seed },
        },
        formulations: parse_list(formulation, &FormulationKind::ALL)?,
        variants: parse_list(variant, &Variant::ALL)?,
        cfg: params.config(Variant::Dca),
        out_dir: out,
        jobs,
        start_seed: seed,
    };
    let outcome = run_experiment(&spec)?;
    for d in &outcome.diagnostics {
        eprintln!("skipped {d}");
    }
    let failed = outcome.cells.iter().filter(|c| c.failed()).count();
    println!(
        "{} problems, {} runs, {failed} failed; results in {}",
        outcome.problems.len(),
        outcome.cells.len(),
        spec.out_dir.display()
    );
    if failed > 0 {
        return Err(BenchError::Solver(format!("{failed} runs failed")));
    }
    Ok(())
}

fn check(seed: u64) -> BenchResult<()> {
    let results = checks::run_all(seed);
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    if results.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(BenchError::Solver("invariant check failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.command {
        Command::Gen { n, count, seed, out } => gen(n, count, seed, out),
        Command::Solve {
            formulation,
            variant,
            n,
            seed,
            matrix,
            out,
            params,
        } => solve(&formulation, &variant, n, seed, matrix, out, &params),
        Command::Bench {
            formulation,
            variant,
            n,
            count,
            seed,
            nep_dir,
            out,
            jobs,
            params,
        } => bench(&formulation, &variant, n, count, seed, nep_dir, out, jobs, &params),
        Command::Check { seed } => check(seed),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
