//! Experiment grids over (problem × formulation × variant) for the AEiCP
//! solvers, with CSV traces, per-run reports and aggregate tables.

pub mod checks;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use aeicp::instances::{build_nep_instance, gen_rand_instance, random_start};
use aeicp::linalg::{cond_number, load_matrix_market};
use aeicp::rng::derive_seed;
use aeicp::{AeicpInstance, DcaConfig, Formulation, FormulationKind, RunResult, RunStatus, Variant};
use rayon::prelude::*;

pub use output::{emit_aggregate, emit_report, emit_trace, AggregateRow, ReportLine};

/// Stream offset separating start-point seeds from instance seeds.
const START_STREAM: u64 = 1 << 32;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(String),
    #[error("solver: {0}")]
    Solver(String),
}

impl BenchError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Io(_) => 2,
            Self::Solver(_) => 3,
        }
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type BenchResult<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Rand { n: usize, count: usize, base_seed: u64 },
    NepDir(PathBuf),
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub dataset: Dataset,
    pub formulations: Vec<FormulationKind>,
    pub variants: Vec<Variant>,
    pub cfg: DcaConfig,
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    /// Seed of the shared starting points (NEP datasets; RAND sets derive
    /// theirs from the base seed).
    pub start_seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> BenchResult<()> {
        if self.formulations.is_empty() {
            return Err(BenchError::Usage("no formulation selected".into()));
        }
        if self.variants.is_empty() {
            return Err(BenchError::Usage("no variant selected".into()));
        }
        if let Dataset::Rand { n, count, .. } = self.dataset {
            if count == 0 || n < 2 {
                return Err(BenchError::Usage(format!(
                    "RAND dataset needs n >= 2 and count >= 1 (got n = {n}, count = {count})"
                )));
            }
        }
        self.cfg
            .validate()
            .map_err(|e| BenchError::Usage(e.to_string()))
    }
}

/// One problem of a dataset with its shared starting point.
#[derive(Debug, Clone)]
pub struct Problem {
    pub label: String,
    pub instance: Arc<AeicpInstance>,
    pub cond_a: f64,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
}

impl Problem {
    pub fn new(instance: AeicpInstance, start_seed: u64) -> BenchResult<Self> {
        let cond_a = cond_number(&instance.a).map_err(|e| BenchError::Solver(e.to_string()))?;
        let (x0, y0) = random_start(instance.n, start_seed);
        Ok(Self {
            label: instance.label.clone(),
            instance: Arc::new(instance),
            cond_a,
            x0,
            y0,
        })
    }
}

/// The problems of `dataset`, plus one diagnostic per file that could not
/// be used.
pub fn load_problems(dataset: &Dataset, start_seed: u64) -> BenchResult<(Vec<Problem>, Vec<String>)> {
    match dataset {
        Dataset::Rand { n, count, base_seed } => {
            let mut out = Vec::with_capacity(*count);
            for i in 0..*count as u64 {
                let inst = gen_rand_instance(*n, derive_seed(*base_seed, i))
                    .map_err(|e| BenchError::Usage(e.to_string()))?;
                let inst = AeicpInstance {
                    label: format!("RAND({n})-{i}"),
                    ..inst
                };
                out.push(Problem::new(inst, derive_seed(*base_seed, START_STREAM + i))?);
            }
            Ok((out, Vec::new()))
        }
        Dataset::NepDir(dir) => {
            let mut files: Vec<PathBuf> = fs::read_dir(dir)
                .map_err(|e| BenchError::Io(format!("{}: {e}", dir.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "mtx"))
                .collect();
            files.sort();
            let mut out = Vec::new();
            let mut diags = Vec::new();
            for (i, path) in files.iter().enumerate() {
                match load_nep_problem(path, derive_seed(start_seed, i as u64)) {
                    Ok(p) => out.push(p),
                    Err(e) => diags.push(format!("{}: {e}", path.display())),
                }
            }
            Ok((out, diags))
        }
    }
}

pub fn load_nep_problem(path: &Path, start_seed: u64) -> BenchResult<Problem> {
    let text = fs::read_to_string(path)?;
    let raw = load_matrix_market(&text).map_err(|e| BenchError::Io(e.to_string()))?;
    let label = path
        .file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    let inst = build_nep_instance(&raw, &label).map_err(|e| BenchError::Solver(e.to_string()))?;
    Problem::new(inst, start_seed)
}

/// Result of one (problem, formulation, variant) cell.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub problem: usize,
    pub formulation: FormulationKind,
    pub variant: Variant,
    pub run: Result<RunResult, String>,
    pub cpu_seconds: f64,
}

impl CellOutcome {
    pub fn failed(&self) -> bool {
        match &self.run {
            Ok(r) => r.status == RunStatus::SubproblemFailure,
            Err(_) => true,
        }
    }
}

/// Runs one cell; the timer covers the engine only.
pub fn run_cell(problem: &Problem, kind: FormulationKind, cfg: &DcaConfig) -> (Result<RunResult, String>, f64) {
    let form = match Formulation::new(kind, problem.instance.clone(), cfg.rho) {
        Ok(f) => f,
        Err(e) => return (Err(e.to_string()), 0.0),
    };
    let t = Instant::now();
    let run = aeicp::run(&form, cfg, &problem.x0, &problem.y0).map_err(|e| e.to_string());
    (run, t.elapsed().as_secs_f64())
}

/// Runs every supported cell of the grid, in parallel on `jobs` threads.
/// The outcome order is fixed (problem, formulation, variant) regardless of
/// scheduling.
pub fn run_grid(
    problems: &[Problem],
    formulations: &[FormulationKind],
    variants: &[Variant],
    cfg: &DcaConfig,
    jobs: usize,
) -> BenchResult<Vec<CellOutcome>> {
    let mut cells = Vec::new();
    for p in 0..problems.len() {
        for &kind in formulations {
            for &v in variants.iter().filter(|v| v.supports(kind)) {
                cells.push((p, kind, v));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| BenchError::Usage(e.to_string()))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|&(p, kind, variant)| {
                let cfg = DcaConfig { variant, ..cfg.clone() };
                let (run, cpu_seconds) = run_cell(&problems[p], kind, &cfg);
                CellOutcome {
                    problem: p,
                    formulation: kind,
                    variant,
                    run,
                    cpu_seconds,
                }
            })
            .collect()
    }))
}

/// Aggregate rows of one formulation: one per problem, in problem order.
pub fn aggregate_rows(
    problems: &[Problem],
    cells: &[CellOutcome],
    kind: FormulationKind,
    variants: &[Variant],
) -> Vec<AggregateRow> {
    problems
        .iter()
        .enumerate()
        .map(|(i, p)| AggregateRow {
            problem: p.label.clone(),
            cond_a: p.cond_a,
            cells: variants
                .iter()
                .map(|&v| {
                    cells
                        .iter()
                        .find(|c| c.problem == i && c.formulation == kind && c.variant == v)
                        .and_then(|c| c.run.as_ref().ok().map(|r| (r.final_f(), r.report.c, c.cpu_seconds)))
                        .unwrap_or((f64::NAN, f64::NAN, f64::NAN))
                })
                .collect(),
        })
        .collect()
}

/// Summary of a finished experiment.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub problems: Vec<Problem>,
    pub cells: Vec<CellOutcome>,
    pub diagnostics: Vec<String>,
}

impl ExperimentOutcome {
    pub fn any_failure(&self) -> bool {
        self.cells.iter().any(CellOutcome::failed)
    }
}

/// File-name-safe form of a label.
pub fn slug(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

/// Runs the grid and writes, under `out_dir`:
/// `traces/<problem>_<formulation>_<variant>.csv`, `report.csv` and one
/// `aggregate_<formulation>.csv` per formulation.
pub fn run_experiment(spec: &ExperimentSpec) -> BenchResult<ExperimentOutcome> {
    spec.validate()?;
    let (problems, diagnostics) = load_problems(&spec.dataset, spec.start_seed)?;
    if problems.is_empty() {
        return Err(BenchError::Io(format!(
            "dataset contains no usable problem ({} diagnostics)",
            diagnostics.len()
        )));
    }
    let cells = run_grid(&problems, &spec.formulations, &spec.variants, &spec.cfg, spec.jobs)?;

    let trace_dir = spec.out_dir.join("traces");
    fs::create_dir_all(&trace_dir)?;
    let mut lines = Vec::with_capacity(cells.len());
    for c in &cells {
        let p = &problems[c.problem];
        if let Ok(r) = &c.run {
            let name = format!("{}_{}_{}.csv", slug(&p.label), c.formulation, slug(c.variant.name()));
            emit_trace(&r.trace, &trace_dir.join(name))?;
        }
        lines.push(ReportLine::from_cell(p, c));
    }
    emit_report(&lines, &spec.out_dir.join("report.csv"))?;
    for &kind in &spec.formulations {
        let variants: Vec<Variant> = spec.variants.iter().copied().filter(|v| v.supports(kind)).collect();
        let rows = aggregate_rows(&problems, &cells, kind, &variants);
        emit_aggregate(&variants, &rows, &spec.out_dir.join(format!("aggregate_{kind}.csv")))?;
    }
    Ok(ExperimentOutcome {
        problems,
        cells,
        diagnostics,
    })
}
