use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sbmph::model::{frequency_stack, read_instance, write_instance, Instance};
use sbmph::{AngleMode, Method, ModelParams};
use sbmph_bench::config::GridFile;
use sbmph_bench::grid::{run_methods, wilson_interval};
use sbmph_bench::oracle_check;
use sbmph_bench::{emit_results, run_grid, run_grid_with_threads, ExperimentGrid, Result, Sweep};

#[derive(Parser)]
#[command(name = "sbmph", version, about = "Joint community detection and phase synchronization on SBM-Ph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one SBM-Ph instance and write it to a file (or stdout).
    Generate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run recovery methods on one instance and report SRER/EPS per method.
    Run {
        /// Read the instance from a file instead of generating it.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Print GPM iteration traces and CPQR pivot lists.
        #[arg(long)]
        trace: bool,
    },
    /// Sweep an (alpha, beta) grid and write tables, matrices and a manifest.
    Grid(GridArgs),
    /// Cross-check the fast algorithms against exhaustive references.
    OracleCheck {
        #[arg(long, default_value_t = 200)]
        cases: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0.05)]
    q: f64,
    #[arg(long, default_value_t = 8)]
    k_max: usize,
    #[arg(long, default_value = "discrete")]
    mode: AngleMode,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl ModelArgs {
    fn params(&self) -> ModelParams {
        ModelParams { n: self.n, m: self.m, p: self.p, q: self.q, k_max: self.k_max, mode: self.mode, seed: self.seed }
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Comma-separated subset of MF-CPQR, CPQR-SF, MF-GPM, GPM-SF.
    #[arg(long, value_delimiter = ',', default_value = "MF-CPQR,CPQR-SF,MF-GPM,GPM-SF")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = sbmph::spectral::DEFAULT_ZERO_PAD_FACTOR)]
    zero_pad_factor: usize,
    #[arg(long, default_value_t = sbmph::gpm::DEFAULT_ITERATIONS)]
    gpm_iters: usize,
}

#[derive(Args)]
struct GridArgs {
    /// TOML file whose keys override the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 8)]
    k_max: usize,
    #[arg(long, default_value = "discrete")]
    mode: AngleMode,
    #[arg(long, default_value_t = 2.0)]
    alpha_min: f64,
    #[arg(long, default_value_t = 20.0)]
    alpha_max: f64,
    #[arg(long, default_value_t = 6)]
    alpha_steps: usize,
    #[arg(long, default_value_t = 0.0)]
    beta_min: f64,
    #[arg(long, default_value_t = 10.0)]
    beta_max: f64,
    #[arg(long, default_value_t = 6)]
    beta_steps: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write zero instead of measured times, making outputs byte-reproducible.
    #[arg(long)]
    no_timing: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, short, default_value = "results")]
    out: PathBuf,
}

impl GridArgs {
    fn grid(&self) -> Result<ExperimentGrid> {
        let mut grid = ExperimentGrid {
            n: self.n,
            m: self.m,
            k_max: self.k_max,
            mode: self.mode,
            zero_pad_factor: self.solver.zero_pad_factor,
            alpha: Sweep::new(self.alpha_min, self.alpha_max, self.alpha_steps),
            beta: Sweep::new(self.beta_min, self.beta_max, self.beta_steps),
            trials: self.trials,
            methods: self.solver.methods.clone(),
            gpm_iters: self.solver.gpm_iters,
            base_seed: self.seed,
            record_timing: !self.no_timing,
        };
        if let Some(path) = &self.config {
            GridFile::load(path)?.apply(&mut grid)?;
        }
        Ok(grid)
    }
}

fn generate_cmd(model: &ModelArgs, out: Option<&PathBuf>) -> Result<()> {
    let inst = Instance::generate(&model.params())?;
    match out {
        Some(path) => write_instance(&inst, BufWriter::new(File::create(path)?))?,
        None => write_instance(&inst, io::stdout().lock())?,
    }
    Ok(())
}

fn run_cmd(instance: Option<&PathBuf>, model: &ModelArgs, solver: &SolverArgs, trace: bool) -> Result<()> {
    let inst = match instance {
        Some(path) => read_instance(BufReader::new(File::open(path)?))?,
        None => Instance::generate(&model.params())?,
    };
    let p = &inst.params;
    let grid = ExperimentGrid {
        n: p.n,
        m: p.m,
        k_max: p.k_max,
        mode: p.mode,
        zero_pad_factor: solver.zero_pad_factor,
        methods: solver.methods.clone(),
        gpm_iters: solver.gpm_iters,
        ..Default::default()
    };
    let stack = frequency_stack(&inst.observation, p.k_max);
    let runs = run_methods(&stack, &inst.truth, &solver.methods, &grid)?;
    let mut out = io::stdout().lock();
    writeln!(out, "method,exact_recovery,eps,time_ms")?;
    for r in &runs {
        writeln!(out, "{},{},{:.6},{:.3}", r.method, r.outcome.exact_recovery, r.outcome.eps, r.elapsed.as_secs_f64() * 1e3)?;
    }
    if trace {
        for r in &runs {
            if let Some(pivots) = &r.pivots {
                writeln!(out, "# {} pivots {:?}", r.method, pivots)?;
            }
            if let Some(gpm) = &r.gpm {
                writeln!(out, "# {} iterations_run={}", r.method, gpm.iterations_run)?;
                for rec in &gpm.trace {
                    writeln!(
                        out,
                        "# {} iter={} objective={:.6} changes={} elapsed_ms={:.3}",
                        r.method,
                        rec.iteration,
                        rec.objective,
                        rec.changes,
                        rec.elapsed.as_secs_f64() * 1e3
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn grid_cmd(args: &GridArgs) -> Result<()> {
    let grid = args.grid()?;
    let results = match args.threads {
        Some(t) => run_grid_with_threads(&grid, t)?,
        None => run_grid(&grid)?,
    };
    let paths = emit_results(&grid, &results, &args.out)?;
    let mut out = io::stdout().lock();
    writeln!(out, "alpha,beta,method,srer,srer_lo95,srer_hi95,eps_mean,eps_max,time_ms")?;
    for r in &results {
        let successes = (r.srer * r.trials as f64).round() as usize;
        let (lo, hi) = wilson_interval(successes, r.trials, 1.96);
        writeln!(
            out,
            "{:.3},{:.3},{},{:.3},{:.3},{:.3},{:.6},{:.6},{:.3}",
            r.alpha, r.beta, r.method, r.srer, lo, hi, r.eps_mean, r.eps_max, r.time_ms
        )?;
    }
    for path in paths {
        writeln!(out, "# wrote {}", path.display())?;
    }
    Ok(())
}

fn oracle_cmd(cases: usize, seed: u64) -> Result<bool> {
    let reports = [
        oracle_check::check_projection(cases, seed)?,
        oracle_check::check_argmax(cases, seed.wrapping_add(1))?,
        oracle_check::check_cpqr_pivots(cases, seed.wrapping_add(2))?,
        oracle_check::check_factorization(cases, seed.wrapping_add(3))?.0,
    ];
    for r in &reports {
        println!("{} {r}", if r.passed() { "PASS" } else { "FAIL" });
    }
    Ok(reports.iter().all(|r| r.passed()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate { model, out } => generate_cmd(model, out.as_ref()),
        Command::Run { instance, model, solver, trace } => run_cmd(instance.as_ref(), model, solver, *trace),
        Command::Grid(args) => grid_cmd(args),
        Command::OracleCheck { cases, seed } => match oracle_cmd(*cases, *seed) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(1),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

