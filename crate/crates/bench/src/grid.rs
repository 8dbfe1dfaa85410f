use std::time::{Duration, Instant};

use rayon::prelude::*;
use sbmph::freqlinalg::{top_m_eigvecs, EigenOptions};
use sbmph::gpm::{init_from_spectral_output, run_gpm_from, GpmConfig, GpmRun};
use sbmph::metrics::{evaluate, TrialOutcome};
use sbmph::model::{frequency_stack, generate, FrequencyStack, GroundTruth};
use sbmph::spectral::{recover_from_factorization, SpectralConfig, SpectralOutput, DEFAULT_ZERO_PAD_FACTOR};
use sbmph::{AngleMode, FrequencySet, Method, ModelParams};
use serde::Deserialize;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct Sweep {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Sweep {
    pub fn new(min: f64, max: f64, steps: usize) -> Self {
        Self { min, max, steps }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.min],
            k => (0..k)
                .map(|t| self.min + (self.max - self.min) * t as f64 / (k - 1) as f64)
                .collect(),
        }
    }
}

/// An `(alpha, beta)` phase-diagram sweep: `p = alpha log N / N`,
/// `q = beta log N / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub n: usize,
    pub m: usize,
    pub k_max: usize,
    pub mode: AngleMode,
    pub zero_pad_factor: usize,
    pub alpha: Sweep,
    pub beta: Sweep,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub gpm_iters: usize,
    pub base_seed: u64,
    /// Measure wall time per method. When off, `time_ms` is written as zero
    /// and outputs are byte-reproducible.
    pub record_timing: bool,
}

impl Default for ExperimentGrid {
    /// The desk-scale profile.
    fn default() -> Self {
        Self {
            n: 300,
            m: 2,
            k_max: 8,
            mode: AngleMode::Discrete,
            zero_pad_factor: DEFAULT_ZERO_PAD_FACTOR,
            alpha: Sweep::new(2.0, 20.0, 6),
            beta: Sweep::new(0.0, 10.0, 6),
            trials: 20,
            methods: Method::ALL.to_vec(),
            gpm_iters: 50,
            base_seed: 1,
            record_timing: true,
        }
    }
}

impl ExperimentGrid {
    pub fn scale(&self) -> f64 {
        (self.n as f64).ln() / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::Config(msg));
        if self.m < 2 || !self.n.is_multiple_of(self.m) {
            return bad(format!("need M >= 2 dividing N, got N = {}, M = {}", self.n, self.m));
        }
        if self.k_max == 0 && self.methods.iter().any(|m| m.frequency_set() == FrequencySet::Fundamental) {
            return bad("single-frequency methods need k_max >= 1".into());
        }
        if self.trials == 0 || self.methods.is_empty() {
            return bad("need at least one trial and one method".into());
        }
        if self.alpha.steps == 0 || self.beta.steps == 0 {
            return bad("sweeps need at least one step".into());
        }
        if self.mode == AngleMode::Continuous && self.zero_pad_factor == 0 {
            return bad("zero_pad_factor must be positive".into());
        }
        for (name, sweep) in [("alpha", self.alpha), ("beta", self.beta)] {
            for v in sweep.values() {
                let prob = v * self.scale();
                if !(0.0..=1.0).contains(&prob) || !v.is_finite() {
                    return bad(format!("{name} = {v} gives probability {prob} outside [0, 1]"));
                }
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<(usize, usize, f64, f64)> {
        let (alphas, betas) = (self.alpha.values(), self.beta.values());
        let mut out = Vec::with_capacity(alphas.len() * betas.len());
        for (bi, &b) in betas.iter().enumerate() {
            for (ai, &a) in alphas.iter().enumerate() {
                out.push((ai, bi, a, b));
            }
        }
        out
    }

    pub fn model_params(&self, alpha: f64, beta: f64, seed: u64) -> ModelParams {
        ModelParams {
            n: self.n,
            m: self.m,
            p: (alpha * self.scale()).min(1.0),
            q: (beta * self.scale()).min(1.0),
            k_max: self.k_max,
            mode: self.mode,
            seed,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one trial, derived from its grid position only.
pub fn trial_seed(base: u64, alpha_idx: usize, beta_idx: usize, trial: usize) -> u64 {
    let h = splitmix64(splitmix64(splitmix64(alpha_idx as u64) ^ beta_idx as u64) ^ trial as u64);
    base ^ h
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub alpha: f64,
    pub beta: f64,
    pub method: Method,
    pub srer: f64,
    pub eps_mean: f64,
    pub eps_max: f64,
    pub time_ms: f64,
    pub trials: usize,
}

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    pub outcome: TrialOutcome,
    pub elapsed: Duration,
    pub gpm: Option<GpmRun>,
    pub pivots: Option<Vec<usize>>,
}

fn spectral(stack: &FrequencyStack, m: usize, set: FrequencySet, cfg: &SpectralConfig) -> Result<(SpectralOutput, Duration)> {
    let start = Instant::now();
    let basis = top_m_eigvecs(stack, m, set, &cfg.eigen)?;
    let fact = sbmph::freqlinalg::mf_cpqr(&basis)?;
    let cfg = SpectralConfig { frequencies: set, ..cfg.clone() };
    let out = recover_from_factorization(fact, &cfg);
    Ok((out, start.elapsed()))
}

/// Runs every requested method on one instance. GPM methods start from the
/// spectral estimate of the same frequency set; their time includes it.
pub fn run_methods(stack: &FrequencyStack, truth: &GroundTruth, methods: &[Method], grid: &ExperimentGrid) -> Result<Vec<MethodRun>> {
    let spec_cfg = SpectralConfig {
        mode: grid.mode,
        zero_pad_factor: grid.zero_pad_factor,
        frequencies: FrequencySet::All,
        eigen: EigenOptions::default(),
    };
    let mut cache: Vec<(FrequencySet, SpectralOutput, Duration)> = Vec::new();
    let mut runs = Vec::with_capacity(methods.len());
    for &method in methods {
        let set = method.frequency_set();
        if !cache.iter().any(|(s, _, _)| *s == set) {
            let (out, t) = spectral(stack, truth.m, set, &spec_cfg)?;
            cache.push((set, out, t));
        }
        let (_, spec, spec_time) = cache.iter().find(|(s, _, _)| *s == set).unwrap();
        let run = if method.is_gpm() {
            let start = Instant::now();
            let mut cfg = GpmConfig::new(grid.mode).with_frequencies(set);
            cfg.zero_pad_factor = grid.zero_pad_factor;
            cfg.iterations = grid.gpm_iters;
            let init = init_from_spectral_output(spec)?;
            let gpm = run_gpm_from(init, stack, &cfg)?;
            MethodRun {
                method,
                outcome: evaluate(&gpm.estimate, truth),
                elapsed: *spec_time + start.elapsed(),
                gpm: Some(gpm),
                pivots: None,
            }
        } else {
            MethodRun {
                method,
                outcome: evaluate(&spec.estimate, truth),
                elapsed: *spec_time,
                gpm: None,
                pivots: Some(spec.factorization.pivots().to_vec()),
            }
        };
        runs.push(run);
    }
    Ok(runs)
}

/// One paired trial: a single generated instance shared by all methods.
pub fn run_trial(grid: &ExperimentGrid, alpha: f64, beta: f64, seed: u64) -> Result<Vec<MethodRun>> {
    let params = grid.model_params(alpha, beta, seed);
    let (truth, obs) = generate(&params)?;
    let stack = frequency_stack(&obs, grid.k_max);
    run_methods(&stack, &truth, &grid.methods, grid)
}

/// Runs the whole sweep on the current rayon pool. Results are ordered by
/// beta, then alpha, then the configured method order, and do not depend on
/// scheduling.
pub fn run_grid(grid: &ExperimentGrid) -> Result<Vec<CellResult>> {
    grid.validate()?;
    let cells = grid.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..grid.trials).map(move |t| (c, t))).collect();
    let outcomes: Vec<Vec<MethodRun>> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let (ai, bi, a, b) = cells[c];
            run_trial(grid, a, b, trial_seed(grid.base_seed, ai, bi, t))
        })
        .collect::<Result<_>>()?;

    let mut results = Vec::with_capacity(cells.len() * grid.methods.len());
    for (c, &(_, _, alpha, beta)) in cells.iter().enumerate() {
        let trials = &outcomes[c * grid.trials..(c + 1) * grid.trials];
        for (mi, &method) in grid.methods.iter().enumerate() {
            let runs: Vec<&MethodRun> = trials.iter().map(|t| &t[mi]).collect();
            let count = runs.len() as f64;
            let time_ms = if grid.record_timing {
                runs.iter().map(|r| r.elapsed.as_secs_f64() * 1e3).sum::<f64>() / count
            } else {
                0.0
            };
            results.push(CellResult {
                alpha,
                beta,
                method,
                srer: runs.iter().filter(|r| r.outcome.exact_recovery).count() as f64 / count,
                eps_mean: runs.iter().map(|r| r.outcome.eps).sum::<f64>() / count,
                eps_max: runs.iter().map(|r| r.outcome.eps).fold(0.0, f64::max),
                time_ms,
                trials: runs.len(),
            });
        }
    }
    Ok(results)
}

/// [`run_grid`] on a dedicated pool of `threads` workers.
pub fn run_grid_with_threads(grid: &ExperimentGrid, threads: usize) -> Result<Vec<CellResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    pool.install(|| run_grid(grid))
}

/// Wilson score interval for a success fraction over `n` trials.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let phat = successes as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let center = (phat + z * z / (2.0 * nf)) / denom;
    let half = z * ((phat * (1.0 - phat) + z * z / (4.0 * nf)) / nf).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}
