//! Iterative multi-frequency generalized power method.
//!
//! Each step multiplies every frequency matrix by the current one-hot phase
//! matrix `V^(k)`, scores every (node, cluster) pair by maximizing the summed
//! trigonometric polynomial over the phase grid, projects the scores onto
//! balanced assignments and re-reads each node's phase from its assigned
//! cluster.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::assignment::{project_onto_h, ScoreMatrix};
use crate::error::{Error, Result};
use crate::freqlinalg::{EigenOptions, FrequencySet};
use crate::model::{rng_from_seed, AngleMode, FrequencyStack, Phases};
use crate::spectral::{
    recover_spectral, search_grid_size, Estimate, GridSearch, Method, SpectralConfig, SpectralOutput,
    DEFAULT_ZERO_PAD_FACTOR,
};

pub const DEFAULT_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpmInit {
    /// Spectral estimate from the same frequency set, rebalanced.
    Spectral,
    /// Uniformly random balanced assignment and phases. Expect poor optima.
    Random { seed: u64 },
}

#[derive(Debug, Clone)]
pub struct GpmConfig {
    pub mode: AngleMode,
    pub zero_pad_factor: usize,
    pub frequencies: FrequencySet,
    pub iterations: usize,
    pub early_stop: bool,
    pub init: GpmInit,
    pub eigen: EigenOptions,
}

impl GpmConfig {
    pub fn new(mode: AngleMode) -> Self {
        Self {
            mode,
            zero_pad_factor: DEFAULT_ZERO_PAD_FACTOR,
            frequencies: FrequencySet::All,
            iterations: DEFAULT_ITERATIONS,
            early_stop: true,
            init: GpmInit::Spectral,
            eigen: EigenOptions::default(),
        }
    }

    pub fn with_frequencies(mut self, set: FrequencySet) -> Self {
        self.frequencies = set;
        self
    }

    pub fn spectral(&self) -> SpectralConfig {
        SpectralConfig {
            mode: self.mode,
            zero_pad_factor: self.zero_pad_factor,
            frequencies: self.frequencies,
            eigen: self.eigen.clone(),
        }
    }
}

/// Current (assignment, phase) iterate. The per-frequency matrices
/// `V^(k)_{i, c_i} = exp(i k theta_i) / sqrt(s)` are implied.
#[derive(Debug, Clone, PartialEq)]
pub struct GpmState {
    pub iteration: usize,
    pub m: usize,
    pub assignment: Vec<usize>,
    /// Phase indices on a grid of `grid_size` points.
    pub phase_index: Vec<u32>,
    pub grid_size: usize,
}

impl GpmState {
    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn cluster_size(&self) -> usize {
        self.n() / self.m
    }

    pub fn phases(&self) -> Phases {
        Phases::Grid { size: self.grid_size, index: self.phase_index.clone() }
    }

    /// Dense `V^(k)`.
    pub fn v_dense(&self, k: i32) -> DMatrix<Complex64> {
        let phases = self.phases();
        let scale = 1.0 / (self.cluster_size() as f64).sqrt();
        let mut v = DMatrix::zeros(self.n(), self.m);
        for i in 0..self.n() {
            v[(i, self.assignment[i])] = phases.unit(i, k as i64) * scale;
        }
        v
    }

    fn estimate(&self, mode: AngleMode, method: Method) -> Estimate {
        Estimate { m: self.m, assignment: self.assignment.clone(), phases: self.phases(), mode, method }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub iteration: usize,
    pub objective: f64,
    pub changes: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct GpmRun {
    pub estimate: Estimate,
    pub state: GpmState,
    pub trace: Vec<IterRecord>,
    /// Iterations actually executed (fewer than configured after an early stop).
    pub iterations_run: usize,
}

/// Rebalances a spectral estimate: projects its per-row scores onto balanced
/// assignments and takes each node's phase from its assigned row.
pub fn init_from_spectral_output(out: &SpectralOutput) -> Result<GpmState> {
    let (n, m) = (out.scores.n(), out.scores.m());
    let proj = project_onto_h(&out.scores, n / m)?;
    let assignment = proj.assignment.into_labels();
    let phase_index = assignment.iter().enumerate().map(|(i, &c)| out.best_phase[i * m + c]).collect();
    let grid_size = out.estimate.phases.grid_size().expect("spectral phases are on a grid");
    Ok(GpmState { iteration: 0, m, assignment, phase_index, grid_size })
}

pub fn init_from_spectral(stack: &FrequencyStack, m: usize, cfg: &GpmConfig) -> Result<GpmState> {
    match cfg.init {
        GpmInit::Spectral => init_from_spectral_output(&recover_spectral(stack, m, &cfg.spectral())?),
        GpmInit::Random { seed } => random_init(stack.n(), m, search_grid_size(stack.k_max(), cfg.mode, cfg.zero_pad_factor), seed),
    }
}

pub fn random_init(n: usize, m: usize, grid_size: usize, seed: u64) -> Result<GpmState> {
    if m == 0 || !n.is_multiple_of(m) {
        return Err(Error::params("N must be a multiple of M"));
    }
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut assignment = vec![0; n];
    for (slot, &i) in order.iter().enumerate() {
        assignment[i] = slot / (n / m);
    }
    let phase_index = (0..n).map(|_| rng.random_range(0..grid_size as u32)).collect();
    Ok(GpmState { iteration: 0, m, assignment, phase_index, grid_size })
}

fn roots(size: usize) -> Vec<Complex64> {
    (0..size).map(|r| Complex64::cis(TAU * r as f64 / size as f64)).collect()
}

/// `A^(k) V^(k)` for every `k >= 0` in `magnitudes`, as row-major `N x M`.
/// Scatter-adds over edges, `O(|E|)` per frequency.
fn products(state: &GpmState, stack: &FrequencyStack, magnitudes: &[i32]) -> Vec<Vec<Complex64>> {
    let (n, m) = (state.n(), state.m);
    let size = state.grid_size as u64;
    let table = roots(state.grid_size);
    let scale = 1.0 / (state.cluster_size() as f64).sqrt();
    magnitudes
        .par_iter()
        .map(|&k| {
            let kk = (k as u64) % size;
            let v: Vec<Complex64> = state
                .phase_index
                .iter()
                .map(|&t| table[((kk * t as u64) % size) as usize] * scale)
                .collect();
            let mut w = vec![Complex64::default(); n * m];
            let (vals, _) = stack.raw(k);
            for (&(i, j), &a) in stack.edges().iter().zip(vals) {
                let (i, j) = (i as usize, j as usize);
                w[i * m + state.assignment[j]] += a * v[j];
                w[j * m + state.assignment[i]] += a.conj() * v[i];
            }
            w
        })
        .collect()
}

/// One power-method step; returns the next state.
pub fn gpm_step(state: &GpmState, stack: &FrequencyStack, cfg: &GpmConfig) -> Result<GpmState> {
    let (n, m) = (state.n(), state.m);
    if stack.n() != n {
        return Err(Error::params("state and stack disagree on N"));
    }
    let k_max = stack.k_max();
    let freqs = cfg.frequencies.frequencies(k_max)?;
    let mut magnitudes: Vec<i32> = freqs.iter().map(|k| k.abs()).collect();
    magnitudes.sort_unstable();
    magnitudes.dedup();
    let w = products(state, stack, &magnitudes);
    let slot_of = |k: i32| magnitudes.iter().position(|&a| a == k.abs()).unwrap();
    let picks: Vec<(usize, usize, bool)> = freqs
        .iter()
        .map(|&k| ((k + k_max as i32) as usize, slot_of(k), k < 0))
        .collect();

    let rows: Vec<(Vec<f64>, Vec<u32>)> = (0..n)
        .into_par_iter()
        .map_init(
            || (GridSearch::new(k_max, state.grid_size), vec![Complex64::default(); 2 * k_max + 1]),
            |(search, coeffs), i| {
                let mut scores = Vec::with_capacity(m);
                let mut phases = Vec::with_capacity(m);
                for c in 0..m {
                    coeffs.iter_mut().for_each(|z| *z = Complex64::default());
                    for &(pos, slot, conj) in &picks {
                        let z = w[slot][i * m + c];
                        coeffs[pos] = if conj { z.conj() } else { z };
                    }
                    let (idx, score) = search.argmax(coeffs);
                    scores.push(score);
                    phases.push(idx as u32);
                }
                (scores, phases)
            },
        )
        .collect();

    let scores = ScoreMatrix::new(n, m, rows.iter().flat_map(|(s, _)| s.iter().copied()).collect())?;
    let assignment = project_onto_h(&scores, n / m)?.assignment.into_labels();
    let phase_index = assignment.iter().enumerate().map(|(i, &c)| rows[i].1[c]).collect();
    Ok(GpmState { iteration: state.iteration + 1, m, assignment, phase_index, grid_size: state.grid_size })
}

/// Likelihood surrogate `sum_k sum_m sum_{i,j in S_m} <A^(k)_ij, exp(i k (theta_i - theta_j))>`
/// over the configured frequencies.
pub fn objective(stack: &FrequencyStack, assignment: &[usize], phases: &Phases, set: FrequencySet) -> Result<f64> {
    let freqs = set.frequencies(stack.k_max())?;
    let mut total = 0.0;
    for (e, &(i, j)) in stack.edges().iter().enumerate() {
        let (i, j) = (i as usize, j as usize);
        if assignment[i] != assignment[j] {
            continue;
        }
        for &k in &freqs {
            let rel = phases.unit(i, k as i64) * phases.unit(j, k as i64).conj();
            total += 2.0 * (stack.entry(k, e).conj() * rel).re;
        }
    }
    Ok(total)
}

/// [`objective`] for a state whose phases live on its search grid, using a
/// table of roots of unity instead of per-edge trigonometry.
fn grid_objective(stack: &FrequencyStack, state: &GpmState, freqs: &[i32]) -> f64 {
    let size = state.grid_size as i64;
    let table = roots(state.grid_size);
    let mut total = 0.0;
    for (e, &(i, j)) in stack.edges().iter().enumerate() {
        let (i, j) = (i as usize, j as usize);
        if state.assignment[i] != state.assignment[j] {
            continue;
        }
        let diff = state.phase_index[i] as i64 - state.phase_index[j] as i64;
        for &k in freqs {
            let rel = table[(k as i64 * diff).rem_euclid(size) as usize];
            total += 2.0 * (stack.entry(k, e).conj() * rel).re;
        }
    }
    total
}

/// Runs the configured number of steps from `init`, stopping early on an
/// exact fixed point when enabled.
pub fn run_gpm_from(init: GpmState, stack: &FrequencyStack, cfg: &GpmConfig) -> Result<GpmRun> {
    let freqs = cfg.frequencies.frequencies(stack.k_max())?;
    let mut state = init;
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut iterations_run = 0;
    for _ in 0..cfg.iterations {
        let start = Instant::now();
        let next = gpm_step(&state, stack, cfg)?;
        let elapsed = start.elapsed();
        let changes = next.assignment.iter().zip(&state.assignment).filter(|(a, b)| a != b).count();
        let fixed = next.assignment == state.assignment && next.phase_index == state.phase_index;
        trace.push(IterRecord {
            iteration: next.iteration,
            objective: grid_objective(stack, &next, &freqs),
            changes,
            elapsed,
        });
        state = next;
        iterations_run += 1;
        if fixed && cfg.early_stop {
            break;
        }
    }
    Ok(GpmRun {
        estimate: state.estimate(cfg.mode, Method::gpm_for(cfg.frequencies)),
        state,
        trace,
        iterations_run,
    })
}

pub fn run_gpm(stack: &FrequencyStack, m: usize, cfg: &GpmConfig) -> Result<GpmRun> {
    let init = init_from_spectral(stack, m, cfg)?;
    run_gpm_from(init, stack, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{clean_matrix, frequency_stack, generate, GroundTruth, ModelParams};

    fn truth_state(truth: &GroundTruth) -> GpmState {
        let Phases::Grid { size, index } = &truth.phases else { panic!() };
        GpmState { iteration: 0, m: truth.m, assignment: truth.assignment.clone(), phase_index: index.clone(), grid_size: *size }
    }

    #[test]
    fn truth_is_a_fixed_point_of_the_clean_problem() {
        let params = ModelParams { n: 60, m: 3, p: 1.0, q: 0.0, k_max: 4, mode: AngleMode::Discrete, seed: 5 };
        let (truth, _) = generate(&params).unwrap();
        let stack = frequency_stack(&clean_matrix(&truth), 4);
        let state = truth_state(&truth);
        for set in [FrequencySet::All, FrequencySet::Fundamental] {
            let cfg = GpmConfig::new(AngleMode::Discrete).with_frequencies(set);
            let next = gpm_step(&state, &stack, &cfg).unwrap();
            assert_eq!(next.assignment, state.assignment);
            assert_eq!(next.phase_index, state.phase_index);
        }
    }

    #[test]
    fn product_matches_dense() {
        let params = ModelParams { n: 40, m: 2, p: 0.4, q: 0.2, k_max: 3, mode: AngleMode::Discrete, seed: 8 };
        let (truth, obs) = generate(&params).unwrap();
        let stack = frequency_stack(&obs, 3);
        let state = truth_state(&truth);
        let w = products(&state, &stack, &[0, 1, 2, 3]);
        for k in 0..=3 {
            let dense = stack.to_dense(k) * state.v_dense(k);
            for i in 0..40 {
                for c in 0..2 {
                    assert!((dense[(i, c)] - w[k as usize][i * 2 + c]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn iterates_keep_structure() {
        let params = ModelParams { n: 60, m: 2, p: 0.3, q: 0.15, k_max: 3, mode: AngleMode::Continuous, seed: 2 };
        let (_, obs) = generate(&params).unwrap();
        let stack = frequency_stack(&obs, 3);
        let cfg = GpmConfig::new(AngleMode::Continuous);
        let mut state = init_from_spectral(&stack, 2, &cfg).unwrap();
        assert_eq!(state.grid_size, 7 * 16);
        for _ in 0..5 {
            state = gpm_step(&state, &stack, &cfg).unwrap();
            let mut counts = [0; 2];
            state.assignment.iter().for_each(|&c| counts[c] += 1);
            assert_eq!(counts, [30, 30]);
            let v = state.v_dense(2);
            for i in 0..60 {
                let nz: Vec<_> = (0..2).filter(|&c| v[(i, c)].norm() > 0.0).collect();
                assert_eq!(nz, vec![state.assignment[i]]);
                assert!((v[(i, nz[0])].norm() - 1.0 / 30f64.sqrt()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn early_stop_matches_full_run() {
        let params = ModelParams { n: 80, m: 2, p: 0.4, q: 0.1, k_max: 4, mode: AngleMode::Discrete, seed: 13 };
        let (_, obs) = generate(&params).unwrap();
        let stack = frequency_stack(&obs, 4);
        let mut cfg = GpmConfig::new(AngleMode::Discrete);
        let early = run_gpm(&stack, 2, &cfg).unwrap();
        cfg.early_stop = false;
        let full = run_gpm(&stack, 2, &cfg).unwrap();
        assert_eq!(full.iterations_run, DEFAULT_ITERATIONS);
        assert!(early.iterations_run <= DEFAULT_ITERATIONS);
        assert_eq!(early.estimate, full.estimate);
    }

    #[test]
    fn random_init_is_balanced_and_seeded() {
        let a = random_init(12, 3, 9, 4).unwrap();
        assert_eq!(a, random_init(12, 3, 9, 4).unwrap());
        let mut counts = [0; 3];
        a.assignment.iter().for_each(|&c| counts[c] += 1);
        assert_eq!(counts, [4, 4, 4]);
        assert!(random_init(10, 3, 9, 4).is_err());
    }

    #[test]
    fn objective_counts_consistent_edges() {
        // Clean problem at the truth: every within-cluster edge contributes 2 (2K+1).
        let params = ModelParams { n: 20, m: 2, p: 1.0, q: 0.0, k_max: 2, mode: AngleMode::Discrete, seed: 3 };
        let (truth, obs) = generate(&params).unwrap();
        let stack = frequency_stack(&obs, 2);
        let value = objective(&stack, &truth.assignment, &truth.phases, FrequencySet::All).unwrap();
        assert!((value - 2.0 * 5.0 * obs.num_edges() as f64).abs() < 1e-9);
    }
}
