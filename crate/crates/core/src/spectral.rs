//! Spectral recovery from the multi-frequency CPQR factorization, and the
//! FFT-based trigonometric-polynomial maximization it shares with the power
//! method.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::assignment::ScoreMatrix;
use crate::error::{Error, Result};
use crate::freqlinalg::{mf_cpqr, top_m_eigvecs, EigenOptions, FrequencySet, MfCpqrResult};
use crate::model::{grid_size, AngleMode, FrequencyStack, Phases};

pub const DEFAULT_ZERO_PAD_FACTOR: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    MfCpqr,
    CpqrSf,
    MfGpm,
    GpmSf,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::MfCpqr, Method::CpqrSf, Method::MfGpm, Method::GpmSf];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::MfCpqr => "MF-CPQR",
            Method::CpqrSf => "CPQR-SF",
            Method::MfGpm => "MF-GPM",
            Method::GpmSf => "GPM-SF",
        }
    }

    pub fn is_gpm(self) -> bool {
        matches!(self, Method::MfGpm | Method::GpmSf)
    }

    pub fn frequency_set(self) -> FrequencySet {
        match self {
            Method::MfCpqr | Method::MfGpm => FrequencySet::All,
            Method::CpqrSf | Method::GpmSf => FrequencySet::Fundamental,
        }
    }

    pub(crate) fn spectral_for(set: FrequencySet) -> Self {
        if set == FrequencySet::Fundamental {
            Method::CpqrSf
        } else {
            Method::MfCpqr
        }
    }

    pub(crate) fn gpm_for(set: FrequencySet) -> Self {
        if set == FrequencySet::Fundamental {
            Method::GpmSf
        } else {
            Method::MfGpm
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::params(format!("unknown method `{s}`")))
    }
}

/// Recovered cluster assignment and phases. Phases are indices on the
/// search grid (the discrete grid, or the zero-padded grid in continuous mode).
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub m: usize,
    pub assignment: Vec<usize>,
    pub phases: Phases,
    pub mode: AngleMode,
    pub method: Method,
}

/// Number of points of the phase search grid.
pub fn search_grid_size(k_max: usize, mode: AngleMode, zero_pad_factor: usize) -> usize {
    match mode {
        AngleMode::Discrete => grid_size(k_max),
        AngleMode::Continuous => grid_size(k_max) * zero_pad_factor.max(1),
    }
}

/// Maximizes `Re sum_k c_k exp(-i k theta)` over an equispaced grid with one
/// FFT. Reusable across calls with the same grid.
pub struct GridSearch {
    k_max: usize,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl GridSearch {
    pub fn new(k_max: usize, grid_size: usize) -> Self {
        assert!(grid_size > 2 * k_max, "grid must resolve every frequency");
        let fft = FftPlanner::new().plan_fft_forward(grid_size);
        let scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        Self { k_max, fft, buf: vec![Complex64::default(); grid_size], scratch }
    }

    pub fn grid_size(&self) -> usize {
        self.buf.len()
    }

    /// Values of the polynomial on the grid; `coeffs` is ordered `-K..=K`.
    pub fn evaluate(&mut self, coeffs: &[Complex64]) -> &[Complex64] {
        debug_assert_eq!(coeffs.len(), 2 * self.k_max + 1);
        let l = self.buf.len() as i64;
        self.buf.iter_mut().for_each(|z| *z = Complex64::default());
        for (t, c) in coeffs.iter().enumerate() {
            let k = t as i64 - self.k_max as i64;
            self.buf[k.rem_euclid(l) as usize] = *c;
        }
        self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
        &self.buf
    }

    /// First grid index attaining the largest real part, and that value.
    pub fn argmax(&mut self, coeffs: &[Complex64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (l, v) in self.evaluate(coeffs).iter().enumerate() {
            if v.re > best.1 {
                best = (l, v.re);
            }
        }
        best
    }
}

/// One-shot maximization of `sum_k <exp(i k theta), c_k>` over the search
/// grid. Returns `(theta, grid index, score)`.
pub fn argmax_over_grid(coeffs: &[Complex64], mode: AngleMode, zero_pad_factor: usize) -> Result<(f64, usize, f64)> {
    if coeffs.is_empty() || coeffs.len().is_multiple_of(2) {
        return Err(Error::params("coefficient vector must have odd length 2 K_max + 1"));
    }
    let k_max = (coeffs.len() - 1) / 2;
    let size = search_grid_size(k_max, mode, zero_pad_factor);
    let (idx, score) = GridSearch::new(k_max, size).argmax(coeffs);
    Ok((std::f64::consts::TAU * idx as f64 / size as f64, idx, score))
}

#[derive(Debug, Clone)]
pub struct SpectralConfig {
    pub mode: AngleMode,
    pub zero_pad_factor: usize,
    pub frequencies: FrequencySet,
    pub eigen: EigenOptions,
}

impl SpectralConfig {
    pub fn new(mode: AngleMode) -> Self {
        Self {
            mode,
            zero_pad_factor: DEFAULT_ZERO_PAD_FACTOR,
            frequencies: FrequencySet::All,
            eigen: EigenOptions::default(),
        }
    }

    pub fn with_frequencies(mut self, set: FrequencySet) -> Self {
        self.frequencies = set;
        self
    }
}

#[derive(Debug, Clone)]
pub struct SpectralOutput {
    pub estimate: Estimate,
    /// Per node and cluster row: the maximized score.
    pub scores: ScoreMatrix,
    /// Per node and cluster row: the maximizing grid index.
    pub best_phase: Vec<u32>,
    pub factorization: MfCpqrResult,
}

/// Eigendecomposition, MF-CPQR, then per-node recovery: each node goes to
/// the row whose maximized score is largest (ties to the smallest row) and
/// takes that row's maximizing angle.
pub fn recover_spectral(stack: &FrequencyStack, m: usize, cfg: &SpectralConfig) -> Result<SpectralOutput> {
    if m < 2 {
        return Err(Error::params("spectral recovery needs M >= 2"));
    }
    let basis = top_m_eigvecs(stack, m, cfg.frequencies, &cfg.eigen)?;
    let factorization = mf_cpqr(&basis)?;
    Ok(recover_from_factorization(factorization, cfg))
}

pub fn recover_from_factorization(factorization: MfCpqrResult, cfg: &SpectralConfig) -> SpectralOutput {
    let k_max = factorization.k_max();
    let size = search_grid_size(k_max, cfg.mode, cfg.zero_pad_factor);
    let r = factorization.r_all();
    let (m, n) = r[0].shape();
    let slots: Vec<usize> = factorization
        .frequencies()
        .iter()
        .map(|&k| (k + k_max as i32) as usize)
        .collect();

    let per_node: Vec<(Vec<f64>, Vec<u32>)> = (0..n)
        .into_par_iter()
        .map_init(
            || (GridSearch::new(k_max, size), vec![Complex64::default(); 2 * k_max + 1]),
            |(search, coeffs), i| {
                let mut scores = Vec::with_capacity(m);
                let mut phases = Vec::with_capacity(m);
                for row in 0..m {
                    coeffs.iter_mut().for_each(|c| *c = Complex64::default());
                    for (rk, &slot) in r.iter().zip(&slots) {
                        coeffs[slot] = rk[(row, i)];
                    }
                    let (idx, score) = search.argmax(coeffs);
                    scores.push(score);
                    phases.push(idx as u32);
                }
                (scores, phases)
            },
        )
        .collect();

    let mut assignment = Vec::with_capacity(n);
    let mut index = Vec::with_capacity(n);
    let mut flat_scores = Vec::with_capacity(n * m);
    let mut best_phase = Vec::with_capacity(n * m);
    for (scores, phases) in per_node {
        let mut best = 0;
        for row in 1..m {
            if scores[row] > scores[best] {
                best = row;
            }
        }
        assignment.push(best);
        index.push(phases[best]);
        flat_scores.extend_from_slice(&scores);
        best_phase.extend_from_slice(&phases);
    }
    let estimate = Estimate {
        m,
        assignment,
        phases: Phases::Grid { size, index },
        mode: cfg.mode,
        method: Method::spectral_for(cfg.frequencies),
    };
    SpectralOutput {
        estimate,
        scores: ScoreMatrix::new(n, m, flat_scores).expect("grid scores are finite"),
        best_phase,
        factorization,
    }
}
