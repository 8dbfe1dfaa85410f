//! Stochastic block model with relative phase: instance generation, the clean
//! observation matrix and the stack of entry-wise frequency powers.

mod io;

pub use io::{read_instance, write_instance, Instance};

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Name of the generator behind every seeded draw in this crate.
pub const RNG_NAME: &str = "ChaCha8Rng";

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AngleMode {
    /// Phases live on the grid of `2 k_max + 1` equispaced angles.
    Discrete,
    /// Phases are arbitrary angles in `[0, 2pi)`.
    Continuous,
}

impl AngleMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AngleMode::Discrete => "discrete",
            AngleMode::Continuous => "continuous",
        }
    }
}

impl std::str::FromStr for AngleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discrete" => Ok(AngleMode::Discrete),
            "continuous" => Ok(AngleMode::Continuous),
            other => Err(Error::params(format!("unknown angle mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub q: f64,
    pub k_max: usize,
    pub mode: AngleMode,
    pub seed: u64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::params("node and cluster counts must be positive"));
        }
        if !self.n.is_multiple_of(self.m) {
            return Err(Error::params(format!(
                "N = {} is not a multiple of M = {}",
                self.n, self.m
            )));
        }
        if self.n > u32::MAX as usize {
            return Err(Error::params("N exceeds the u32 node index range"));
        }
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::params(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn cluster_size(&self) -> usize {
        self.n / self.m
    }

    /// Number of points of the discrete phase grid, `2 k_max + 1`.
    pub fn grid_size(&self) -> usize {
        grid_size(self.k_max)
    }
}

pub fn grid_size(k_max: usize) -> usize {
    2 * k_max + 1
}

/// Spacing of the discrete phase grid.
pub fn grid_spacing(k_max: usize) -> f64 {
    TAU / grid_size(k_max) as f64
}

/// A vector of phase angles, either as exact indices on an equispaced grid of
/// `size` points over `[0, 2pi)` or as raw radians.
#[derive(Debug, Clone, PartialEq)]
pub enum Phases {
    Grid { size: usize, index: Vec<u32> },
    Radians(Vec<f64>),
}

impl Phases {
    pub fn len(&self) -> usize {
        match self {
            Phases::Grid { index, .. } => index.len(),
            Phases::Radians(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn grid_size(&self) -> Option<usize> {
        match self {
            Phases::Grid { size, .. } => Some(*size),
            Phases::Radians(_) => None,
        }
    }

    pub fn angle(&self, i: usize) -> f64 {
        match self {
            Phases::Grid { size, index } => TAU * index[i] as f64 / *size as f64,
            Phases::Radians(r) => r[i],
        }
    }

    pub fn to_radians(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.angle(i)).collect()
    }

    /// `exp(i k theta_i)`; exact index arithmetic on grids.
    pub fn unit(&self, i: usize, k: i64) -> Complex64 {
        match self {
            Phases::Grid { size, index } => {
                let l = *size as i64;
                let r = (k.rem_euclid(l) * index[i] as i64).rem_euclid(l);
                Complex64::cis(TAU * r as f64 / l as f64)
            }
            Phases::Radians(r) => Complex64::cis(k as f64 * r[i]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub m: usize,
    /// Cluster id in `0..m` for every node.
    pub assignment: Vec<usize>,
    pub phases: Phases,
}

impl GroundTruth {
    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn cluster_size(&self) -> usize {
        self.n() / self.m
    }

    /// Node ids of every cluster, ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        clusters_of(&self.assignment, self.m)
    }
}

pub(crate) fn clusters_of(assignment: &[usize], m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); m];
    for (i, &c) in assignment.iter().enumerate() {
        out[c].push(i);
    }
    out
}

/// Sparse Hermitian observation matrix with unit-modulus entries, stored once
/// per unordered pair `(i, j)` with `i < j`. The diagonal is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    n: usize,
    edges: Vec<(u32, u32)>,
    phases: Phases,
}

impl ObservationMatrix {
    pub fn new(n: usize, edges: Vec<(u32, u32)>, phases: Phases) -> Result<Self> {
        if edges.len() != phases.len() {
            return Err(Error::params("edge and phase counts differ"));
        }
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for &(i, j) in &edges {
            if i >= j || j as usize >= n {
                return Err(Error::params(format!("edge ({i}, {j}) must satisfy i < j < N")));
            }
            if !seen.insert((i, j)) {
                return Err(Error::params(format!("duplicate edge ({i}, {j})")));
            }
        }
        if let Phases::Radians(r) = &phases {
            if r.iter().any(|t| !(0.0..TAU).contains(t)) {
                return Err(Error::params("edge phases must lie in [0, 2pi)"));
            }
        }
        Ok(Self { n, edges, phases })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn phases(&self) -> &Phases {
        &self.phases
    }

    /// Entry `A_ij` of edge `e` (the upper-triangular copy).
    pub fn entry(&self, e: usize) -> Complex64 {
        self.phases.unit(e, 1)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        dense_from_edges(self.n, &self.edges, |e| self.entry(e))
    }
}

fn dense_from_edges(
    n: usize,
    edges: &[(u32, u32)],
    value: impl Fn(usize) -> Complex64,
) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(n, n);
    for (e, &(i, j)) in edges.iter().enumerate() {
        let v = value(e);
        a[(i as usize, j as usize)] = v;
        a[(j as usize, i as usize)] = v.conj();
    }
    a
}

/// Draws one SBM-Ph instance. Deterministic in `params.seed`.
pub fn generate(params: &ModelParams) -> Result<(GroundTruth, ObservationMatrix)> {
    params.validate()?;
    let ModelParams { n, m, p, q, mode, .. } = *params;
    let s = params.cluster_size();
    let grid = params.grid_size();
    let mut rng = rng_from_seed(params.seed);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut assignment = vec![0usize; n];
    for (slot, &node) in order.iter().enumerate() {
        assignment[node] = slot / s;
    }

    let phases = match mode {
        AngleMode::Discrete => Phases::Grid {
            size: grid,
            index: (0..n).map(|_| rng.random_range(0..grid as u32)).collect(),
        },
        AngleMode::Continuous => Phases::Radians((0..n).map(|_| uniform_angle(&mut rng)).collect()),
    };

    let mut edges = Vec::new();
    let mut grid_phases = Vec::new();
    let mut rad_phases = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let same = assignment[i] == assignment[j];
            let prob = if same { p } else { q };
            if rng.random::<f64>() >= prob {
                continue;
            }
            edges.push((i as u32, j as u32));
            match &phases {
                Phases::Grid { index, .. } => {
                    let t = if same {
                        (index[i] + grid as u32 - index[j]) % grid as u32
                    } else {
                        rng.random_range(0..grid as u32)
                    };
                    grid_phases.push(t);
                }
                Phases::Radians(r) => {
                    let t = if same {
                        (r[i] - r[j]).rem_euclid(TAU)
                    } else {
                        uniform_angle(&mut rng)
                    };
                    rad_phases.push(wrap_below_tau(t));
                }
            }
        }
    }

    let edge_phases = match mode {
        AngleMode::Discrete => Phases::Grid { size: grid, index: grid_phases },
        AngleMode::Continuous => Phases::Radians(rad_phases),
    };
    let truth = GroundTruth { m, assignment, phases };
    let obs = ObservationMatrix { n, edges, phases: edge_phases };
    Ok((truth, obs))
}

fn uniform_angle(rng: &mut impl Rng) -> f64 {
    wrap_below_tau(rng.random::<f64>() * TAU)
}

// rem_euclid can round up to exactly 2pi for tiny negative inputs.
fn wrap_below_tau(t: f64) -> f64 {
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// The noiseless observation: every within-cluster pair carries its exact
/// relative phase, no cross-cluster edges.
pub fn clean_matrix(truth: &GroundTruth) -> ObservationMatrix {
    let n = truth.n();
    let mut edges = Vec::new();
    let mut grid_phases = Vec::new();
    let mut rad_phases = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if truth.assignment[i] != truth.assignment[j] {
                continue;
            }
            edges.push((i as u32, j as u32));
            match &truth.phases {
                Phases::Grid { size, index } => {
                    let l = *size as u32;
                    grid_phases.push((index[i] + l - index[j]) % l);
                }
                Phases::Radians(r) => rad_phases.push(wrap_below_tau((r[i] - r[j]).rem_euclid(TAU))),
            }
        }
    }
    let phases = match &truth.phases {
        Phases::Grid { size, .. } => Phases::Grid { size: *size, index: grid_phases },
        Phases::Radians(_) => Phases::Radians(rad_phases),
    };
    ObservationMatrix { n, edges, phases }
}

/// The family `A^(k)`, `k = -k_max..=k_max`, of entry-wise powers of an
/// observation matrix. Only `k >= 0` is stored; `A^(-k) = conj(A^(k))`.
#[derive(Debug, Clone)]
pub struct FrequencyStack {
    n: usize,
    k_max: usize,
    edges: Vec<(u32, u32)>,
    values: Vec<Vec<Complex64>>,
}

/// Builds the stack of entry-wise powers up to `k_max`.
pub fn frequency_stack(a: &ObservationMatrix, k_max: usize) -> FrequencyStack {
    let values = (0..=k_max as i64)
        .map(|k| (0..a.num_edges()).map(|e| a.phases.unit(e, k)).collect())
        .collect();
    FrequencyStack { n: a.n, k_max, edges: a.edges.clone(), values }
}

impl FrequencyStack {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Upper-triangular entry of edge `e` at frequency `k`.
    pub fn entry(&self, k: i32, e: usize) -> Complex64 {
        let v = self.values[k.unsigned_abs() as usize][e];
        if k < 0 {
            v.conj()
        } else {
            v
        }
    }

    /// Per-edge values at frequency `|k|` plus whether they must be conjugated.
    pub(crate) fn raw(&self, k: i32) -> (&[Complex64], bool) {
        (&self.values[k.unsigned_abs() as usize], k < 0)
    }

    /// `y = A^(k) x`.
    pub fn apply(&self, k: i32, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert!(x.len() == self.n && y.len() == self.n);
        y.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        let (vals, conj) = self.raw(k);
        for (&(i, j), &a) in self.edges.iter().zip(vals) {
            let a = if conj { a.conj() } else { a };
            let (i, j) = (i as usize, j as usize);
            y[i] += a * x[j];
            y[j] += a.conj() * x[i];
        }
    }

    pub fn to_dense(&self, k: i32) -> DMatrix<Complex64> {
        dense_from_edges(self.n, &self.edges, |e| self.entry(k, e))
    }
}

/// Expected value `E[A^(k)]` under the model, densely. Diagnostic only.
///
/// Within-cluster entries are `p exp(i k (theta_i - theta_j))`. Cross-cluster
/// entries average to zero except at `k = 0`, where they equal `q`.
pub fn expected_dense(truth: &GroundTruth, p: f64, q: f64, k: i32) -> DMatrix<Complex64> {
    let n = truth.n();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(0.0, 0.0)
        } else if truth.assignment[i] == truth.assignment[j] {
            truth.phases.unit(i, k as i64) * truth.phases.unit(j, k as i64).conj() * p
        } else if k == 0 {
            Complex64::new(q, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, m: usize, p: f64, q: f64, k_max: usize, mode: AngleMode, seed: u64) -> ModelParams {
        ModelParams { n, m, p, q, k_max, mode, seed }
    }

    #[test]
    fn rejects_unbalanced_sizes_and_bad_probabilities() {
        assert!(generate(&params(10, 3, 0.5, 0.1, 2, AngleMode::Discrete, 0)).is_err());
        assert!(generate(&params(10, 2, 1.5, 0.1, 2, AngleMode::Discrete, 0)).is_err());
        assert!(generate(&params(10, 2, 0.5, -0.1, 2, AngleMode::Discrete, 0)).is_err());
    }

    #[test]
    fn grid_constants() {
        let pr = params(10, 2, 0.5, 0.1, 16, AngleMode::Discrete, 0);
        assert_eq!(pr.grid_size(), 33);
        assert!((grid_spacing(16) - TAU / 33.0).abs() < 1e-15);
    }

    #[test]
    fn balanced_partition_and_grid_phases() {
        let (truth, obs) = generate(&params(60, 3, 0.3, 0.2, 4, AngleMode::Discrete, 9)).unwrap();
        for c in truth.clusters() {
            assert_eq!(c.len(), 20);
        }
        match (&truth.phases, obs.phases()) {
            (Phases::Grid { size: a, index }, Phases::Grid { size: b, .. }) => {
                assert_eq!((*a, *b), (9, 9));
                assert!(index.iter().all(|&t| t < 9));
            }
            _ => panic!("discrete mode must produce grid phases"),
        }
    }

    #[test]
    fn degenerate_probabilities() {
        for mode in [AngleMode::Discrete, AngleMode::Continuous] {
            let (truth, obs) = generate(&params(30, 3, 1.0, 0.0, 3, mode, 4)).unwrap();
            assert_eq!(obs, clean_matrix(&truth));
            let (_, empty) = generate(&params(30, 3, 0.0, 0.0, 3, mode, 4)).unwrap();
            assert_eq!(empty.num_edges(), 0);
        }
    }

    #[test]
    fn seed_determinism() {
        let pr = params(80, 2, 0.2, 0.1, 5, AngleMode::Continuous, 77);
        assert_eq!(generate(&pr).unwrap(), generate(&pr).unwrap());
        let other = ModelParams { seed: 78, ..pr.clone() };
        assert_ne!(generate(&pr).unwrap().1, generate(&other).unwrap().1);
    }

    #[test]
    fn within_cluster_edge_frequency_matches_p() {
        // 10^4 instances of N = 200, M = 2; 2 * C(100, 2) = 9900 candidate pairs each.
        let trials = 10_000u64;
        let (mut hits, mut total) = (0u64, 0u64);
        for t in 0..trials {
            let (truth, obs) = generate(&params(200, 2, 0.5, 0.1, 1, AngleMode::Discrete, t)).unwrap();
            hits += obs
                .edges()
                .iter()
                .filter(|&&(i, j)| truth.assignment[i as usize] == truth.assignment[j as usize])
                .count() as u64;
            total += 9900;
        }
        let freq = hits as f64 / total as f64;
        let sigma = (0.25 / total as f64).sqrt();
        assert!((freq - 0.5).abs() <= 3.0 * sigma, "freq {freq}, sigma {sigma}");
    }

    #[test]
    fn clean_matrix_is_hermitian_with_zero_diagonal() {
        let (truth, _) = generate(&params(24, 3, 0.1, 0.1, 2, AngleMode::Continuous, 3)).unwrap();
        let a = clean_matrix(&truth).to_dense();
        assert_eq!(&a, &a.adjoint());
        assert!((0..24).all(|i| a[(i, i)].norm() == 0.0));
    }

    #[test]
    fn single_cluster_clean_matrix_is_rank_one_minus_identity() {
        let (truth, _) = generate(&params(12, 1, 0.0, 0.0, 3, AngleMode::Continuous, 5)).unwrap();
        let a = clean_matrix(&truth).to_dense();
        let v: Vec<Complex64> = (0..12).map(|i| truth.phases.unit(i, 1)).collect();
        for i in 0..12 {
            for j in 0..12 {
                let want = if i == j { Complex64::new(0.0, 0.0) } else { v[i] * v[j].conj() };
                assert!((a[(i, j)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn frequency_stack_structure() {
        for mode in [AngleMode::Discrete, AngleMode::Continuous] {
            let (_, obs) = generate(&params(40, 2, 0.4, 0.3, 4, mode, 11)).unwrap();
            let stack = frequency_stack(&obs, 4);
            let a1 = obs.to_dense();
            assert_eq!(stack.to_dense(1), a1);
            let a0 = stack.to_dense(0);
            for e in 0..obs.num_edges() {
                assert_eq!(stack.entry(0, e), Complex64::new(1.0, 0.0));
                let direct = Complex64::cis(3.0 * obs.phases().angle(e));
                let cube = obs.entry(e).powu(3);
                assert!((stack.entry(3, e) - direct).norm() < 1e-12);
                assert!((stack.entry(3, e) - cube).norm() < 1e-12);
            }
            assert!(a0.iter().all(|z| z.im == 0.0 && (z.re == 0.0 || z.re == 1.0)));
            for k in 1..=4 {
                let pos = stack.to_dense(k);
                assert_eq!(pos, pos.adjoint());
                assert_eq!(stack.to_dense(-k), pos.map(|z| z.conj()));
            }
        }
    }

    #[test]
    fn apply_matches_dense_product() {
        let (_, obs) = generate(&params(30, 2, 0.5, 0.2, 3, AngleMode::Discrete, 2)).unwrap();
        let stack = frequency_stack(&obs, 3);
        let x: Vec<Complex64> = (0..30).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        for k in -3..=3 {
            let mut y = vec![Complex64::default(); 30];
            stack.apply(k, &x, &mut y);
            let want = stack.to_dense(k) * nalgebra::DVector::from_vec(x.clone());
            for i in 0..30 {
                assert!((y[i] - want[i]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn expected_matrix_matches_clean_scaling() {
        let (truth, _) = generate(&params(12, 2, 0.3, 0.1, 2, AngleMode::Discrete, 1)).unwrap();
        let clean = frequency_stack(&clean_matrix(&truth), 2);
        let e2 = expected_dense(&truth, 0.3, 0.1, 2);
        let diff = &e2 - clean.to_dense(2).map(|z| z * 0.3);
        assert!(diff.norm() < 1e-12);
    }
}
