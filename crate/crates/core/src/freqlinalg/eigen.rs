use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::FrequencySet;
use crate::error::{Error, Result};
use crate::model::FrequencyStack;

type C = Complex64;

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Residual tolerance, relative to the largest Ritz value magnitude (at least 1).
    pub tol: f64,
    /// Problems this small go straight to the dense solver.
    pub dense_below: usize,
    /// Largest problem allowed to fall back to the dense solver after the
    /// iterative one stalls.
    pub dense_fallback_max: usize,
    pub max_iters: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-10, dense_below: 64, dense_fallback_max: 2000, max_iters: 3000 }
    }
}

/// Top-M eigenvectors (largest algebraic eigenvalues) for each frequency of a
/// set, stored as `N x M` matrices with orthonormal columns.
#[derive(Debug, Clone)]
pub struct EigBasis {
    k_max: usize,
    frequencies: Vec<i32>,
    phi: Vec<DMatrix<C>>,
    eigenvalues: Vec<Vec<f64>>,
}

impl EigBasis {
    /// Wraps arbitrary per-frequency `N x M` matrices; `frequencies` must be
    /// distinct and within `-k_max..=k_max`.
    pub fn new(k_max: usize, frequencies: Vec<i32>, phi: Vec<DMatrix<C>>) -> Result<Self> {
        if frequencies.is_empty() || frequencies.len() != phi.len() {
            return Err(Error::params("need one matrix per frequency"));
        }
        let mut sorted = frequencies.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != frequencies.len() || sorted.iter().any(|k| k.unsigned_abs() as usize > k_max) {
            return Err(Error::params("frequencies must be distinct and within k_max"));
        }
        let (n, m) = phi[0].shape();
        if m == 0 || m > n || phi.iter().any(|p| p.shape() != (n, m)) {
            return Err(Error::params("basis matrices must share an N x M shape with M <= N"));
        }
        let eigenvalues = vec![Vec::new(); phi.len()];
        Ok(Self { k_max, frequencies, phi, eigenvalues })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn n(&self) -> usize {
        self.phi[0].nrows()
    }

    pub fn m(&self) -> usize {
        self.phi[0].ncols()
    }

    pub fn frequencies(&self) -> &[i32] {
        &self.frequencies
    }

    pub fn matrices(&self) -> &[DMatrix<C>] {
        &self.phi
    }

    pub fn get(&self, k: i32) -> Option<&DMatrix<C>> {
        self.frequencies.iter().position(|&f| f == k).map(|i| &self.phi[i])
    }

    /// Eigenvalues matching the columns, when computed by [`top_m_eigvecs`].
    pub fn eigenvalues(&self, k: i32) -> Option<&[f64]> {
        self.frequencies.iter().position(|&f| f == k).map(|i| self.eigenvalues[i].as_slice())
    }
}

/// Top-M eigenvectors of every `A^(k)` in the selected frequency set.
///
/// Only `|k|` is solved; `A^(-k) = conj(A^(k))` has the conjugated
/// eigenvectors and the same eigenvalues.
pub fn top_m_eigvecs(stack: &FrequencyStack, m: usize, set: FrequencySet, opts: &EigenOptions) -> Result<EigBasis> {
    let n = stack.n();
    if m == 0 || m > n {
        return Err(Error::params(format!("need 1 <= M <= N, got M = {m}, N = {n}")));
    }
    let frequencies = set.frequencies(stack.k_max())?;
    let mut magnitudes: Vec<i32> = frequencies.iter().map(|k| k.abs()).collect();
    magnitudes.sort_unstable();
    magnitudes.dedup();

    let solved: Vec<(i32, Vec<f64>, DMatrix<C>)> = magnitudes
        .par_iter()
        .map(|&k| top_eigenpairs(stack, k, m, opts).map(|(vals, vecs)| (k, vals, vecs)))
        .collect::<Result<_>>()?;

    let mut phi = Vec::with_capacity(frequencies.len());
    let mut eigenvalues = Vec::with_capacity(frequencies.len());
    for &k in &frequencies {
        let (_, vals, vecs) = solved.iter().find(|(a, _, _)| *a == k.abs()).expect("solved above");
        phi.push(if k < 0 { vecs.map(|z| z.conj()) } else { vecs.clone() });
        eigenvalues.push(vals.clone());
    }
    Ok(EigBasis { k_max: stack.k_max(), frequencies, phi, eigenvalues })
}

/// Largest `m` eigenpairs of the Hermitian `A^(k)`, eigenvalues descending.
///
/// Uses a thick-restarted block Krylov (Davidson without preconditioner)
/// iteration on the sparse operator; small problems, and problems where the
/// iteration stalls, go to a dense Hermitian solve when `N` permits.
pub fn top_eigenpairs(stack: &FrequencyStack, k: i32, m: usize, opts: &EigenOptions) -> Result<(Vec<f64>, DMatrix<C>)> {
    let n = stack.n();
    if n <= opts.dense_below {
        return Ok(dense_top(&stack.to_dense(k), m));
    }
    match block_krylov(stack, k, m, opts) {
        Ok(r) => Ok(r),
        Err(_) if n <= opts.dense_fallback_max => Ok(dense_top(&stack.to_dense(k), m)),
        Err(e) => Err(e),
    }
}

pub(crate) fn dense_top_all(a: &DMatrix<C>) -> (Vec<f64>, DMatrix<C>) {
    dense_top(a, a.nrows())
}

pub(crate) fn dense_top(a: &DMatrix<C>, m: usize) -> (Vec<f64>, DMatrix<C>) {
    let eig = a.clone().symmetric_eigen();
    let order = descending(eig.eigenvalues.as_slice());
    let vals = order[..m].iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(a.nrows(), m, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

fn descending(vals: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    order
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

struct Subspace<'a> {
    stack: &'a FrequencyStack,
    k: i32,
    basis: Vec<Vec<C>>,
    images: Vec<Vec<C>>,
    projected: Vec<Vec<C>>,
}

impl Subspace<'_> {
    fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Orthogonalizes `w` against the basis (two Gram-Schmidt passes) and
    /// appends it unless it lies numerically inside the span.
    fn push(&mut self, mut w: Vec<C>) -> bool {
        let before = norm(&w);
        if before == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for v in &self.basis {
                let h = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= h * y);
            }
        }
        let after = norm(&w);
        if after <= 1e-10 * before {
            return false;
        }
        w.iter_mut().for_each(|x| *x /= after);
        let mut aw = vec![C::default(); w.len()];
        self.stack.apply(self.k, &w, &mut aw);
        let col: Vec<C> = self.basis.iter().map(|v| dot(v, &aw)).collect();
        for (row, h) in self.projected.iter_mut().zip(&col) {
            row.push(*h);
        }
        let mut last: Vec<C> = col.iter().map(|h| h.conj()).collect();
        last.push(C::new(dot(&w, &aw).re, 0.0));
        self.projected.push(last);
        self.basis.push(w);
        self.images.push(aw);
        true
    }

    fn ritz(&self) -> (Vec<f64>, DMatrix<C>) {
        let d = self.dim();
        let t = DMatrix::from_fn(d, d, |i, j| self.projected[i][j]);
        dense_top(&t, d)
    }

    /// `sum_j coef_j * vectors_j`.
    fn combine(vectors: &[Vec<C>], coef: impl Iterator<Item = C>) -> Vec<C> {
        let mut out = vec![C::default(); vectors[0].len()];
        for (v, c) in vectors.iter().zip(coef) {
            out.iter_mut().zip(v).for_each(|(o, x)| *o += c * x);
        }
        out
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C> {
    (0..n).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

fn block_krylov(stack: &FrequencyStack, k: i32, m: usize, opts: &EigenOptions) -> Result<(Vec<f64>, DMatrix<C>)> {
    let n = stack.n();
    let block = (m + 2).min(n);
    let max_dim = (4 * block).max(16).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9_7f4a_7c15 ^ (k as i64 as u64) ^ ((n as u64) << 32));
    let mut space = Subspace { stack, k, basis: Vec::new(), images: Vec::new(), projected: Vec::new() };
    while space.dim() < block {
        space.push(random_vector(&mut rng, n));
    }

    let mut worst = f64::INFINITY;
    for _ in 0..opts.max_iters {
        let (theta, y) = space.ritz();
        let d = space.dim();
        let scale = theta.iter().fold(1.0f64, |a, t| a.max(t.abs()));
        let want = block.min(d);
        let mut ritz_vecs = Vec::with_capacity(want);
        let mut residuals = Vec::with_capacity(want);
        let mut res_norms = Vec::with_capacity(want);
        for j in 0..want {
            let x = Subspace::combine(&space.basis, y.column(j).iter().copied());
            let ax = Subspace::combine(&space.images, y.column(j).iter().copied());
            let r: Vec<C> = ax.iter().zip(&x).map(|(a, b)| a - b * theta[j]).collect();
            res_norms.push(norm(&r));
            residuals.push(r);
            ritz_vecs.push(x);
        }
        worst = res_norms[..m].iter().fold(0.0f64, |a, &b| a.max(b)) / scale;
        if worst <= opts.tol || d == n {
            let vecs = DMatrix::from_fn(n, m, |r, c| ritz_vecs[c][r]);
            return Ok((theta[..m].to_vec(), vecs));
        }

        if d + block > max_dim {
            // Thick restart on the leading Ritz vectors.
            let keep = (2 * block).min(d);
            let basis: Vec<Vec<C>> = (0..keep)
                .map(|j| Subspace::combine(&space.basis, y.column(j).iter().copied()))
                .collect();
            space = Subspace { stack, k, basis: Vec::new(), images: Vec::new(), projected: Vec::new() };
            for v in basis {
                space.push(v);
            }
        }

        let mut grew = false;
        for (r, rn) in residuals.into_iter().zip(&res_norms) {
            if *rn > opts.tol * scale && space.dim() < n {
                grew |= space.push(r);
            }
        }
        while !grew && space.dim() < n {
            grew = space.push(random_vector(&mut rng, n));
        }
    }
    Err(Error::EigenNoConvergence { frequency: k, residual: worst })
}
