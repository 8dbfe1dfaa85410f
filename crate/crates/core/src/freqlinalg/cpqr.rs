use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{reflect_trailing, EigBasis};
use crate::error::{Error, Result};

/// Output of the multi-frequency column-pivoted QR of `{(Phi^(k))^T}`.
#[derive(Debug, Clone)]
pub struct MfCpqrResult {
    k_max: usize,
    frequencies: Vec<i32>,
    q: Vec<DMatrix<Complex64>>,
    r: Vec<DMatrix<Complex64>>,
    permutation: Vec<usize>,
}

impl MfCpqrResult {
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn frequencies(&self) -> &[i32] {
        &self.frequencies
    }

    fn index(&self, k: i32) -> Option<usize> {
        self.frequencies.iter().position(|&f| f == k)
    }

    /// Unitary `M x M` factor at frequency `k`.
    pub fn q(&self, k: i32) -> Option<&DMatrix<Complex64>> {
        self.index(k).map(|i| &self.q[i])
    }

    /// `M x N` factor at frequency `k`, columns in original node order, so
    /// that `Q^(k) R^(k) = (Phi^(k))^T`.
    pub fn r(&self, k: i32) -> Option<&DMatrix<Complex64>> {
        self.index(k).map(|i| &self.r[i])
    }

    pub fn r_all(&self) -> &[DMatrix<Complex64>] {
        &self.r
    }

    /// Shared column permutation: position `j` holds original column `permutation[j]`.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// The `M` pivot columns in selection order.
    pub fn pivots(&self) -> &[usize] {
        &self.permutation[..self.r[0].nrows()]
    }

    /// `R^(k)` with columns in pivoted order (upper triangular on the first `M`).
    pub fn r_pivoted(&self, k: i32) -> Option<DMatrix<Complex64>> {
        let r = self.r(k)?;
        Some(DMatrix::from_fn(r.nrows(), r.ncols(), |i, j| r[(i, self.permutation[j])]))
    }
}

/// Column-pivoted QR run jointly over every frequency of `basis`.
///
/// Each round picks the column with the largest sum over frequencies of the
/// l2 norms of its trailing residual (ties go to the smallest index), swaps it
/// into place in every frequency, then applies one Householder step per
/// frequency to the trailing block.
pub fn mf_cpqr(basis: &EigBasis) -> Result<MfCpqrResult> {
    let (n, m) = (basis.n(), basis.m());
    let mut r: Vec<DMatrix<Complex64>> = basis.matrices().iter().map(|p| p.transpose()).collect();
    let mut q: Vec<DMatrix<Complex64>> = r.iter().map(|_| DMatrix::identity(m, m)).collect();
    let mut perm: Vec<usize> = (0..n).collect();

    for round in 0..m {
        let mut best = (round, f64::NEG_INFINITY);
        for j in round..n {
            let rho: f64 = r
                .iter()
                .map(|rk| (round..m).map(|i| rk[(i, j)].norm_sqr()).sum::<f64>().sqrt())
                .sum();
            if rho > best.1 {
                best = (j, rho);
            }
        }
        let (pivot, rho) = best;
        if rho <= 0.0 || !rho.is_finite() {
            return Err(Error::RankDeficient { round });
        }
        perm.swap(round, pivot);

        r.par_iter_mut()
            .zip(q.par_iter_mut())
            .try_for_each(|(rk, qk)| -> Result<()> {
                rk.swap_columns(round, pivot);
                let step = reflect_trailing(rk, round)
                    .map_err(|_| Error::RankDeficient { round })?;
                let tail = qk.columns(round, m - round) * step;
                qk.columns_mut(round, m - round).copy_from(&tail);
                Ok(())
            })?;
    }

    let restored = r
        .into_iter()
        .map(|rk| {
            let mut out = DMatrix::zeros(m, n);
            for (j, &orig) in perm.iter().enumerate() {
                out.set_column(orig, &rk.column(j));
            }
            out
        })
        .collect();
    Ok(MfCpqrResult {
        k_max: basis.k_max(),
        frequencies: basis.frequencies().to_vec(),
        q,
        r: restored,
        permutation: perm,
    })
}
