//! Independent reference routines used to cross-check the main algorithms:
//! exhaustive grid evaluation, a Gram-Schmidt column-pivoted QR, and a dense
//! Hermitian eigensolver. These favour obviousness over speed.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Evaluates `Re sum_k c_k exp(-i k theta)` at every point of the
/// `grid_size`-point grid and returns the first maximizer and its value.
/// `coeffs` is ordered `k = -K..=K`.
pub fn brute_force_grid_argmax(coeffs: &[Complex64], grid_size: usize) -> (usize, f64) {
    let k_max = (coeffs.len() as i64 - 1) / 2;
    let mut best = (0, f64::NEG_INFINITY);
    for l in 0..grid_size {
        let theta = TAU * l as f64 / grid_size as f64;
        let v: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(t, c)| (c * Complex64::cis(-((t as i64 - k_max) as f64) * theta)).re)
            .sum();
        if v > best.1 {
            best = (l, v);
        }
    }
    best
}

/// Businger-Golub column-pivoted QR by modified Gram-Schmidt. Returns the
/// pivot sequence and `R` (rows = rank steps, columns in pivoted order) for
/// an `m x n` input with `m <= n`.
pub fn reference_cpqr(x: &DMatrix<Complex64>) -> (Vec<usize>, DMatrix<Complex64>) {
    let (m, n) = x.shape();
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| x.column(j).iter().copied().collect()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut r = DMatrix::zeros(m, n);
    for t in 0..m {
        let norm = |v: &Vec<Complex64>| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut best = t;
        for j in t..n {
            if norm(&cols[j]) > norm(&cols[best]) {
                best = j;
            }
        }
        cols.swap(t, best);
        order.swap(t, best);
        for row in 0..t {
            let tmp = r[(row, t)];
            r[(row, t)] = r[(row, best)];
            r[(row, best)] = tmp;
        }
        let d = norm(&cols[t]);
        let qt: Vec<Complex64> = cols[t].iter().map(|z| z / d).collect();
        r[(t, t)] = Complex64::new(d, 0.0);
        for j in (t + 1)..n {
            let h: Complex64 = qt.iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
            r[(t, j)] = h;
            for (c, q) in cols[j].iter_mut().zip(&qt) {
                *c -= h * q;
            }
        }
    }
    (order[..m].to_vec(), r)
}

/// All eigenpairs of a Hermitian matrix, eigenvalues descending.
pub fn dense_eigen(a: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    crate::freqlinalg::dense_top_all(a)
}

/// Largest principal angle (radians) between the column spans of two
/// matrices with orthonormal columns.
pub fn max_principal_angle(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    // sin of the largest angle is the norm of b's component outside span(a).
    let outside = b - a * (a.adjoint() * b);
    let s = outside.singular_values();
    s.iter().cloned().fold(0.0, f64::max).min(1.0).asin()
}
