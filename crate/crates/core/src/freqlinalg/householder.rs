use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Applies one Householder step to the trailing block `x[off.., off..]` in
/// place and returns the `(rows - off)`-square unitary `Q` with
/// `Q * block_after = block_before`.
///
/// The reflector is built from the block's first column `r`, with
/// `theta = -exp(i arg r_1) |r|`, `v = (r - theta e_1) / |r - theta e_1|`.
/// Afterwards the block's first row is rotated so that its leading entry is
/// real and nonnegative, and the matching phase is folded into `Q`'s first
/// column.
pub(crate) fn reflect_trailing(x: &mut DMatrix<Complex64>, off: usize) -> Result<DMatrix<Complex64>> {
    let rows = x.nrows() - off;
    let cols = x.ncols();
    let norm = (off..x.nrows()).map(|i| x[(i, off)].norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegeneratePivot);
    }
    let lead = x[(off, off)];
    let lead_phase = if lead.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        lead / lead.norm()
    };
    let theta = -lead_phase * norm;

    let mut v: Vec<Complex64> = (off..x.nrows()).map(|i| x[(i, off)]).collect();
    v[0] -= theta;
    let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= vnorm);

    for c in (off + 1)..cols {
        let dot: Complex64 = v.iter().enumerate().map(|(t, vt)| vt.conj() * x[(off + t, c)]).sum();
        for (t, vt) in v.iter().enumerate() {
            x[(off + t, c)] -= *vt * dot * 2.0;
        }
    }
    // The reflected pivot column is exactly theta * e_1.
    for i in (off + 1)..x.nrows() {
        x[(i, off)] = Complex64::new(0.0, 0.0);
    }

    let mut q = DMatrix::from_fn(rows, rows, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        Complex64::new(id, 0.0) - v[i] * v[j].conj() * 2.0
    });

    // exp(-i arg theta) = -conj(lead_phase)
    let unrotate = -lead_phase.conj();
    x[(off, off)] = Complex64::new(norm, 0.0);
    for c in (off + 1)..cols {
        x[(off, c)] *= unrotate;
    }
    let rotate = unrotate.conj();
    for i in 0..rows {
        q[(i, 0)] *= rotate;
    }
    Ok(q)
}

/// One step of Householder QR on `x`: returns `(Q, X')` with `Q` unitary,
/// `Q X' = X`, `X'` zero below its leading entry in the first column and
/// that entry real nonnegative.
pub fn householder_step(x: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::DegeneratePivot);
    }
    let mut out = x.clone();
    let q = reflect_trailing(&mut out, 0)?;
    Ok((q, out))
}
