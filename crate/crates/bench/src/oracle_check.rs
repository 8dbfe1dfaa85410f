//! Randomized cross-checks of the fast algorithms against the exhaustive or
//! textbook references in `sbmph::oracle`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbmph::assignment::{brute_force_project, project_onto_h, ScoreMatrix};
use sbmph::freqlinalg::{mf_cpqr, EigBasis};
use sbmph::oracle::{brute_force_grid_argmax, reference_cpqr};
use sbmph::spectral::argmax_over_grid;
use sbmph::AngleMode;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Description of the first failing case, if any.
    pub first_failure: Option<String>,
}

impl CheckReport {
    fn new(name: &'static str) -> Self {
        Self { name, cases: 0, failures: 0, first_failure: None }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(detail());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}/{} cases agree", self.name, self.cases - self.failures, self.cases)?;
        if let Some(d) = &self.first_failure {
            write!(f, " (first failure: {d})")?;
        }
        Ok(())
    }
}

fn cgauss(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Balanced projection vs exhaustive enumeration. Even cases use integer
/// scores (values must agree exactly); odd cases real scores.
pub fn check_projection(cases: usize, seed: u64) -> Result<CheckReport> {
    const SHAPES: [(usize, usize); 8] = [(4, 2), (6, 2), (6, 3), (8, 2), (8, 4), (9, 3), (10, 2), (12, 3)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("balanced projection vs brute force");
    for case in 0..cases {
        let (n, m) = SHAPES[rng.random_range(0..SHAPES.len())];
        let integer = case % 2 == 0;
        let x = ScoreMatrix::from_fn(n, m, |_, _| {
            if integer {
                rng.random_range(-5..=5) as f64
            } else {
                rng.random_range(-1.0..1.0)
            }
        })?;
        let fast = project_onto_h(&x, n / m)?;
        let (best, _) = brute_force_project(&x, n / m)?;
        let ok = if integer { fast.objective == best } else { (fast.objective - best).abs() <= 1e-12 * (1.0 + best.abs()) };
        report.record(ok, || format!("case {case}: N={n} M={m} fast={} brute={best}", fast.objective));
    }
    Ok(report)
}

/// FFT grid argmax vs direct evaluation on the discrete grid.
pub fn check_argmax(cases: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("grid argmax vs exhaustive evaluation");
    for case in 0..cases {
        let k_max = rng.random_range(0..=16usize);
        let coeffs: Vec<Complex64> = (0..2 * k_max + 1).map(|_| cgauss(&mut rng)).collect();
        let (_, idx, score) = argmax_over_grid(&coeffs, AngleMode::Discrete, 1)?;
        let (bidx, bscore) = brute_force_grid_argmax(&coeffs, 2 * k_max + 1);
        let ok = idx == bidx && (score - bscore).abs() <= 1e-12 * bscore.abs().max(1.0);
        report.record(ok, || format!("case {case}: K_max={k_max} fft=({idx}, {score}) brute=({bidx}, {bscore})"));
    }
    Ok(report)
}

/// Single-frequency multi-frequency CPQR vs Gram-Schmidt CPQR pivot sets.
pub fn check_cpqr_pivots(cases: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("CPQR pivot set vs reference");
    for case in 0..cases {
        let m = rng.random_range(1..=4usize);
        let n = rng.random_range(m.max(2)..=64usize);
        let phi = DMatrix::from_fn(n, m, |_, _| cgauss(&mut rng));
        let basis = EigBasis::new(0, vec![0], vec![phi.clone()])?;
        let fast = mf_cpqr(&basis)?;
        let (reference, _) = reference_cpqr(&phi.transpose());
        let mut a = fast.pivots().to_vec();
        let mut b = reference.clone();
        a.sort_unstable();
        b.sort_unstable();
        report.record(a == b, || format!("case {case}: N={n} M={m} pivots {:?} vs {:?}", fast.pivots(), reference));
    }
    Ok(report)
}

/// Factorization properties on random bases over `k = -K..=K`: unitary `Q`,
/// `Q R` reproduces the transposed basis, and the pivot permutation is the
/// same at every frequency. Returns the report and the worst residuals seen.
pub fn check_factorization(cases: usize, seed: u64) -> Result<(CheckReport, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport::new("multi-frequency CPQR factorization");
    let (mut worst_unitary, mut worst_recon) = (0.0f64, 0.0f64);
    for case in 0..cases {
        let m = rng.random_range(1..=4usize);
        let n = rng.random_range(m.max(2)..=64usize);
        let k_max = rng.random_range(0..=8usize);
        let freqs: Vec<i32> = (-(k_max as i32)..=k_max as i32).collect();
        let phi: Vec<DMatrix<Complex64>> = freqs
            .iter()
            .map(|_| DMatrix::from_fn(n, m, |_, _| cgauss(&mut rng)).qr().q())
            .collect();
        let basis = EigBasis::new(k_max, freqs.clone(), phi)?;
        let f = mf_cpqr(&basis)?;
        let mut sorted = f.permutation().to_vec();
        sorted.sort_unstable();
        let mut ok = sorted == (0..n).collect::<Vec<_>>();
        for &k in &freqs {
            let q = f.q(k).expect("frequency present");
            let r = f.r(k).expect("frequency present");
            let unitary = (q.adjoint() * q - DMatrix::identity(m, m)).norm();
            let recon = (q * r - basis.get(k).unwrap().transpose()).norm();
            worst_unitary = worst_unitary.max(unitary);
            worst_recon = worst_recon.max(recon);
            ok &= unitary <= 1e-10 && recon <= 1e-10;
            // Shared permutation: R in pivoted order is upper triangular at
            // every frequency for the single permutation returned.
            let rp = f.r_pivoted(k).unwrap();
            let triangular = (0..m).all(|i| (0..i).all(|j| rp[(i, j)] == Complex64::new(0.0, 0.0)));
            ok &= triangular;
        }
        report.record(ok, || format!("case {case}: N={n} M={m} K_max={k_max}"));
    }
    Ok((report, worst_unitary, worst_recon))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_runs_pass() {
        assert!(check_projection(20, 1).unwrap().passed());
        assert!(check_argmax(20, 2).unwrap().passed());
        assert!(check_cpqr_pivots(20, 3).unwrap().passed());
        assert!(check_factorization(10, 4).unwrap().0.passed());
    }
}
