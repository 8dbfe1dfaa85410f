//! Exact-recovery indicator and the phase synchronization error after
//! per-cluster global phase alignment.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::model::{GroundTruth, Phases};
use crate::spectral::Estimate;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub exact_recovery: bool,
    /// Largest wrapped angular error over all nodes, in `[0, pi]`.
    pub eps: f64,
    /// Alignment shift per true cluster.
    pub shifts: Vec<f64>,
}

pub fn evaluate(est: &Estimate, truth: &GroundTruth) -> TrialOutcome {
    let (eps, shifts) = eps(est, truth);
    TrialOutcome { exact_recovery: exact_recovery(&est.assignment, &truth.assignment), eps, shifts }
}

/// True iff both labelings induce the same partition of the nodes.
pub fn exact_recovery(estimated: &[usize], truth: &[usize]) -> bool {
    if estimated.len() != truth.len() {
        return false;
    }
    let mut forward = HashMap::new();
    let mut backward = HashMap::new();
    estimated.iter().zip(truth).all(|(&e, &t)| {
        *forward.entry(e).or_insert(t) == t && *backward.entry(t).or_insert(e) == e
    })
}

/// `min(d, 2pi - d)` for `d = (estimate + shift - truth) mod 2pi`.
pub fn wrapped_error(estimate: f64, shift: f64, truth: f64) -> f64 {
    let d = (estimate + shift - truth).rem_euclid(TAU);
    d.min(TAU - d).clamp(0.0, PI)
}

/// Phase error with nodes grouped by their true cluster. Each cluster gets
/// the global shift minimizing `|| exp(i (est + g)) - exp(i truth) ||`: over
/// the common grid when both phase vectors live on the same grid, otherwise
/// in closed form `g = arg sum exp(i (truth - est))`.
pub fn eps(est: &Estimate, truth: &GroundTruth) -> (f64, Vec<f64>) {
    let mut worst = 0.0f64;
    let mut shifts = Vec::with_capacity(truth.m);
    for members in truth.clusters() {
        let (shift, err) = match (&est.phases, &truth.phases) {
            (Phases::Grid { size: a, index: ei }, Phases::Grid { size: b, index: ti }) if a == b => {
                grid_alignment(*a, members.iter().map(|&i| (ei[i], ti[i])))
            }
            _ => continuous_alignment(members.iter().map(|&i| (est.phases.angle(i), truth.phases.angle(i)))),
        };
        worst = worst.max(err);
        shifts.push(shift);
    }
    (worst, shifts)
}

fn grid_alignment(size: usize, pairs: impl Iterator<Item = (u32, u32)>) -> (f64, f64) {
    // hist[d] = #nodes with truth - est = d (mod size)
    let mut hist = vec![0usize; size];
    for (e, t) in pairs {
        hist[(t as usize + size - e as usize) % size] += 1;
    }
    let mut best = (0usize, f64::NEG_INFINITY);
    for g in 0..size {
        let score: f64 = hist
            .iter()
            .enumerate()
            .filter(|(_, &h)| h > 0)
            .map(|(d, &h)| h as f64 * (TAU * ((d + size - g) % size) as f64 / size as f64).cos())
            .sum();
        if score > best.1 + 1e-9 {
            best = (g, score);
        }
    }
    let g = best.0;
    let err = hist
        .iter()
        .enumerate()
        .filter(|(_, &h)| h > 0)
        .map(|(d, _)| {
            let off = (d + size - g) % size;
            off.min(size - off)
        })
        .max()
        .unwrap_or(0);
    (TAU * g as f64 / size as f64, TAU * err as f64 / size as f64)
}

fn continuous_alignment(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> (f64, f64) {
    let sum: Complex64 = pairs.clone().map(|(e, t)| Complex64::cis(t - e)).sum();
    let shift = if sum.norm() == 0.0 { 0.0 } else { sum.arg().rem_euclid(TAU) };
    let err = pairs.map(|(e, t)| wrapped_error(e, shift, t)).fold(0.0, f64::max);
    (shift, err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AngleMode, Phases};
    use crate::spectral::Method;
    use proptest::prelude::*;

    fn est(assignment: Vec<usize>, phases: Phases) -> Estimate {
        Estimate { m: 2, assignment, phases, mode: AngleMode::Discrete, method: Method::MfCpqr }
    }

    #[test]
    fn recovery_is_label_invariant() {
        let truth = [0, 0, 1, 1, 2, 2];
        assert!(exact_recovery(&truth, &truth));
        assert!(exact_recovery(&[2, 2, 0, 0, 1, 1], &truth));
        assert!(!exact_recovery(&[0, 1, 1, 1, 2, 2], &truth));
        assert!(!exact_recovery(&[0, 0, 0, 0, 1, 1], &truth));
    }

    #[test]
    fn grid_shift_is_removed() {
        let truth = GroundTruth {
            m: 2,
            assignment: vec![0, 0, 1, 1],
            phases: Phases::Grid { size: 9, index: vec![0, 4, 7, 8] },
        };
        // cluster 0 shifted by +2, cluster 1 by +5
        let e = est(vec![1, 1, 0, 0], Phases::Grid { size: 9, index: vec![2, 6, 3, 4] });
        let (err, shifts) = eps(&e, &truth);
        assert_eq!(err, 0.0);
        assert!((shifts[0] - TAU * 7.0 / 9.0).abs() < 1e-12);
        assert!((shifts[1] - TAU * 4.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn wrapped_error_crosses_zero() {
        assert!((wrapped_error(0.1, 0.0, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert!((wrapped_error(3.0, 0.0, 3.0 + PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn continuous_shift_is_removed() {
        let truth = GroundTruth {
            m: 1,
            assignment: vec![0, 0, 0],
            phases: Phases::Radians(vec![0.5, 2.0, 6.0]),
        };
        let e = est(vec![0, 0, 0], Phases::Radians(vec![1.5, 3.0, 7.0 - TAU]));
        let (err, shifts) = eps(&e, &truth);
        assert!(err < 1e-12);
        assert!((shifts[0] - (TAU - 1.0)).abs() < 1e-12);
    }

    fn brute_grid_shift(size: usize, est: &[u32], truth: &[u32]) -> usize {
        // argmin_g || exp(i(est + g)) - exp(i truth) ||, first minimizer
        let mut best = (0, f64::INFINITY);
        for g in 0..size {
            let d: f64 = est
                .iter()
                .zip(truth)
                .map(|(&e, &t)| {
                    let a = TAU * (e as usize + g) as f64 / size as f64;
                    let b = TAU * t as f64 / size as f64;
                    (Complex64::cis(a) - Complex64::cis(b)).norm_sqr()
                })
                .sum::<f64>()
                .sqrt();
            if d < best.1 - 1e-9 {
                best = (g, d);
            }
        }
        best.0
    }

    proptest! {
        #[test]
        fn grid_shift_matches_exhaustive_search(k_max in 1usize..8, est in prop::collection::vec(0u32..64, 5), truth in prop::collection::vec(0u32..64, 5)) {
            let size = 2 * k_max + 1;
            let est: Vec<u32> = est.iter().map(|e| e % size as u32).collect();
            let truth: Vec<u32> = truth.iter().map(|t| t % size as u32).collect();
            let (shift, _) = grid_alignment(size, est.iter().copied().zip(truth.iter().copied()));
            let g = brute_grid_shift(size, &est, &truth);
            prop_assert!((shift - TAU * g as f64 / size as f64).abs() < 1e-12);
        }

        #[test]
        fn continuous_shift_within_one_cell_of_grid_search(angles in prop::collection::vec((0.0..TAU, 0.0..0.8), 6)) {
            let pairs: Vec<(f64, f64)> = angles.iter().map(|&(t, noise): &(f64, f64)| ((t + 1.3 + noise).rem_euclid(TAU), t)).collect();
            let (shift, _) = continuous_alignment(pairs.iter().copied());
            let cells = 4096;
            let mut best = (0, f64::INFINITY);
            for g in 0..cells {
                let gg = TAU * g as f64 / cells as f64;
                let d: f64 = pairs.iter().map(|&(e, t)| (Complex64::cis(e + gg) - Complex64::cis(t)).norm_sqr()).sum();
                if d < best.1 {
                    best = (g, d);
                }
            }
            let grid_shift = TAU * best.0 as f64 / cells as f64;
            prop_assert!(wrapped_error(shift, 0.0, grid_shift) <= TAU / cells as f64 + 1e-12);
        }

        #[test]
        fn error_is_bounded_and_shift_invariant(est in prop::collection::vec(0.0..TAU, 8), truth in prop::collection::vec(0.0..TAU, 8), c in 0.0..TAU) {
            let t = GroundTruth { m: 2, assignment: vec![0, 1, 0, 1, 0, 1, 0, 1], phases: Phases::Radians(truth) };
            let a = Estimate { m: 2, assignment: t.assignment.clone(), phases: Phases::Radians(est.clone()), mode: AngleMode::Continuous, method: Method::MfGpm };
            let shifted = Estimate { phases: Phases::Radians(est.iter().map(|e| (e + c).rem_euclid(TAU)).collect()), ..a.clone() };
            let (e1, _) = eps(&a, &t);
            let (e2, _) = eps(&shifted, &t);
            prop_assert!((0.0..=PI).contains(&e1));
            prop_assert!((e1 - e2).abs() < 1e-9);
        }
    }
}
