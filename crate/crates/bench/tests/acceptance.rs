//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion, and exits nonzero if any failed.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use sbmph::freqlinalg::{mf_cpqr, top_m_eigvecs, EigenOptions};
use sbmph::gpm::{gpm_step, init_from_spectral_output, run_gpm_from, GpmConfig, DEFAULT_ITERATIONS};
use sbmph::model::{frequency_stack, generate};
use sbmph::spectral::{recover_from_factorization, SpectralConfig};
use sbmph::{AngleMode, FrequencySet, Method, ModelParams};
use sbmph_bench::grid::{run_methods, trial_seed, CellResult};
use sbmph_bench::oracle_check::{check_argmax, check_cpqr_pivots, check_factorization, check_projection};
use sbmph_bench::{emit_results, run_grid, run_grid_with_threads, ExperimentGrid};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn desk_grid() -> ExperimentGrid {
    ExperimentGrid { record_timing: false, ..ExperimentGrid::default() }
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sbmph-acceptance-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn clean_case_exactness() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut trials = 0;
    for n in [60usize, 300] {
        for m in [2usize, 3] {
            for k_max in [4usize, 16] {
                let grid = ExperimentGrid { n, m, k_max, mode: AngleMode::Discrete, ..desk_grid() };
                let outcomes: Vec<_> = (0..20u64)
                    .into_par_iter()
                    .map(|t| {
                        let params = ModelParams { n, m, p: 1.0, q: 0.0, k_max, mode: AngleMode::Discrete, seed: 1000 + t };
                        let (truth, obs) = generate(&params).unwrap();
                        run_methods(&frequency_stack(&obs, k_max), &truth, &Method::ALL, &grid).unwrap()
                    })
                    .collect();
                for run in outcomes.iter().flatten() {
                    trials += 1;
                    if !run.outcome.exact_recovery || run.outcome.eps != 0.0 {
                        failures.push(format!("N={n} M={m} K_max={k_max} {}: eps={}", run.method, run.outcome.eps));
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < Duration::from_secs(10);
    outcome(
        ok,
        format!(
            "{} method-trials, {} failures{}, {:.2} s (limit 10 s)",
            trials,
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default(),
            elapsed.as_secs_f64()
        ),
    )
}

fn factorization_properties() -> Outcome {
    let (report, unitary, recon) = check_factorization(200, 2024).unwrap();
    outcome(report.passed(), format!("{report}; worst unitarity {unitary:.2e}, worst reconstruction {recon:.2e}"))
}

fn oracle_equivalences() -> Outcome {
    let reports = [
        check_projection(500, 11).unwrap(),
        check_argmax(1000, 12).unwrap(),
        check_cpqr_pivots(200, 13).unwrap(),
    ];
    let detail: Vec<String> = reports.iter().map(|r| r.to_string()).collect();
    outcome(reports.iter().all(|r| r.passed()), detail.join("; "))
}

fn srer_of(results: &[CellResult], method: Method) -> Vec<f64> {
    results.iter().filter(|r| r.method == method).map(|r| r.srer).collect()
}

fn mf_dominance(results: &[CellResult], elapsed: Duration) -> Outcome {
    let mut ok = elapsed <= Duration::from_secs(15 * 60);
    let mut detail = Vec::new();
    for (mf, sf) in [(Method::MfCpqr, Method::CpqrSf), (Method::MfGpm, Method::GpmSf)] {
        let (a, b) = (srer_of(results, mf), srer_of(results, sf));
        let cells = a.len();
        let dominated = a.iter().zip(&b).filter(|(x, y)| x >= y).count();
        let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
        ok &= dominated * 10 >= cells * 9 && sa > sb;
        detail.push(format!("{mf} >= {sf} in {dominated}/{cells} cells, summed SRER {sa:.2} vs {sb:.2}"));
    }
    detail.push(format!("grid run {:.1} s (limit 900 s)", elapsed.as_secs_f64()));
    outcome(ok, detail.join("; "))
}

fn k_max_trend() -> Outcome {
    let methods = vec![Method::MfCpqr, Method::MfGpm];
    let mut rows = Vec::new();
    for k_max in [5usize, 10, 20] {
        let grid = ExperimentGrid { k_max, mode: AngleMode::Continuous, methods: methods.clone(), ..desk_grid() };
        rows.push((k_max, grid.trials, run_grid(&grid).unwrap()));
    }
    let mut ok = true;
    let mut detail = Vec::new();
    for &method in &methods {
        let stats: Vec<(usize, f64, f64)> = rows
            .iter()
            .map(|(k, _, res)| {
                let cells: Vec<&CellResult> = res.iter().filter(|r| r.method == method).collect();
                let c = cells.len() as f64;
                (*k, cells.iter().map(|r| r.srer).sum::<f64>() / c, cells.iter().map(|r| r.eps_mean).sum::<f64>() / c)
            })
            .collect();
        let cells = rows[0].2.len() / methods.len();
        let tol = 1.0 / (cells * rows[0].1) as f64;
        for w in stats.windows(2) {
            ok &= w[1].1 >= w[0].1 - tol - 1e-12;
            ok &= w[1].2 <= w[0].2 * 1.05;
        }
        let text: Vec<String> = stats.iter().map(|(k, s, e)| format!("K={k}: SRER {s:.4} EPS {e:.4}")).collect();
        detail.push(format!("{method} [{}]", text.join(", ")));
    }
    outcome(ok, detail.join("; "))
}

fn gpm_protocol() -> Outcome {
    let grid = desk_grid();
    let mut ok = DEFAULT_ITERATIONS == 50
        && GpmConfig::new(AngleMode::Discrete).iterations == 50
        && grid.gpm_iters == 50;
    let cells = grid.cells();
    let diffs: Vec<(usize, usize)> = (0..100usize)
        .into_par_iter()
        .map(|t| {
            let (ai, bi, alpha, beta) = cells[t % cells.len()];
            let params = grid.model_params(alpha, beta, trial_seed(grid.base_seed ^ 0x6a09, ai, bi, t));
            let (_, obs) = generate(&params).unwrap();
            let stack = frequency_stack(&obs, grid.k_max);
            let mut differing = 0;
            let mut stopped_early = 0;
            for set in [FrequencySet::All, FrequencySet::Fundamental] {
                let spec_cfg = SpectralConfig::new(grid.mode).with_frequencies(set);
                let basis = top_m_eigvecs(&stack, grid.m, set, &EigenOptions::default()).unwrap();
                let spec = recover_from_factorization(mf_cpqr(&basis).unwrap(), &spec_cfg);
                let init = init_from_spectral_output(&spec).unwrap();
                let mut cfg = GpmConfig::new(grid.mode).with_frequencies(set);
                let early = run_gpm_from(init.clone(), &stack, &cfg).unwrap();
                cfg.early_stop = false;
                let full = run_gpm_from(init, &stack, &cfg).unwrap();
                if early.estimate != full.estimate {
                    differing += 1;
                }
                if early.iterations_run < full.iterations_run {
                    stopped_early += 1;
                }
            }
            (differing, stopped_early)
        })
        .collect();
    let differing: usize = diffs.iter().map(|d| d.0).sum();
    let stopped: usize = diffs.iter().map(|d| d.1).sum();
    ok &= differing == 0;
    outcome(ok, format!("T = {DEFAULT_ITERATIONS}; early stop changed {differing}/200 runs (stopped early in {stopped})"))
}

fn files_identical(a: &Path, b: &Path) -> Result<usize, String> {
    let mut count = 0;
    for entry in fs::read_dir(a).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name();
        let (x, y) = (fs::read(a.join(&name)), fs::read(b.join(&name)));
        match (x, y) {
            (Ok(x), Ok(y)) if x == y => count += 1,
            _ => return Err(format!("{name:?} differs")),
        }
    }
    Ok(count)
}

fn complexity_sanity() -> Outcome {
    const RUNS: usize = 5;
    const BATCH: usize = 20;
    let n = 1000;
    let mut times = Vec::new();
    for k_max in [8usize, 16] {
        let params = ModelParams { n, m: 2, p: 10.0 * (n as f64).ln() / n as f64, q: 5.0 * (n as f64).ln() / n as f64, k_max, mode: AngleMode::Discrete, seed: 77 };
        let (_, obs) = generate(&params).unwrap();
        let stack = frequency_stack(&obs, k_max);
        let basis = top_m_eigvecs(&stack, 2, FrequencySet::All, &EigenOptions::default()).unwrap();
        let cfg = GpmConfig::new(AngleMode::Discrete);
        let spec = recover_from_factorization(mf_cpqr(&basis).unwrap(), &cfg.spectral());
        let state = init_from_spectral_output(&spec).unwrap();
        // Warm-up.
        let _ = (mf_cpqr(&basis).unwrap(), gpm_step(&state, &stack, &cfg).unwrap());
        let (mut cpqr, mut step) = (0.0, 0.0);
        for _ in 0..RUNS {
            let t = Instant::now();
            for _ in 0..BATCH {
                std::hint::black_box(mf_cpqr(&basis).unwrap());
            }
            cpqr += t.elapsed().as_secs_f64() / BATCH as f64;
            let t = Instant::now();
            for _ in 0..BATCH {
                std::hint::black_box(gpm_step(&state, &stack, &cfg).unwrap());
            }
            step += t.elapsed().as_secs_f64() / BATCH as f64;
        }
        times.push((cpqr / RUNS as f64, step / RUNS as f64));
    }
    let linear = 33.0 / 17.0;
    let (lo, hi) = (linear / 2.0, linear * 2.0);
    let r_cpqr = times[1].0 / times[0].0;
    let r_step = times[1].1 / times[0].1;
    let ok = (lo..=hi).contains(&r_cpqr) && (lo..=hi).contains(&r_step);
    outcome(
        ok,
        format!(
            "K_max 8->16 at N={n}: mf_cpqr {:.3} -> {:.3} ms (x{r_cpqr:.2}), gpm_step {:.3} -> {:.3} ms (x{r_step:.2}); allowed [{lo:.2}, {hi:.2}]",
            times[0].0 * 1e3,
            times[1].0 * 1e3,
            times[0].1 * 1e3,
            times[1].1 * 1e3
        ),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut report = |name: &'static str, o: Outcome| {
        println!("{} criterion {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o));
    };

    report("1 clean-case exactness", clean_case_exactness());
    report("2 factorization properties", factorization_properties());
    report("3 oracle equivalences", oracle_equivalences());

    // The single-threaded desk grid serves both the dominance and the
    // determinism criteria.
    let grid = desk_grid();
    let start = Instant::now();
    let single = run_grid_with_threads(&grid, 1).unwrap();
    let elapsed = start.elapsed();
    report("4 multi-frequency dominance", mf_dominance(&single, elapsed));

    report("5 K_max trend", k_max_trend());
    report("6 GPM protocol", gpm_protocol());

    let multi = run_grid_with_threads(&grid, 8).unwrap();
    let (a, b) = (scratch("t1"), scratch("t8"));
    emit_results(&grid, &single, &a).unwrap();
    emit_results(&grid, &multi, &b).unwrap();
    let det = match files_identical(&a, &b) {
        Ok(count) => outcome(true, format!("{count} emitted files byte-identical at 1 and 8 threads")),
        Err(e) => outcome(false, e),
    };
    let _ = (fs::remove_dir_all(&a), fs::remove_dir_all(&b));
    report("7 determinism", det);

    report("8 complexity sanity", complexity_sanity());

    let failed = results.iter().filter(|(_, o)| !o.passed).count();
    println!("acceptance: {}/{} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
