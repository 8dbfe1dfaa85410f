use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sbmph::Method;

use crate::error::{BenchError, Result};
use crate::grid::{CellResult, ExperimentGrid};

pub const TABLE_HEADER: &str = "alpha,beta,method,srer,eps_mean,eps_max,time_ms,trials";

/// The long-form results table, one row per (cell, method).
pub fn format_table(results: &[CellResult]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in results {
        writeln!(
            out,
            "{:.6},{:.6},{},{:.6},{:.6},{:.6},{:.6},{}",
            r.alpha, r.beta, r.method, r.srer, r.eps_mean, r.eps_max, r.time_ms, r.trials
        )
        .unwrap();
    }
    out
}

pub fn parse_table(text: &str) -> Result<Vec<CellResult>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(TABLE_HEADER) {
        return Err(BenchError::Config("results table: missing header".into()));
    }
    let mut out = Vec::new();
    for (no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| BenchError::Config(format!("results table line {}: {what}", no + 2));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad("expected 8 fields"));
        }
        let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad("bad number"));
        out.push(CellResult {
            alpha: num(0)?,
            beta: num(1)?,
            method: f[2].parse::<Method>().map_err(|_| bad("unknown method"))?,
            srer: num(3)?,
            eps_mean: num(4)?,
            eps_max: num(5)?,
            time_ms: num(6)?,
            trials: f[7].parse().map_err(|_| bad("bad trial count"))?,
        });
    }
    Ok(out)
}

/// A beta-by-alpha matrix for one method: rows are beta values (ascending),
/// columns alpha values.
pub fn format_matrix(grid: &ExperimentGrid, results: &[CellResult], method: Method, value: impl Fn(&CellResult) -> f64) -> String {
    let alphas = grid.alpha.values();
    let mut out = String::from("beta\\alpha");
    for a in &alphas {
        write!(out, ",{a:.6}").unwrap();
    }
    out.push('\n');
    for (bi, b) in grid.beta.values().iter().enumerate() {
        write!(out, "{b:.6}").unwrap();
        for ai in 0..alphas.len() {
            let idx = (bi * alphas.len() + ai) * grid.methods.len();
            let cell = results[idx..idx + grid.methods.len()]
                .iter()
                .find(|r| r.method == method)
                .expect("method present in grid");
            write!(out, ",{:.6}", value(cell)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn format_manifest(grid: &ExperimentGrid) -> String {
    let methods: Vec<&str> = grid.methods.iter().map(|m| m.as_str()).collect();
    let mut out = String::new();
    let mut kv = |k: &str, v: String| writeln!(out, "{k}={v}").unwrap();
    kv("version", env!("CARGO_PKG_VERSION").to_string());
    kv("n", grid.n.to_string());
    kv("m", grid.m.to_string());
    kv("k_max", grid.k_max.to_string());
    kv("mode", grid.mode.as_str().to_string());
    kv("zero_pad_factor", grid.zero_pad_factor.to_string());
    kv("alpha", format!("{:?}:{:?}:{}", grid.alpha.min, grid.alpha.max, grid.alpha.steps));
    kv("beta", format!("{:?}:{:?}:{}", grid.beta.min, grid.beta.max, grid.beta.steps));
    kv("trials", grid.trials.to_string());
    kv("methods", methods.join(","));
    kv("gpm_iters", grid.gpm_iters.to_string());
    kv("base_seed", grid.base_seed.to_string());
    kv("rng", sbmph::model::RNG_NAME.to_string());
    kv("timing", if grid.record_timing { "measured" } else { "omitted" }.to_string());
    out
}

fn file_stem(method: Method) -> String {
    method.as_str().to_ascii_lowercase()
}

/// Writes `results.csv`, `manifest.txt`, and per-method `srer_*.csv` /
/// `eps_*.csv` matrices into `dir`. Returns the written paths.
pub fn emit_results(grid: &ExperimentGrid, results: &[CellResult], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = vec![
        ("results.csv".to_string(), format_table(results)),
        ("manifest.txt".to_string(), format_manifest(grid)),
    ];
    for &method in &grid.methods {
        files.push((format!("srer_{}.csv", file_stem(method)), format_matrix(grid, results, method, |r| r.srer)));
        files.push((format!("eps_{}.csv", file_stem(method)), format_matrix(grid, results, method, |r| r.eps_mean)));
    }
    let mut paths = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body)?;
        paths.push(path);
    }
    Ok(paths)
}
