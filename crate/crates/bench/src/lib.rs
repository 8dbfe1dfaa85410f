//! Phase-diagram experiments over the `(alpha, beta)` plane for the `sbmph`
//! recovery methods, plus the table and matrix writers behind the `sbmph` CLI.

pub mod config;
pub mod emit;
pub mod error;
pub mod grid;
pub mod oracle_check;

pub use emit::{emit_results, format_table, parse_table};
pub use error::{BenchError, Result};
pub use grid::{run_grid, run_grid_with_threads, CellResult, ExperimentGrid, Sweep};
