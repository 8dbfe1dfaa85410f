use std::path::Path;

use sbmph::{AngleMode, Method};
use serde::Deserialize;

use crate::error::{BenchError, Result};
use crate::grid::{ExperimentGrid, Sweep};

/// Grid settings read from a TOML file. Every key is optional; present keys
/// override the corresponding command-line values.
///
/// ```toml
/// n = 300
/// m = 2
/// k_max = 8
/// mode = "discrete"
/// alpha = { min = 2.0, max = 20.0, steps = 6 }
/// methods = ["MF-CPQR", "CPQR-SF"]
/// ```
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub k_max: Option<usize>,
    pub mode: Option<String>,
    pub zero_pad_factor: Option<usize>,
    pub alpha: Option<Sweep>,
    pub beta: Option<Sweep>,
    pub trials: Option<usize>,
    pub methods: Option<Vec<String>>,
    pub gpm_iters: Option<usize>,
    pub seed: Option<u64>,
    pub timing: Option<bool>,
}

impl GridFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn apply(self, grid: &mut ExperimentGrid) -> Result<()> {
        let cfg = |e: sbmph::Error| BenchError::Config(e.to_string());
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {$(
                if let Some(v) = self.$field { grid.$target = v; }
            )*};
        }
        set!(n => n, m => m, k_max => k_max, zero_pad_factor => zero_pad_factor,
             alpha => alpha, beta => beta, trials => trials, gpm_iters => gpm_iters,
             seed => base_seed, timing => record_timing);
        if let Some(mode) = self.mode {
            grid.mode = mode.parse::<AngleMode>().map_err(cfg)?;
        }
        if let Some(methods) = self.methods {
            grid.methods = methods.iter().map(|s| s.parse::<Method>()).collect::<sbmph::Result<_>>().map_err(cfg)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_only_present_keys() {
        let file = GridFile::parse(
            "n = 120\nmode = \"continuous\"\nbeta = { min = 1.0, max = 3.0, steps = 3 }\nmethods = [\"MF-GPM\"]\n",
        )
        .unwrap();
        let mut grid = ExperimentGrid::default();
        file.apply(&mut grid).unwrap();
        assert_eq!(grid.n, 120);
        assert_eq!(grid.mode, AngleMode::Continuous);
        assert_eq!(grid.beta, Sweep::new(1.0, 3.0, 3));
        assert_eq!(grid.methods, vec![Method::MfGpm]);
        assert_eq!(grid.k_max, ExperimentGrid::default().k_max);
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        assert!(GridFile::parse("bogus = 1").is_err());
        let file = GridFile::parse("methods = [\"nope\"]").unwrap();
        assert!(matches!(file.apply(&mut ExperimentGrid::default()), Err(BenchError::Config(_))));
    }
}
