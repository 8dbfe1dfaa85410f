//! Per-frequency top-M eigenvectors, the one-step Householder QR and the
//! multi-frequency column-pivoted QR with a pivot order shared by all
//! frequencies.

mod cpqr;
mod eigen;
mod householder;

pub use cpqr::{mf_cpqr, MfCpqrResult};
pub use eigen::{top_eigenpairs, top_m_eigvecs, EigBasis, EigenOptions};
pub(crate) use eigen::dense_top_all;
pub use householder::householder_step;
pub(crate) use householder::reflect_trailing;

use crate::error::{Error, Result};

/// Which frequencies of the stack an algorithm sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FrequencySet {
    /// Every `k` in `-k_max..=k_max`.
    #[default]
    All,
    /// Every `k` except `0` (the adjacency carries no phase information).
    NonZero,
    /// Only `k = 1`; the single-frequency baselines.
    Fundamental,
}

impl FrequencySet {
    pub fn frequencies(self, k_max: usize) -> Result<Vec<i32>> {
        let k = k_max as i32;
        match self {
            FrequencySet::All => Ok((-k..=k).collect()),
            FrequencySet::NonZero => Ok((-k..=k).filter(|&f| f != 0).collect()),
            FrequencySet::Fundamental if k_max >= 1 => Ok(vec![1]),
            FrequencySet::Fundamental => Err(Error::params("k = 1 requires k_max >= 1")),
        }
    }
}
