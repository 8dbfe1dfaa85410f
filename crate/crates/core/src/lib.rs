//! Joint community detection and phase synchronization on the stochastic
//! block model with relative phase.
//!
//! Every node carries a cluster label and an unknown phase. Edges inside a
//! cluster carry the exact relative phase, edges across clusters carry
//! uniform noise. Recovery works on the stack of entry-wise powers `A^(k)` of
//! the observation matrix, either with a spectral method built on a
//! column-pivoted QR shared across frequencies ([`spectral`]) or with an
//! iterative generalized power method ([`gpm`]). Restricting either to
//! `k = 1` gives the single-frequency baselines.

pub mod assignment;
pub mod error;
pub mod freqlinalg;
pub mod gpm;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod spectral;

pub use error::{Error, Result};
pub use freqlinalg::FrequencySet;
pub use model::{AngleMode, FrequencyStack, GroundTruth, ModelParams, ObservationMatrix, Phases};
pub use spectral::{Estimate, Method};
