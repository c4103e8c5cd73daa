//! Cohort-based score normalization and demographic fairness evaluation for
//! verification score tables.
//!
//! The crate works entirely on similarity-score tables: no feature
//! extraction, no model training. It provides
//!
//! - nine normalization methods (subject-, subject+demographic- and
//!   demographic-grouped standardization, per-demographic impostor
//!   standardization, Platt scaling, and a genuine/impostor CDF combination),
//! - error rates (FMR/FNMR/TMR), operating-point selection, and a
//!   worst-case-to-geometric-mean fairness metric with its FMR/FNMR factor
//!   decomposition,
//! - protocol tooling: CSV score-table ingestion, distribution-preserving
//!   impostor subsampling, seeded random pair generation, replicate splits,
//! - a seedable synthetic generator of biased score ecosystems for testing.
//!
//! Everything is deterministic given inputs and seeds.

pub mod error;
pub mod metrics;
pub mod model;
pub mod normalizers;
pub mod protocols;
pub mod rng;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
pub use metrics::{FairnessReport, RateSet, WermConfig};
pub use model::{
    DemographicAxis, DemographicLabel, PairType, ScoreRecord, ScoreTable, TableKind, TableManifest,
};
pub use normalizers::{ErrorMode, FitConfig, MethodId, NormKey, NormalizerModel};
pub use stats::{fit_normal_stats, normal_cdf, standardize, NormalStats};
