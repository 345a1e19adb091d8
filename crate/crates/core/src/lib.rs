//! Dependence analysis of signed traded-volume imbalances between stocks.
//!
//! The crate covers the full chain from tick data to model comparison:
//!
//! * [`market`] — trade-sign classification, per-minute aggregation of volume
//!   imbalances and local noise intensities, session filters.
//! * [`empirical`] — quantile transforms, binned copula densities, corner
//!   asymmetries, conditioning on local noise intensity.
//! * [`models`] — bivariate K copula and Gaussian copula densities, marginal
//!   inversion, least-squares fitting, parameter scans.
//! * [`synth`] — seeded generators for K-distributed samples and tick streams
//!   with configurable volume laws, used as ground-truth oracles.

pub mod empirical;
pub mod error;
pub mod market;
pub mod models;
pub mod synth;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
