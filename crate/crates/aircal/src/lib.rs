//! Proxy-based remote calibration for hierarchical air-quality networks.
//!
//! A sparse layer of well-maintained reference stations provides "proxy"
//! data against which any other site can be checked and corrected without
//! co-location. The library covers the whole pipeline:
//!
//! - [`proxy`]: proxy selection by land-use similarity (kNN), geographic
//!   proximity (haversine), or histogram divergence (D_KL ranking)
//! - [`drift`]: the rolling-window three-test framework (KS, slope,
//!   intercept) with alarm and failure state tracking
//! - [`correct`]: affine correction with moment-matched parameters
//! - [`met`]: wind-conditioned alarm binning for diagnostics
//! - [`sim`]: a seeded synthetic network generator used as the test oracle
//! - [`io`]: deterministic CSV ingestion and emission
//!
//! The numerical kernel in [`stats`] is generic over the scalar type via
//! `num_traits::Float`; the pipeline itself works in `f64` ppb throughout
//! (see the aliases at the crate root).

pub mod config;
pub mod correct;
pub mod drift;
pub mod io;
pub mod met;
pub mod model;
pub mod proxy;
pub mod sim;
pub mod stats;

/// NO2 mixing ratio, parts-per-billion by volume.
pub type Ppb = f64;

/// Histogram over ppb concentrations, as used by the pipeline.
pub type Histogram = stats::Histogram<Ppb>;

/// Two-sample KS result over ppb samples.
pub type KsResult = stats::KsResult<Ppb>;

pub use config::FrameworkConfig;
pub use model::{HourlySeries, LandUseFeatures, NetworkDataset, ProxyAssignment, SiteRecord};
