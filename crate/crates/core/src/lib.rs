//! Realized Laplace transforms for discretely observed pure-jump semimartingales.
//!
//! The crate estimates the Laplace transform of the stochastic scale (the
//! time-change) of a process observed on an equidistant high-frequency grid,
//! together with the inference machinery around it:
//!
//! - [`sim`]: symmetric stable and tempered stable drivers, exact CIR scale,
//!   and the composite `dX = V^{1/β} dL` Monte Carlo model.
//! - [`transform`]: the realized Laplace transform, its differenced variant,
//!   fixed-span variances, per-day block statistics, HAC long-run covariance
//!   and the plug-in correction for an estimated activity index.
//! - [`activity`]: two-scale power-variation estimator of the activity index.
//! - [`fit`]: minimum-distance fit of the tempered stable time-change law with
//!   sandwich standard errors.
//! - [`mc`]: replication harness with reproducible per-replication streams.
//!
//! Data-parallel loops (Monte Carlo replications, bootstrap resamples) run on
//! rayon when the `parallel` feature is enabled and fall back to sequential
//! iteration otherwise; results never depend on the worker count.

pub mod activity;
pub mod error;
pub mod exec;
pub mod fit;
pub mod ingest;
pub mod mc;
mod numeric;
pub mod path;
pub mod rng;
pub mod sim;
pub mod transform;

pub use error::{Error, Result};
pub use exec::Execution;
pub use path::PathGrid;
pub use rng::RngStream;
