//! bdpkit: numerical toolkit for population-size-dependent birth-and-death
//! processes.
//!
//! The crate covers the full workflow for count-data population models:
//!
//! - [`models`]: built-in and custom birth/death rate functions, carrying
//!   capacities.
//! - [`simulate`]: exact and approximate sample-path generation with
//!   reproducible seeded substreams.
//! - [`linalg`]: truncated generators, dense matrix exponentials, and the
//!   augmented-exponential integrals behind the EM E-step.
//! - [`laplace`]: continued-fraction Laplace transforms of transition
//!   functions and numerical inversion.
//! - [`probability`]: transition probabilities by nine methods.
//! - [`optimize`]: bounded/constrained local and differential-evolution
//!   minimization plus finite-difference derivatives.
//! - [`estimate`]: continuous-data MLE and the dnm/em/lse/abc frameworks for
//!   discretely-observed data.
//! - [`uncertainty`]: asymptotic and bootstrap covariances, confidence
//!   ellipses, and forecast bands.

pub mod error;
pub mod laplace;
pub mod linalg;
pub mod models;
pub mod optimize;
pub mod probability;
pub mod rng;
pub mod simulate;
pub mod estimate;
pub mod uncertainty;

pub use error::{Error, Result};
pub use models::ModelSpec;
