//! Simulation and verification toolkit for peer prediction with the
//! bonus-penalty payment (BPP).
//!
//! The crate is organized by concern:
//!
//! - [`sst`]: Bayesian comparison models (parametric link models, Mallows,
//!   noisy sorting, finite mixtures) and stochastic-transitivity checks.
//! - [`dominance`]: joint distributions of three signals and the uniform
//!   dominance test, binary and general finite alphabets.
//! - [`payments`]: the BPP function, admissible assignments and peer selection.
//! - [`strategies`]: report strategies, expected payments, best responses and
//!   symmetric-equilibrium classification.
//! - [`ising`]: Ising models on graphs, exact enumeration, Glauber sampling and
//!   the degree/coupling bounds used for networked data.
//! - [`uniqueness`]: audits of arbitrary three-input payment functions.
//! - [`harness`]: dataset loaders, experiment pipelines, ECDFs and summaries.

pub mod dominance;
pub mod error;
pub mod harness;
pub mod ising;
pub mod payments;
pub mod rng;
pub mod signal;
pub mod sst;
pub mod strategies;
pub mod uniqueness;

pub use error::{Error, Result};
pub use signal::Signal;
