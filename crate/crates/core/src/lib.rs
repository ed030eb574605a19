//! Simulation and numerical verification of the fluctuations of the giant
//! component in the Erdős–Rényi graph process.
//!
//! * [`analytic`]: survival probability, scale/clock functions, kernel, SDE
//!   coefficients.
//! * [`graphproc`]: coupled edge streams, union-find trajectories, rescaled
//!   fluctuation paths.
//! * [`bgw`]: binomial Galton–Watson total progeny and the component-size
//!   domination bounds.
//! * [`sde`]: Euler–Maruyama and exact sampling of the limit process.
//! * [`appendixlab`]: connectivity probabilities, component counts,
//!   large-deviation functions and tail checks.
//! * [`harness`]: Monte Carlo campaigns, streaming statistics and verifiers.

// `!(x > a)` is deliberate: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod appendixlab;
pub mod bgw;
pub mod error;
pub mod graphproc;
pub mod harness;
pub mod io;
pub mod rng;
pub mod sde;
pub mod stats;

pub use analytic::{ScalingBundle, SdeCoefficients};
pub use bgw::BgwParams;
pub use error::{Error, Result};
pub use graphproc::{EdgeStream, FluctuationPath, Trajectory};
pub use harness::{CampaignConfig, TolerancePolicy};
pub use sde::{SdeMode, SdePath};
pub use stats::McStats;
