//! Estimating a discrete distribution on `[K]` with guarantees in KL divergence.
//!
//! The crate is organised bottom-up:
//!
//! - [`dist`]: probability vectors, i.i.d. sampling with reproducible streams,
//!   and prefix counts.
//! - [`divergence`]: extended-real divergences (KL, χ², Hellinger², ℓ1) and
//!   evaluators for the inequalities relating them.
//! - [`estimators`]: MLE, add-γ, adaptive add-γᵢ, and the suffix-averaged
//!   online-to-batch estimator.
//! - [`adversarial`]: estimator-dependent attack instances and the hard
//!   family used for the `log K · log(1/δ)` lower bound.
//! - [`harness`]: Monte Carlo risk quantiles, exact enumeration oracles,
//!   ratio diagnostics, and parameter sweeps.
//!
//! Monte Carlo trials run on rayon when the `parallel` feature is enabled
//! (the default); see [`exec`].

pub mod adversarial;
pub mod dist;
pub mod divergence;
mod error;
pub mod estimators;
pub mod exec;
pub mod format;
pub mod harness;

pub use error::{Error, Result};

pub use dist::{ProbVec, SampleSeq, Seed};
pub use divergence::ExtReal;
pub use estimators::{EstimatorSpec, GammaProfile};
