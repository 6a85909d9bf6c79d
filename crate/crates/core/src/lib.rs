//! Decision-theoretic uncertainty quantification for epidemic models.
//!
//! Uncertainty about an unknown `z` is the minimised expected loss of the
//! best available estimate. Given a fitted model and a predictive model for
//! data that could still be collected, the crate computes the uncertainty
//! reduction from realised data, the expected uncertainty reduction from
//! simulated data, and checks whether the predictive is coherent with the
//! fitted model (the condition under which the expected reduction is
//! non-negative).
//!
//! Model suites:
//!
//! * [`prevalence`]: binomial and hypergeometric prevalence estimation.
//! * [`renewal`]: Poisson renewal `R_t` estimation, with and without
//!   underreporting.
//! * [`surveillance`]: a joint cases/wastewater model and the
//!   full-population sampling study.
//! * [`voi`]: EVSI, EVPI, EIG and Fisher information in terms of the engine.
//!
//! Replicate loops run through [`exec`], which uses rayon when the
//! `parallel` feature is enabled and falls back to a sequential loop
//! otherwise. Results never depend on the execution mode.

pub mod decision;
pub mod distributions;
pub mod engine;
mod error;
pub mod exec;
pub mod numeric;
mod particle;
pub mod prevalence;
pub mod renewal;
pub mod rng;
pub mod surveillance;
pub mod voi;

pub use decision::{Action, ActionSpace, BayesAct, EmpiricalLoss, LossFunction};
pub use distributions::{Distribution, Law};
pub use engine::{CoherenceReport, EurResult, MonteCarlo, PosteriorModel, PredictiveModel};
pub use error::{Error, Result};
pub use exec::Execution;
pub use rng::RandomSeed;
