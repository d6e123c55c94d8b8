//! Simulation and verification toolkit for the stationary behaviour of
//! constant-stepsize stochastic approximation.
//!
//! The iterate `X_{k+1} = X_k + α (F(X_k) + w_k)` does not converge to the
//! root `x*` of `F` when `α` is held fixed; it settles into a stationary law.
//! This crate simulates that law, predicts its small-`α` limit for the
//! centered scaled iterate `Y = (X - x*) / g(α)` and checks the prediction
//! statistically.
//!
//! Module map:
//!
//! * [`config`]: experiment configuration, text format and validation.
//! * [`rng`]: reproducible, stream-splittable random number generation.
//! * [`drift`]: catalog of drift operators `F` with root and derivative data.
//! * [`noise`]: zero-mean i.i.d. noise with prescribed covariance.
//! * [`simulate`]: ensembles of independent chains and moment summaries.
//! * [`lyapunov`]: predicted limiting covariance from the Lyapunov equation.
//! * [`scaling`]: discovery of the power-law scaling exponent.
//! * [`stats`]: density estimation, characteristic-function residuals,
//!   goodness of fit and log-density regressions.
//! * [`sde`]: Euler–Maruyama discretization and its comparison with SA.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod drift;
pub mod error;
mod linalg;
pub mod lyapunov;
pub mod noise;
pub mod rng;
pub mod scaling;
pub mod sde;
pub mod simulate;
pub mod stats;
pub mod types;

pub use error::{Error, Result};
pub use types::{Matrix, Samples, ScalingFn, StepSize, Vector};
