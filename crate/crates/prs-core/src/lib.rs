//! Desk-scale simulation toolkit for predictive relay selection (PRS) in
//! dual-hop decode-and-forward cooperative networks.
//!
//! The crate covers the full evaluation chain:
//!
//! * [`fading`] — Jakes-correlated Rayleigh channel synthesis and the
//!   theoretical correlation of outdated CSI;
//! * [`recurrent`] — a minimal deep-learning engine (dense/RNN/LSTM/GRU
//!   layers, truncated BPTT, Adam) sized for channel prediction;
//! * [`predictor`] — magnitude-only D-step-ahead channel prediction built on
//!   the engine, with MSE/correlation reporting;
//! * [`cooperative`] — decoding-subset formation, relay selection under
//!   perfect/outdated/predicted CSI, opportunistic space-time coding, and
//!   Monte-Carlo outage/capacity estimation;
//! * [`contention`] — the distributed timer-based selection procedure at
//!   frame level (estimate/predict/buffer pipeline plus collision detection);
//! * [`complexity`] — operation-count and FLOPS bookkeeping for deployed
//!   predictors.
//!
//! All numeric kernels are generic over the scalar type via [`Real`]
//! (`f32` or `f64`); the aliases below pin the common instantiations.

pub mod complexity;
pub mod contention;
pub mod cooperative;
pub mod error;
pub mod fading;
pub mod predictor;
pub mod recurrent;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision fading trace (the default for simulation work).
pub type Trace64 = fading::FadingTrace<f64>;
/// Single-precision fading trace.
pub type Trace32 = fading::FadingTrace<f32>;
/// Double-precision recurrent network.
pub type Net64 = recurrent::RecurrentNet<f64>;
/// Single-precision recurrent network.
pub type Net32 = recurrent::RecurrentNet<f32>;
/// Double-precision trained channel predictor.
pub type Predictor64 = predictor::TrainedPredictor<f64>;
