//! Signature-based stochastic volatility models, end to end.
//!
//! The volatility process is a linear combination of the truncated signature
//! of time-augmented Brownian motion: `Σ_t = ⟨σ_t, 𝕎̂_t⟩`. This crate
//! provides
//!
//! - exact arithmetic on the truncated free tensor algebra ([`algebra`]),
//! - truncated path signatures and the expected signature ([`signature`]),
//! - exact and regressed tensor representations of classical volatility
//!   dynamics ([`models`]),
//! - the backward tensor-valued Riccati equation for the joint
//!   characteristic functional of log-price and integrated variance
//!   ([`riccati`]),
//! - Fourier pricing of European and geometric Asian options and
//!   q-volatility swaps with a Black–Scholes control variate ([`fourier`]),
//! - Monte Carlo engines and oracles ([`montecarlo`], [`oracles`]),
//! - quadratic hedging via martingale-representation weights ([`hedging`]),
//! - implied-vol surface calibration by differential evolution
//!   ([`calibration`]).

pub mod algebra;
pub mod calibration;
pub mod config;
pub mod error;
pub mod fourier;
pub mod hedging;
pub mod models;
pub mod montecarlo;
pub mod oracles;
pub mod quadrature;
pub mod riccati;
pub mod rng;
pub mod signature;

pub use error::{Result, SigVolError};
